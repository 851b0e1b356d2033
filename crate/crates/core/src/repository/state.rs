use alloc::collections::BTreeMap;
use alloc::sync::Arc;
use alloc::vec::Vec;

use super::{Configuration, EventId, RepoError, Repository};
use crate::conflict::{pushout, ConflictFile, LineId, PartialMorphism};

/// Where a line came from: an event and a line of that event's target.
pub type Key = (EventId, LineId);

/// A computed state together with the provenance of each of its lines.
///
/// Provenance is what lets a line of one state be found again in a larger
/// one: the transition between two states sends a line to the line holding
/// its first surviving key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvaluatedState {
    object: Arc<ConflictFile>,
    provenance: BTreeMap<LineId, Vec<Key>>,
    keys: BTreeMap<Key, LineId>,
}

impl EvaluatedState {
    pub fn empty() -> Self {
        EvaluatedState {
            object: Arc::new(ConflictFile::default()),
            provenance: BTreeMap::new(),
            keys: BTreeMap::new(),
        }
    }

    pub fn object(&self) -> &Arc<ConflictFile> {
        &self.object
    }

    pub fn provenance(&self, id: LineId) -> &[Key] {
        self.provenance.get(&id).map(Vec::as_slice).unwrap_or(&[])
    }

    /// The transition from `self` into a state that contains its history.
    pub fn transport(&self, to: &EvaluatedState) -> PartialMorphism {
        let map = self
            .provenance
            .iter()
            .filter_map(|(v, keys)| keys.iter().find_map(|k| to.keys.get(k)).map(|w| (*v, *w)))
            .collect();
        PartialMorphism::from_parts(self.object.clone(), to.object.clone(), map)
    }

    /// Adds event `e` carrying `t` (whose source is `down`, the state below
    /// `e`) on top of `self`.
    pub(crate) fn extend(
        &self,
        down: &EvaluatedState,
        e: &EventId,
        t: &PartialMorphism,
    ) -> Result<EvaluatedState, RepoError> {
        let u = down.transport(self);
        let merged = pushout(t, &u)?;
        let mut provenance: BTreeMap<LineId, Vec<Key>> = BTreeMap::new();
        for (j, p) in merged.leg_b().map() {
            provenance.entry(*p).or_default().push((e.clone(), *j));
        }
        for (v, p) in merged.leg_c().map() {
            provenance.entry(*p).or_default().extend(self.provenance(*v).iter().cloned());
        }
        let mut keys = BTreeMap::new();
        for (p, ks) in provenance.iter_mut() {
            ks.sort();
            ks.dedup();
            for k in ks.iter() {
                keys.insert(k.clone(), *p);
            }
        }
        Ok(EvaluatedState { object: merged.apex().clone(), provenance, keys })
    }
}

/// Evaluates configurations of one repository, remembering every state it
/// computes.
pub struct Evaluator<'r> {
    repo: &'r Repository,
    memo: BTreeMap<Configuration, Arc<EvaluatedState>>,
}

impl<'r> Evaluator<'r> {
    pub fn new(repo: &'r Repository) -> Self {
        Evaluator { repo, memo: BTreeMap::new() }
    }

    /// The state of a configuration.
    pub fn state(&mut self, x: &Configuration) -> Result<Arc<EvaluatedState>, RepoError> {
        if !self.repo.es.is_configuration(x) {
            return Err(RepoError::NotAConfiguration);
        }
        self.evaluate(x)
    }

    /// The state of any downward-closed set, ignoring conflicts.
    pub fn state_ignoring_conflicts(&mut self, x: &Configuration) -> Result<Arc<EvaluatedState>, RepoError> {
        if !self.repo.es.is_downward_closed(x) {
            return Err(RepoError::NotAConfiguration);
        }
        self.evaluate(x)
    }

    /// Repeatedly removes the smallest maximal event, then replays the
    /// removed events from the first known state.
    pub(crate) fn evaluate(&mut self, x: &Configuration) -> Result<Arc<EvaluatedState>, RepoError> {
        let mut chain: Vec<(Configuration, EventId)> = Vec::new();
        let mut y = x.clone();
        let mut current = loop {
            if y.is_empty() {
                break Arc::new(EvaluatedState::empty());
            }
            if let Some(known) = self.memo.get(&y) {
                break known.clone();
            }
            let maximal = self.repo.es.maximal(&y);
            let e = maximal[0].clone();
            if maximal.len() == 1 {
                break self.repo.principal[&e].clone();
            }
            y.remove(&e);
            chain.push((y.clone(), e));
        };
        while let Some((mut config, e)) = chain.pop() {
            let next = current.extend(&self.repo.down[&e], &e, &self.repo.morphisms[&e])?;
            current = Arc::new(next);
            config.insert(e);
            self.memo.insert(config, current.clone());
        }
        Ok(current)
    }

    /// The transition morphism from `x` to `x ∪ {e}`.
    pub fn transition(&mut self, x: &Configuration, e: &EventId) -> Result<PartialMorphism, RepoError> {
        let mut y = x.clone();
        y.insert(e.clone());
        let from = self.state_ignoring_conflicts(x)?;
        let to = self.state_ignoring_conflicts(&y)?;
        Ok(from.transport(&to))
    }
}
