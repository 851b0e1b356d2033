//! Histories as event structures whose events carry morphisms.
//!
//! Each event `e` carries a morphism from the state below it (the state of
//! the strict causes `↓e`) to the file it produced. The state of a
//! configuration `x` is computed by removing the smallest maximal event `e`,
//! computing the state of the rest, and merging: a pushout of `e`'s morphism
//! against the transition from `↓e` into the rest.
//!
//! Events are stored as text: one `cause <id>` line per cause in ascending
//! order, followed by the canonical morphism encoding. Recorded events are
//! named by the SHA-256 of that text.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt::Write;

use sha2::{Digest, Sha256};

use crate::conflict::{ConflictFile, LineId, ObjectError, PartialMorphism};
use crate::line::{diff, File, Patch};
use crate::render::{encode_morphism, parse_morphism, DecodeError};

mod events;
mod resolve;
mod state;

pub use events::{
    Configuration, EsReport, EsViolation, EventId, EventStructure, TraceGraph, DEFAULT_ENUMERATION_BOUND,
};
pub use resolve::infer_resolution;
pub use state::{EvaluatedState, Evaluator, Key};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RepoError {
    #[error("invalid event id {0:?}")]
    InvalidEventId(String),
    #[error("event {0} already exists")]
    DuplicateEvent(EventId),
    #[error("unknown event {0}")]
    UnknownEvent(EventId),
    #[error("causality is cyclic at {0}")]
    Cyclic(EventId),
    #[error("{events} events exceed the enumeration bound {bound}")]
    TooLarge { events: usize, bound: usize },
    #[error("not a configuration")]
    NotAConfiguration,
    #[error("not a linear extension")]
    NotALinearExtension,
    #[error("the source of event {0} does not match the state below it")]
    BaseMismatch(EventId),
    #[error("the current state is conflicted")]
    ConflictedState,
    #[error("nothing changed")]
    NoChange,
    #[error("event {0} differs between the repositories")]
    EventClash(EventId),
    #[error("malformed event: {0}")]
    MalformedEvent(String),
    #[error(transparent)]
    Object(#[from] ObjectError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
}

/// An event structure with a morphism on every event.
#[derive(Debug, Clone, Default)]
pub struct Repository {
    es: EventStructure,
    morphisms: BTreeMap<EventId, PartialMorphism>,
    // state(↓e) and state(↓e ∪ {e}), filled when `e` is added
    down: BTreeMap<EventId, Arc<EvaluatedState>>,
    principal: BTreeMap<EventId, Arc<EvaluatedState>>,
}

impl PartialEq for Repository {
    fn eq(&self, other: &Self) -> bool {
        self.es == other.es && self.morphisms == other.morphisms
    }
}

impl Eq for Repository {}

/// The stored text of an event.
pub fn encode_event(causes: &BTreeSet<EventId>, morphism: &PartialMorphism) -> String {
    let mut out = String::new();
    for c in causes {
        let _ = writeln!(out, "cause {c}");
    }
    out.push_str(&encode_morphism(morphism));
    out
}

/// The content address of an event text.
pub fn content_id(text: &str) -> EventId {
    EventId::new(&hex::encode(Sha256::digest(text.as_bytes()))).expect("hex is a valid id")
}

/// Splits an event text into its causes and the morphism encoding.
pub fn split_event(text: &str) -> Result<(BTreeSet<EventId>, &str), RepoError> {
    let mut causes = BTreeSet::new();
    let mut rest = text;
    while let Some(line_end) = rest.find('\n') {
        let Some(name) = rest[..line_end].strip_prefix("cause ") else {
            break;
        };
        let id = EventId::new(name)?;
        if causes.last().is_some_and(|last| *last >= id) {
            return Err(RepoError::MalformedEvent("causes not ascending".into()));
        }
        causes.insert(id);
        rest = &rest[line_end + 1..];
    }
    Ok((causes, rest))
}

impl Repository {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn es(&self) -> &EventStructure {
        &self.es
    }

    pub fn morphism(&self, e: &EventId) -> Option<&PartialMorphism> {
        self.morphisms.get(e)
    }

    pub fn len(&self) -> usize {
        self.es.len()
    }

    pub fn is_empty(&self) -> bool {
        self.es.is_empty()
    }

    pub fn heads(&self) -> Vec<EventId> {
        self.es.heads()
    }

    /// The stored text of event `e`.
    pub fn event_text(&self, e: &EventId) -> Option<String> {
        Some(encode_event(self.es.causes(e)?, self.morphisms.get(e)?))
    }

    /// The state below `e`, which the source of `e`'s morphism matches.
    pub fn state_below(&self, e: &EventId) -> Option<&Arc<ConflictFile>> {
        self.down.get(e).map(|s| s.object())
    }

    fn below_state(&self, causes: &BTreeSet<EventId>) -> Result<Arc<EvaluatedState>, RepoError> {
        if let Some(c) = causes.iter().find(|c| !self.es.contains(c)) {
            return Err(RepoError::UnknownEvent(c.clone()));
        }
        if causes.len() == 1 {
            let only = causes.first().expect("one cause");
            return Ok(self.principal[only].clone());
        }
        let mut config = Configuration::new();
        for c in causes {
            config.insert(c.clone());
            config.extend(self.es.below(c));
        }
        Evaluator::new(self).evaluate(&config)
    }

    /// Adds an event. The morphism's source must be isomorphic to the state
    /// below the event; it is re-based onto that state if it is not already
    /// equal to it.
    pub fn add_event(
        &mut self,
        id: EventId,
        causes: BTreeSet<EventId>,
        morphism: PartialMorphism,
    ) -> Result<(), RepoError> {
        if self.es.contains(&id) {
            return Err(RepoError::DuplicateEvent(id));
        }
        let down = self.below_state(&causes)?;
        let morphism = if morphism.source() == down.object() {
            morphism
        } else {
            let iso = down
                .object()
                .is_isomorphic(morphism.source())
                .ok_or_else(|| RepoError::BaseMismatch(id.clone()))?;
            iso.compose(&morphism)?
        };
        let report = morphism.validate();
        if !report.is_valid() {
            return Err(ObjectError::InvalidMorphism(report).into());
        }
        let principal = down.extend(&down, &id, &morphism)?;
        self.es.add_event(id.clone(), causes)?;
        self.morphisms.insert(id.clone(), morphism);
        self.down.insert(id.clone(), down);
        self.principal.insert(id, Arc::new(principal));
        Ok(())
    }

    /// Adds an event carrying a patch between plain files.
    pub fn add_patch_event(&mut self, id: EventId, causes: BTreeSet<EventId>, patch: &Patch) -> Result<(), RepoError> {
        let morphism = PartialMorphism::embed_patch(patch)?;
        self.add_event(id, causes, morphism)
    }

    pub fn add_conflict(&mut self, a: &EventId, b: &EventId) -> Result<(), RepoError> {
        self.es.add_conflict(a, b)?;
        self.es = self.es.hereditary_closure();
        Ok(())
    }

    /// Adds an event from its stored text and returns its content address.
    /// Adding a text that is already present is a no-op.
    pub fn insert_encoded(&mut self, text: &str) -> Result<EventId, RepoError> {
        let id = content_id(text);
        if let Some(existing) = self.event_text(&id) {
            return if existing == text { Ok(id) } else { Err(RepoError::EventClash(id)) };
        }
        let (causes, body) = split_event(text)?;
        let parts = parse_morphism(body)?;
        let down = self.below_state(&causes)?;
        let morphism = parts.attach(down.object())?;
        self.add_event(id.clone(), causes, morphism)?;
        Ok(id)
    }

    fn add_content_addressed(&mut self, morphism: PartialMorphism) -> Result<EventId, RepoError> {
        let causes: BTreeSet<EventId> = self.heads().into_iter().collect();
        let id = content_id(&encode_event(&causes, &morphism));
        self.add_event(id.clone(), causes, morphism)?;
        Ok(id)
    }

    pub fn state(&self, x: &Configuration) -> Result<Arc<ConflictFile>, RepoError> {
        Ok(Evaluator::new(self).state(x)?.object().clone())
    }

    pub fn state_ignoring_conflicts(&self, x: &Configuration) -> Result<Arc<ConflictFile>, RepoError> {
        Ok(Evaluator::new(self).state_ignoring_conflicts(x)?.object().clone())
    }

    /// The state of all events, conflicts ignored.
    pub fn repo_state(&self) -> Result<Arc<ConflictFile>, RepoError> {
        let all: Configuration = self.es.events().cloned().collect();
        Ok(Evaluator::new(self).evaluate(&all)?.object().clone())
    }

    /// The state reached by adding events one at a time in `order`.
    pub fn state_along(&self, order: &[EventId]) -> Result<Arc<ConflictFile>, RepoError> {
        let mut placed = Configuration::new();
        let mut current = EvaluatedState::empty();
        for e in order {
            let causes = self.es.causes(e).ok_or_else(|| RepoError::UnknownEvent(e.clone()))?;
            if placed.contains(e) || !causes.is_subset(&placed) {
                return Err(RepoError::NotALinearExtension);
            }
            current = current.extend(&self.down[e], e, &self.morphisms[e])?;
            placed.insert(e.clone());
        }
        Ok(current.object().clone())
    }

    /// Records `file` on top of the current linear state.
    pub fn record(&mut self, file: &File) -> Result<EventId, RepoError> {
        let state = self.repo_state()?;
        let order = state.linear_order().ok_or(RepoError::ConflictedState)?;
        let current = File::new(order.iter().map(|v| state.nodes()[v].clone()).collect());
        let patch = diff(&current, file);
        if patch.is_identity() {
            return Err(RepoError::NoChange);
        }
        let map = order
            .iter()
            .enumerate()
            .filter_map(|(i, v)| patch.get(i).map(|j| (*v, LineId(j as u32))))
            .collect();
        let target = Arc::new(ConflictFile::embed(file));
        self.add_content_addressed(PartialMorphism::from_parts(state, target, map))
    }

    /// Records `file` on top of all heads, whether or not the current state
    /// is conflicted.
    pub fn resolve(&mut self, file: &File) -> Result<EventId, RepoError> {
        let state = self.repo_state()?;
        if state.is_linear().is_some() {
            return self.record(file);
        }
        let morphism = infer_resolution(&state, file);
        self.add_content_addressed(morphism)
    }

    /// The union of two histories. Shared events must agree exactly.
    pub fn import(&self, other: &Repository) -> Result<Repository, RepoError> {
        let mut merged = self.clone();
        for e in other.es.topological_order()? {
            let theirs = other.event_text(&e).expect("event is present");
            match merged.event_text(&e) {
                Some(ours) if ours == theirs => {}
                Some(_) => return Err(RepoError::EventClash(e)),
                None => {
                    let causes = other.es.causes(&e).expect("event is present").clone();
                    merged.add_event(e.clone(), causes, other.morphisms[&e].clone())?;
                    if merged.event_text(&e).as_deref() != Some(theirs.as_str()) {
                        return Err(RepoError::EventClash(e));
                    }
                }
            }
        }
        for (a, b) in other.es.conflicts() {
            merged.es.add_conflict(a, b)?;
        }
        merged.es = merged.es.hereditary_closure();
        Ok(merged)
    }
}
