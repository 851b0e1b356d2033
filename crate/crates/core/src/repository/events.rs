use alloc::collections::{BTreeMap, BTreeSet};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use super::RepoError;

/// Name of an event. Recorded events use the lowercase hex SHA-256 of their
/// stored encoding; tests may use any short name.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EventId(Arc<str>);

impl EventId {
    /// Accepts non-empty names without whitespace, control characters or `/`.
    pub fn new(name: &str) -> Result<Self, RepoError> {
        let ok = !name.is_empty() && name.chars().all(|c| !c.is_whitespace() && !c.is_control() && c != '/');
        if ok {
            Ok(EventId(name.into()))
        } else {
            Err(RepoError::InvalidEventId(name.into()))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for EventId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for EventId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A downward-closed set of events.
pub type Configuration = BTreeSet<EventId>;

/// Events, immediate causes, and a symmetric conflict relation.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EventStructure {
    causes: BTreeMap<EventId, BTreeSet<EventId>>,
    conflicts: BTreeSet<(EventId, EventId)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EsViolation {
    UnknownCause { event: EventId, cause: EventId },
    UnknownEvent(EventId),
    /// An event that is its own strict cause.
    Cycle(EventId),
    SelfConflict(EventId),
    Asymmetric { a: EventId, b: EventId },
    /// `a # b` and `b <= b2`, but not `a # b2`.
    NotHereditary { a: EventId, b: EventId, b2: EventId },
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EsReport {
    pub violations: Vec<EsViolation>,
}

impl EsReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for EsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_valid() {
            return f.write_str("valid");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            match v {
                EsViolation::UnknownCause { event, cause } => write!(f, "{event} has unknown cause {cause}")?,
                EsViolation::UnknownEvent(e) => write!(f, "conflict names unknown event {e}")?,
                EsViolation::Cycle(e) => write!(f, "{e} causes itself")?,
                EsViolation::SelfConflict(e) => write!(f, "{e} # {e}")?,
                EsViolation::Asymmetric { a, b } => write!(f, "{a} # {b} without {b} # {a}")?,
                EsViolation::NotHereditary { a, b, b2 } => {
                    write!(f, "{a} # {b} and {b} <= {b2} but not {a} # {b2}")?
                }
            }
        }
        Ok(())
    }
}

/// Configurations and single-event extensions between them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceGraph {
    pub nodes: Vec<Configuration>,
    pub edges: Vec<(Configuration, EventId, Configuration)>,
}

pub const DEFAULT_ENUMERATION_BOUND: usize = 16;

impl EventStructure {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a structure without checking it; see [`EventStructure::validate`].
    pub fn from_parts(
        causes: BTreeMap<EventId, BTreeSet<EventId>>,
        conflicts: BTreeSet<(EventId, EventId)>,
    ) -> Self {
        EventStructure { causes, conflicts }
    }

    /// Adds an event whose causes are already present.
    pub fn add_event(&mut self, id: EventId, causes: BTreeSet<EventId>) -> Result<(), RepoError> {
        if self.causes.contains_key(&id) {
            return Err(RepoError::DuplicateEvent(id));
        }
        if let Some(c) = causes.iter().find(|c| !self.causes.contains_key(*c)) {
            return Err(RepoError::UnknownEvent(c.clone()));
        }
        self.causes.insert(id, causes);
        Ok(())
    }

    /// Records `a # b` in both directions.
    pub fn add_conflict(&mut self, a: &EventId, b: &EventId) -> Result<(), RepoError> {
        for e in [a, b] {
            if !self.contains(e) {
                return Err(RepoError::UnknownEvent(e.clone()));
            }
        }
        self.conflicts.insert((a.clone(), b.clone()));
        self.conflicts.insert((b.clone(), a.clone()));
        Ok(())
    }

    pub fn events(&self) -> impl Iterator<Item = &EventId> + '_ {
        self.causes.keys()
    }

    pub fn len(&self) -> usize {
        self.causes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.causes.is_empty()
    }

    pub fn contains(&self, e: &EventId) -> bool {
        self.causes.contains_key(e)
    }

    pub fn causes(&self, e: &EventId) -> Option<&BTreeSet<EventId>> {
        self.causes.get(e)
    }

    pub fn all_causes(&self) -> &BTreeMap<EventId, BTreeSet<EventId>> {
        &self.causes
    }

    pub fn conflicts(&self) -> &BTreeSet<(EventId, EventId)> {
        &self.conflicts
    }

    pub fn in_conflict(&self, a: &EventId, b: &EventId) -> bool {
        self.conflicts.contains(&(a.clone(), b.clone()))
    }

    /// The same events with no conflicts.
    pub fn without_conflicts(&self) -> Self {
        EventStructure { causes: self.causes.clone(), conflicts: BTreeSet::new() }
    }

    /// Strict predecessors of `e`.
    pub fn below(&self, e: &EventId) -> BTreeSet<EventId> {
        let mut seen = BTreeSet::new();
        let mut stack: Vec<&EventId> = self.causes.get(e).into_iter().flatten().collect();
        while let Some(c) = stack.pop() {
            if seen.insert(c.clone()) {
                stack.extend(self.causes.get(c).into_iter().flatten());
            }
        }
        seen
    }

    pub fn le(&self, a: &EventId, b: &EventId) -> bool {
        a == b || self.below(b).contains(a)
    }

    /// Events of `x` that cause no other event of `x`.
    pub fn maximal(&self, x: &Configuration) -> Vec<EventId> {
        let covered: BTreeSet<&EventId> = x.iter().flat_map(|e| self.causes.get(e).into_iter().flatten()).collect();
        x.iter().filter(|e| !covered.contains(e)).cloned().collect()
    }

    /// The maximal events of the whole structure.
    pub fn heads(&self) -> Vec<EventId> {
        let all: Configuration = self.causes.keys().cloned().collect();
        self.maximal(&all)
    }

    pub fn is_downward_closed(&self, x: &Configuration) -> bool {
        x.iter().all(|e| {
            self.causes
                .get(e)
                .is_some_and(|cs| cs.iter().all(|c| x.contains(c)))
        })
    }

    pub fn is_configuration(&self, x: &Configuration) -> bool {
        self.is_downward_closed(x)
            && !self
                .conflicts
                .iter()
                .any(|(a, b)| x.contains(a) && x.contains(b))
    }

    /// Events in causal order, smallest id first among the available ones.
    pub fn topological_order(&self) -> Result<Vec<EventId>, RepoError> {
        let mut waiting: BTreeMap<&EventId, usize> = BTreeMap::new();
        let mut effects: BTreeMap<&EventId, Vec<&EventId>> = BTreeMap::new();
        for (e, cs) in &self.causes {
            waiting.insert(e, cs.len());
            for c in cs {
                effects.entry(c).or_default().push(e);
            }
        }
        let mut ready: BTreeSet<&EventId> = waiting.iter().filter(|(_, n)| **n == 0).map(|(e, _)| *e).collect();
        let mut order = Vec::with_capacity(self.causes.len());
        while let Some(e) = ready.pop_first() {
            order.push(e.clone());
            for &next in effects.get(e).map(Vec::as_slice).unwrap_or(&[]) {
                if let Some(n) = waiting.get_mut(next) {
                    *n -= 1;
                    if *n == 0 {
                        ready.insert(next);
                    }
                }
            }
        }
        if order.len() != self.causes.len() {
            let stuck = self.causes.keys().find(|e| !order.contains(e)).cloned();
            return Err(RepoError::Cyclic(stuck.expect("some event is left")));
        }
        Ok(order)
    }

    pub fn validate(&self) -> EsReport {
        let mut violations = Vec::new();
        for (e, cs) in &self.causes {
            for c in cs {
                if !self.causes.contains_key(c) {
                    violations.push(EsViolation::UnknownCause { event: e.clone(), cause: c.clone() });
                }
            }
        }
        for e in self.causes.keys() {
            if self.below(e).contains(e) {
                violations.push(EsViolation::Cycle(e.clone()));
            }
        }
        for (a, b) in &self.conflicts {
            for e in [a, b] {
                if !self.contains(e) {
                    violations.push(EsViolation::UnknownEvent(e.clone()));
                }
            }
            if a == b {
                violations.push(EsViolation::SelfConflict(a.clone()));
            }
            if !self.in_conflict(b, a) {
                violations.push(EsViolation::Asymmetric { a: a.clone(), b: b.clone() });
            }
        }
        if violations.is_empty() {
            let missing = self.hereditary_closure().conflicts;
            for (a, b2) in missing.difference(&self.conflicts) {
                let b = self
                    .conflicts
                    .iter()
                    .find(|(x, y)| x == a && self.le(y, b2))
                    .map(|(_, y)| y.clone())
                    .unwrap_or_else(|| b2.clone());
                violations.push(EsViolation::NotHereditary { a: a.clone(), b, b2: b2.clone() });
            }
        }
        EsReport { violations }
    }

    /// Adds every `a2 # b2` with `a <= a2`, `b <= b2` and `a # b`.
    pub fn hereditary_closure(&self) -> Self {
        let mut above: BTreeMap<&EventId, Vec<&EventId>> = BTreeMap::new();
        for e in self.causes.keys() {
            for c in self.below(e) {
                if let Some((k, _)) = self.causes.get_key_value(&c) {
                    above.entry(k).or_default().push(e);
                }
            }
        }
        let up = |e: &EventId| -> Vec<EventId> {
            let mut v: Vec<EventId> = alloc::vec![e.clone()];
            v.extend(above.get(e).into_iter().flatten().map(|x| (*x).clone()));
            v
        };
        let mut conflicts = BTreeSet::new();
        for (a, b) in &self.conflicts {
            for a2 in up(a) {
                for b2 in up(b) {
                    conflicts.insert((a2.clone(), b2.clone()));
                    conflicts.insert((b2, a2.clone()));
                }
            }
        }
        EventStructure { causes: self.causes.clone(), conflicts }
    }

    /// All configurations, in order of size then members.
    pub fn configurations(&self, bound: usize) -> Result<Vec<Configuration>, RepoError> {
        if self.len() > bound {
            return Err(RepoError::TooLarge { events: self.len(), bound });
        }
        let order = self.topological_order()?;
        let mut out = Vec::new();
        let mut current = Configuration::new();
        self.extend_configurations(&order, 0, &mut current, &mut out);
        out.sort_by(|x, y| x.len().cmp(&y.len()).then_with(|| x.cmp(y)));
        Ok(out)
    }

    fn extend_configurations(
        &self,
        order: &[EventId],
        i: usize,
        current: &mut Configuration,
        out: &mut Vec<Configuration>,
    ) {
        let Some(e) = order.get(i) else {
            out.push(current.clone());
            return;
        };
        self.extend_configurations(order, i + 1, current, out);
        let enabled = self.causes[e].iter().all(|c| current.contains(c))
            && !current.iter().any(|x| self.in_conflict(x, e));
        if enabled {
            current.insert(e.clone());
            self.extend_configurations(order, i + 1, current, out);
            current.remove(e);
        }
    }

    pub fn trace_graph(&self, bound: usize) -> Result<TraceGraph, RepoError> {
        let nodes = self.configurations(bound)?;
        let known: BTreeSet<&Configuration> = nodes.iter().collect();
        let mut edges = Vec::new();
        for x in &nodes {
            for e in self.causes.keys().filter(|e| !x.contains(*e)) {
                let mut y = x.clone();
                y.insert(e.clone());
                if known.contains(&y) {
                    edges.push((x.clone(), e.clone(), y));
                }
            }
        }
        Ok(TraceGraph { nodes, edges })
    }

    /// Every ordering of `x` that respects causality.
    pub fn linear_extensions(&self, x: &Configuration) -> Vec<Vec<EventId>> {
        let mut out = Vec::new();
        let mut prefix = Vec::new();
        let mut placed = Configuration::new();
        self.extensions_from(x, &mut prefix, &mut placed, &mut out);
        out
    }

    fn extensions_from(
        &self,
        x: &Configuration,
        prefix: &mut Vec<EventId>,
        placed: &mut Configuration,
        out: &mut Vec<Vec<EventId>>,
    ) {
        if prefix.len() == x.len() {
            out.push(prefix.clone());
            return;
        }
        for e in x {
            if placed.contains(e) || !self.causes[e].iter().all(|c| placed.contains(c)) {
                continue;
            }
            placed.insert(e.clone());
            prefix.push(e.clone());
            self.extensions_from(x, prefix, placed, out);
            prefix.pop();
            placed.remove(e);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn id(s: &str) -> EventId {
        EventId::new(s).unwrap()
    }

    fn set(names: &[&str]) -> BTreeSet<EventId> {
        names.iter().map(|s| id(s)).collect()
    }

    fn appendix_example() -> EventStructure {
        let mut es = EventStructure::new();
        es.add_event(id("a"), set(&[])).unwrap();
        es.add_event(id("b"), set(&["a"])).unwrap();
        es.add_event(id("c"), set(&["a"])).unwrap();
        es.add_event(id("c'"), set(&["a"])).unwrap();
        es.add_event(id("d"), set(&["b", "c"])).unwrap();
        es.add_conflict(&id("c"), &id("c'")).unwrap();
        es
    }

    #[test]
    fn hereditary_closure_adds_inherited_conflict() {
        let es = appendix_example();
        assert!(!es.validate().is_valid());
        let closed = es.hereditary_closure();
        assert!(closed.in_conflict(&id("d"), &id("c'")));
        assert!(closed.validate().is_valid());
        assert_eq!(closed.hereditary_closure(), closed);
    }

    #[test]
    fn appendix_example_has_eight_configurations() {
        let es = appendix_example().hereditary_closure();
        let configs = es.configurations(DEFAULT_ENUMERATION_BOUND).unwrap();
        let expected: Vec<Configuration> = alloc::vec![
            set(&[]),
            set(&["a"]),
            set(&["a", "b"]),
            set(&["a", "c"]),
            set(&["a", "c'"]),
            set(&["a", "b", "c"]),
            set(&["a", "b", "c'"]),
            set(&["a", "b", "c", "d"]),
        ];
        let mut sorted = expected.clone();
        sorted.sort_by(|x, y| x.len().cmp(&y.len()).then_with(|| x.cmp(y)));
        assert_eq!(configs, sorted);
    }

    #[test]
    fn self_conflict_is_invalid() {
        let mut es = EventStructure::new();
        es.add_event(id("e"), set(&[])).unwrap();
        es.add_conflict(&id("e"), &id("e")).unwrap();
        assert!(es.validate().violations.contains(&EsViolation::SelfConflict(id("e"))));
    }

    #[test]
    fn intro_scenario_is_valid() {
        let mut es = EventStructure::new();
        es.add_event(id("f"), set(&[])).unwrap();
        es.add_event(id("g"), set(&["f"])).unwrap();
        es.add_event(id("h"), set(&["f"])).unwrap();
        assert!(es.validate().is_valid());
        assert_eq!(es.heads(), alloc::vec![id("g"), id("h")]);
        assert_eq!(es.linear_extensions(&set(&["f", "g", "h"])).len(), 2);
    }

    #[test]
    fn antichain_square_and_empty() {
        assert_eq!(EventStructure::new().configurations(16).unwrap(), alloc::vec![set(&[])]);
        let mut es = EventStructure::new();
        es.add_event(id("x"), set(&[])).unwrap();
        es.add_event(id("y"), set(&[])).unwrap();
        let graph = es.trace_graph(16).unwrap();
        assert_eq!(graph.nodes.len(), 4);
        assert_eq!(graph.edges.len(), 4);
    }

    #[test]
    fn enumeration_bound() {
        let mut es = EventStructure::new();
        for i in 0..17 {
            es.add_event(id(&alloc::format!("e{i}")), set(&[])).unwrap();
        }
        assert_eq!(es.configurations(16), Err(RepoError::TooLarge { events: 17, bound: 16 }));
    }

    #[test]
    fn cyclic_parts_are_reported() {
        let mut causes = BTreeMap::new();
        causes.insert(id("p"), set(&["q"]));
        causes.insert(id("q"), set(&["p"]));
        let es = EventStructure::from_parts(causes, BTreeSet::new());
        assert!(es.validate().violations.contains(&EsViolation::Cycle(id("p"))));
        assert!(matches!(es.topological_order(), Err(RepoError::Cyclic(_))));
    }
}
