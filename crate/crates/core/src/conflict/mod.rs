//! Conflict files and partial morphisms between them.
//!
//! A [`ConflictFile`] is a finite set of lines, each with a [`Label`], and a
//! transitive relation `<` on them. The relation is not required to be
//! irreflexive or antisymmetric: merging opposite orderings produces cycles.
//! Plain files embed as strict total orders ([`ConflictFile::embed`]).
//!
//! A [`PartialMorphism`] is a partial function which preserves labels and the
//! relation wherever it is defined. Unlike patches it may identify lines.
//!
//! Colimits live in [`colimit`]: the initial object, coproducts and pushouts,
//! each with its mediating morphism.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::line::{File, Label, Patch, PatchReport};

mod closure;
pub mod colimit;
mod iso;
pub mod pointed;

pub use colimit::{coproduct, initial, pushout, Coproduct, PushoutResult};
pub(crate) use closure::transitive_closure;

/// Name of a line inside one [`ConflictFile`].
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LineId(pub u32);

impl fmt::Debug for LineId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

impl fmt::Display for LineId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ObjectError {
    #[error("source of the second morphism does not match")]
    SourceMismatch,
    #[error("unknown line id {0}")]
    UnknownId(LineId),
    #[error("invalid patch: {0}")]
    InvalidPatch(PatchReport),
    #[error("invalid object: {0}")]
    InvalidObject(ObjectReport),
    #[error("invalid morphism: {0}")]
    InvalidMorphism(MorphismReport),
    #[error("lines {left} and {right} are identified but carry different labels")]
    LabelClash { left: LineId, right: LineId },
    #[error("the two morphisms do not form a cocone{}", witness.map(|w| alloc::format!(" (at {w})")).unwrap_or_default())]
    NotACocone { witness: Option<LineId> },
    #[error("the induced map breaks the order between apex lines {first} and {second}")]
    NotMonotone { first: LineId, second: LineId },
}

/// A finite labeled set with a transitive relation.
///
/// The relation is stored transitively closed, so equality of objects is
/// equality of ids, labels and relation.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct ConflictFile {
    nodes: BTreeMap<LineId, Label>,
    order: BTreeSet<(LineId, LineId)>,
}

impl fmt::Debug for ConflictFile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConflictFile")
            .field("nodes", &self.nodes)
            .field("order", &self.order)
            .finish()
    }
}

/// One reason a [`ConflictFile`] is malformed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ObjectViolation {
    /// A relation pair mentions an id that is not a line.
    Dangling { x: LineId, y: LineId },
    /// `x < y` and `y < z` but not `x < z`.
    NotTransitive { x: LineId, y: LineId, z: LineId },
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ObjectReport {
    pub violations: Vec<ObjectViolation>,
}

impl ObjectReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ObjectReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return f.write_str("valid");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            match v {
                ObjectViolation::Dangling { x, y } => write!(f, "pair ({x}, {y}) names a missing line")?,
                ObjectViolation::NotTransitive { x, y, z } => {
                    write!(f, "{x} < {y} < {z} but not {x} < {z}")?
                }
            }
        }
        Ok(())
    }
}

impl ConflictFile {
    /// Builds an object without checking it; see [`ConflictFile::validate`].
    pub fn from_parts(nodes: BTreeMap<LineId, Label>, order: BTreeSet<(LineId, LineId)>) -> Self {
        ConflictFile { nodes, order }
    }

    pub fn new(
        nodes: BTreeMap<LineId, Label>,
        order: BTreeSet<(LineId, LineId)>,
    ) -> Result<Self, ObjectError> {
        let object = ConflictFile { nodes, order };
        let report = object.validate();
        if report.is_valid() {
            Ok(object)
        } else {
            Err(ObjectError::InvalidObject(report))
        }
    }

    /// Builds an object whose relation is the transitive closure of `pairs`.
    pub fn with_closure<I>(nodes: BTreeMap<LineId, Label>, pairs: I) -> Result<Self, ObjectError>
    where
        I: IntoIterator<Item = (LineId, LineId)>,
    {
        let ids: Vec<LineId> = nodes.keys().copied().collect();
        let mut dense = Vec::new();
        for (x, y) in pairs {
            let i = ids.binary_search(&x).map_err(|_| ObjectError::UnknownId(x))?;
            let j = ids.binary_search(&y).map_err(|_| ObjectError::UnknownId(y))?;
            dense.push((i, j));
        }
        let order = transitive_closure(ids.len(), &dense)
            .into_iter()
            .map(|(i, j)| (ids[i], ids[j]))
            .collect();
        Ok(ConflictFile { nodes, order })
    }

    /// The strict total order on the lines of `file`, with ids `0..n`.
    pub fn embed(file: &File) -> Self {
        let n = file.len() as u32;
        let nodes = file
            .lines()
            .iter()
            .enumerate()
            .map(|(i, l)| (LineId(i as u32), l.clone()))
            .collect();
        let order = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (LineId(i), LineId(j))))
            .collect();
        ConflictFile { nodes, order }
    }

    pub fn nodes(&self) -> &BTreeMap<LineId, Label> {
        &self.nodes
    }

    pub fn order(&self) -> &BTreeSet<(LineId, LineId)> {
        &self.order
    }

    pub fn ids(&self) -> impl Iterator<Item = LineId> + '_ {
        self.nodes.keys().copied()
    }

    pub fn label(&self, id: LineId) -> Option<&Label> {
        self.nodes.get(&id)
    }

    pub fn contains(&self, id: LineId) -> bool {
        self.nodes.contains_key(&id)
    }

    pub fn lt(&self, x: LineId, y: LineId) -> bool {
        self.order.contains(&(x, y))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn validate(&self) -> ObjectReport {
        let mut violations = Vec::new();
        let index: BTreeMap<LineId, usize> = self.ids().enumerate().map(|(i, id)| (id, i)).collect();
        let ids: Vec<LineId> = self.ids().collect();
        let mut pairs = Vec::with_capacity(self.order.len());
        for &(x, y) in &self.order {
            match (index.get(&x), index.get(&y)) {
                (Some(&i), Some(&j)) => pairs.push((i, j)),
                _ => violations.push(ObjectViolation::Dangling { x, y }),
            }
        }
        for (x, y, z) in closure::transitivity_failures(ids.len(), &pairs) {
            violations.push(ObjectViolation::NotTransitive { x: ids[x], y: ids[y], z: ids[z] });
        }
        ObjectReport { violations }
    }

    /// The lines in increasing order if the relation is a strict total order.
    pub fn linear_order(&self) -> Option<Vec<LineId>> {
        let n = self.nodes.len();
        if self.order.len() != n * n.saturating_sub(1) / 2 {
            return None;
        }
        let mut below: BTreeMap<LineId, usize> = self.ids().map(|id| (id, 0)).collect();
        for &(x, y) in &self.order {
            if x == y {
                return None;
            }
            *below.get_mut(&y)? += 1;
        }
        let mut sequence: Vec<Option<LineId>> = alloc::vec![None; n];
        for (id, rank) in below {
            match sequence.get_mut(rank) {
                Some(slot @ None) => *slot = Some(id),
                _ => return None,
            }
        }
        let sequence: Vec<LineId> = sequence.into_iter().collect::<Option<_>>()?;
        for (i, &x) in sequence.iter().enumerate() {
            if sequence[i + 1..].iter().any(|&y| !self.lt(x, y)) {
                return None;
            }
        }
        Some(sequence)
    }

    /// The plain file this object embeds, if its relation is a strict total
    /// order.
    pub fn is_linear(&self) -> Option<File> {
        let sequence = self.linear_order()?;
        Some(File::new(
            sequence.iter().map(|id| self.nodes[id].clone()).collect(),
        ))
    }

    /// A label- and order-preserving bijection onto `other` whose inverse
    /// also preserves the order. The first witness in ascending-id search
    /// order is returned.
    pub fn is_isomorphic(self: &Arc<Self>, other: &Arc<Self>) -> Option<PartialMorphism> {
        let map = iso::find_isomorphism(self, other)?;
        Some(PartialMorphism::from_parts(self.clone(), other.clone(), map))
    }
}

/// One reason a [`PartialMorphism`] is malformed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MorphismViolation {
    /// The map mentions a source id that is not a line of the source.
    UnknownSource { a: LineId },
    /// The map sends `a` to an id that is not a line of the target.
    UnknownTarget { a: LineId, b: LineId },
    LabelMismatch { a: LineId, b: LineId },
    /// `a < a2` in the source but their images are not related.
    NotMonotone { a: LineId, a2: LineId },
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MorphismReport {
    pub source: ObjectReport,
    pub target: ObjectReport,
    pub violations: Vec<MorphismViolation>,
}

impl MorphismReport {
    pub fn is_valid(&self) -> bool {
        self.source.is_valid() && self.target.is_valid() && self.violations.is_empty()
    }
}

impl fmt::Display for MorphismReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_valid() {
            return f.write_str("valid");
        }
        if !self.source.is_valid() {
            write!(f, "source: {}; ", self.source)?;
        }
        if !self.target.is_valid() {
            write!(f, "target: {}; ", self.target)?;
        }
        for v in &self.violations {
            match v {
                MorphismViolation::UnknownSource { a } => write!(f, "{a} is not a source line; ")?,
                MorphismViolation::UnknownTarget { a, b } => {
                    write!(f, "{a} sent to {b}, not a target line; ")?
                }
                MorphismViolation::LabelMismatch { a, b } => {
                    write!(f, "{a} sent to {b} with another label; ")?
                }
                MorphismViolation::NotMonotone { a, a2 } => {
                    write!(f, "{a} < {a2} not preserved; ")?
                }
            }
        }
        Ok(())
    }
}

/// A partial, label- and order-preserving map between conflict files.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PartialMorphism {
    source: Arc<ConflictFile>,
    target: Arc<ConflictFile>,
    map: BTreeMap<LineId, LineId>,
}

impl fmt::Debug for PartialMorphism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PartialMorphism")
            .field("source", &self.source)
            .field("target", &self.target)
            .field("map", &self.map)
            .finish()
    }
}

impl PartialMorphism {
    /// Builds a morphism without checking it; see [`PartialMorphism::validate`].
    pub fn from_parts(
        source: Arc<ConflictFile>,
        target: Arc<ConflictFile>,
        map: BTreeMap<LineId, LineId>,
    ) -> Self {
        PartialMorphism { source, target, map }
    }

    pub fn new(
        source: Arc<ConflictFile>,
        target: Arc<ConflictFile>,
        map: BTreeMap<LineId, LineId>,
    ) -> Result<Self, ObjectError> {
        let morphism = PartialMorphism { source, target, map };
        let report = morphism.validate();
        if report.is_valid() {
            Ok(morphism)
        } else {
            Err(ObjectError::InvalidMorphism(report))
        }
    }

    pub fn identity(object: &Arc<ConflictFile>) -> Self {
        PartialMorphism {
            source: object.clone(),
            target: object.clone(),
            map: object.ids().map(|id| (id, id)).collect(),
        }
    }

    /// The unique morphism out of the empty object.
    pub fn from_initial(target: &Arc<ConflictFile>) -> Self {
        PartialMorphism {
            source: Arc::new(ConflictFile::default()),
            target: target.clone(),
            map: BTreeMap::new(),
        }
    }

    /// The image of a patch under the embedding of files.
    pub fn embed_patch(patch: &Patch) -> Result<Self, ObjectError> {
        let report = patch.validate();
        if !report.is_valid() {
            return Err(ObjectError::InvalidPatch(report));
        }
        Ok(PartialMorphism {
            source: Arc::new(ConflictFile::embed(patch.source())),
            target: Arc::new(ConflictFile::embed(patch.target())),
            map: patch
                .pairs()
                .map(|(i, j)| (LineId(i as u32), LineId(j as u32)))
                .collect(),
        })
    }

    pub fn source(&self) -> &Arc<ConflictFile> {
        &self.source
    }

    pub fn target(&self) -> &Arc<ConflictFile> {
        &self.target
    }

    pub fn map(&self) -> &BTreeMap<LineId, LineId> {
        &self.map
    }

    pub fn get(&self, id: LineId) -> Option<LineId> {
        self.map.get(&id).copied()
    }

    pub fn is_total(&self) -> bool {
        self.map.len() == self.source.len()
    }

    pub fn is_injective(&self) -> bool {
        let image: BTreeSet<_> = self.map.values().collect();
        image.len() == self.map.len()
    }

    pub fn validate(&self) -> MorphismReport {
        let mut violations = Vec::new();
        for (&a, &b) in &self.map {
            match (self.source.label(a), self.target.label(b)) {
                (None, _) => violations.push(MorphismViolation::UnknownSource { a }),
                (_, None) => violations.push(MorphismViolation::UnknownTarget { a, b }),
                (Some(la), Some(lb)) if la != lb => {
                    violations.push(MorphismViolation::LabelMismatch { a, b })
                }
                _ => {}
            }
        }
        for &(a, a2) in self.source.order() {
            if let (Some(b), Some(b2)) = (self.get(a), self.get(a2)) {
                if !self.target.lt(b, b2) {
                    violations.push(MorphismViolation::NotMonotone { a, a2 });
                }
            }
        }
        MorphismReport {
            source: self.source.validate(),
            target: self.target.validate(),
            violations,
        }
    }

    /// `self` followed by `next`; defined where both are.
    pub fn compose(&self, next: &PartialMorphism) -> Result<PartialMorphism, ObjectError> {
        if self.target != next.source {
            return Err(ObjectError::SourceMismatch);
        }
        let map = self
            .map
            .iter()
            .filter_map(|(&a, b)| next.get(*b).map(|c| (a, c)))
            .collect();
        Ok(PartialMorphism {
            source: self.source.clone(),
            target: next.target.clone(),
            map,
        })
    }

    /// The inverse of a bijective morphism, unchecked for monotonicity.
    pub fn invert(&self) -> Option<PartialMorphism> {
        if !self.is_total() || !self.is_injective() || self.map.len() != self.target.len() {
            return None;
        }
        Some(PartialMorphism {
            source: self.target.clone(),
            target: self.source.clone(),
            map: self.map.iter().map(|(&a, &b)| (b, a)).collect(),
        })
    }
}
