//! The pointed view of partial morphisms.
//!
//! A partial morphism `A -> B` is the same thing as a total morphism of
//! pointed graphs `A + ⊥ -> B + ⊥` sending ⊥ to ⊥, where ⊥ has an edge to and
//! from every vertex and to itself. Undefined lines go to ⊥.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::sync::Arc;

use super::{ConflictFile, LineId, ObjectError, PartialMorphism};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Point {
    Bottom,
    Line(LineId),
}

/// A conflict file with an added basepoint.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PointedObject {
    base: Arc<ConflictFile>,
    edges: BTreeSet<(Point, Point)>,
}

impl PointedObject {
    pub fn new(base: &Arc<ConflictFile>) -> Self {
        let mut edges: BTreeSet<(Point, Point)> = base
            .order()
            .iter()
            .map(|&(x, y)| (Point::Line(x), Point::Line(y)))
            .collect();
        edges.insert((Point::Bottom, Point::Bottom));
        for id in base.ids() {
            edges.insert((Point::Bottom, Point::Line(id)));
            edges.insert((Point::Line(id), Point::Bottom));
        }
        PointedObject { base: base.clone(), edges }
    }

    pub fn base(&self) -> &Arc<ConflictFile> {
        &self.base
    }

    pub fn points(&self) -> impl Iterator<Item = Point> + '_ {
        core::iter::once(Point::Bottom).chain(self.base.ids().map(Point::Line))
    }

    pub fn edges(&self) -> &BTreeSet<(Point, Point)> {
        &self.edges
    }
}

/// A total, basepoint-preserving graph morphism.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PointedMorphism {
    source: PointedObject,
    target: PointedObject,
    map: BTreeMap<Point, Point>,
}

impl PointedMorphism {
    pub fn source(&self) -> &PointedObject {
        &self.source
    }

    pub fn target(&self) -> &PointedObject {
        &self.target
    }

    pub fn get(&self, p: Point) -> Point {
        self.map[&p]
    }

    /// Checks totality, ⊥ ↦ ⊥, labels on lines sent to lines, and that
    /// every edge goes to an edge.
    pub fn is_valid(&self) -> bool {
        if self.map.len() != self.source.points().count()
            || self.map.get(&Point::Bottom) != Some(&Point::Bottom)
        {
            return false;
        }
        for (p, q) in &self.map {
            if let (Point::Line(a), Point::Line(b)) = (p, q) {
                if self.source.base.label(*a) != self.target.base.label(*b) {
                    return false;
                }
            }
        }
        self.source
            .edges
            .iter()
            .all(|(p, q)| self.target.edges.contains(&(self.map[p], self.map[q])))
    }

    pub fn compose(&self, next: &PointedMorphism) -> Result<PointedMorphism, ObjectError> {
        if self.target != next.source {
            return Err(ObjectError::SourceMismatch);
        }
        Ok(PointedMorphism {
            source: self.source.clone(),
            target: next.target.clone(),
            map: self.map.iter().map(|(&p, q)| (p, next.map[q])).collect(),
        })
    }
}

pub fn to_pointed(m: &PartialMorphism) -> PointedMorphism {
    let mut map: BTreeMap<Point, Point> = m
        .source()
        .ids()
        .map(|a| (Point::Line(a), m.get(a).map_or(Point::Bottom, Point::Line)))
        .collect();
    map.insert(Point::Bottom, Point::Bottom);
    PointedMorphism {
        source: PointedObject::new(m.source()),
        target: PointedObject::new(m.target()),
        map,
    }
}

pub fn from_pointed(m: &PointedMorphism) -> PartialMorphism {
    let map = m
        .map
        .iter()
        .filter_map(|(p, q)| match (p, q) {
            (Point::Line(a), Point::Line(b)) => Some((*a, *b)),
            _ => None,
        })
        .collect();
    PartialMorphism::from_parts(m.source.base.clone(), m.target.base.clone(), map)
}
