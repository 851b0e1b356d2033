//! Initial object, coproducts and pushouts of conflict files.
//!
//! Apex ids are canonical: surviving classes are numbered `0..k` in the order
//! of their smallest member, where members of the left object come before
//! members of the right object and each side is ordered by id.

use alloc::collections::BTreeMap;
use alloc::sync::Arc;
use alloc::vec::Vec;

use super::{transitive_closure, ConflictFile, LineId, ObjectError, PartialMorphism};

/// The empty conflict file.
pub fn initial() -> ConflictFile {
    ConflictFile::default()
}

struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    fn new(len: usize) -> Self {
        UnionFind {
            parent: (0..len).collect(),
            rank: alloc::vec![0; len],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        while self.parent[x] != root {
            let next = self.parent[x];
            self.parent[x] = root;
            x = next;
        }
        root
    }

    fn union(&mut self, x: usize, y: usize) {
        let (rx, ry) = (self.find(x), self.find(y));
        if rx == ry {
            return;
        }
        match self.rank[rx].cmp(&self.rank[ry]) {
            core::cmp::Ordering::Less => self.parent[rx] = ry,
            core::cmp::Ordering::Greater => self.parent[ry] = rx,
            core::cmp::Ordering::Equal => {
                self.parent[ry] = rx;
                self.rank[rx] += 1;
            }
        }
    }
}

/// Disjoint union of two objects with its injections.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Coproduct {
    apex: Arc<ConflictFile>,
    inj_a: PartialMorphism,
    inj_b: PartialMorphism,
}

/// The merge of a span `B <-f- A -g-> C`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PushoutResult {
    apex: Arc<ConflictFile>,
    leg_b: PartialMorphism,
    leg_c: PartialMorphism,
    f: PartialMorphism,
    g: PartialMorphism,
}

pub fn coproduct(a: &Arc<ConflictFile>, b: &Arc<ConflictFile>) -> Coproduct {
    let offset = a.len() as u32;
    let a_ids: BTreeMap<LineId, LineId> =
        a.ids().enumerate().map(|(i, id)| (id, LineId(i as u32))).collect();
    let b_ids: BTreeMap<LineId, LineId> = b
        .ids()
        .enumerate()
        .map(|(i, id)| (id, LineId(offset + i as u32)))
        .collect();
    let nodes = a
        .nodes()
        .iter()
        .map(|(id, l)| (a_ids[id], l.clone()))
        .chain(b.nodes().iter().map(|(id, l)| (b_ids[id], l.clone())))
        .collect();
    let order = a
        .order()
        .iter()
        .map(|(x, y)| (a_ids[x], a_ids[y]))
        .chain(b.order().iter().map(|(x, y)| (b_ids[x], b_ids[y])))
        .collect();
    let apex = Arc::new(ConflictFile::from_parts(nodes, order));
    Coproduct {
        inj_a: PartialMorphism::from_parts(a.clone(), apex.clone(), a_ids),
        inj_b: PartialMorphism::from_parts(b.clone(), apex.clone(), b_ids),
        apex,
    }
}

impl Coproduct {
    pub fn apex(&self) -> &Arc<ConflictFile> {
        &self.apex
    }

    pub fn inj_a(&self) -> &PartialMorphism {
        &self.inj_a
    }

    pub fn inj_b(&self) -> &PartialMorphism {
        &self.inj_b
    }

    /// The unique map out of the apex restricting to `h` and `k`.
    pub fn mediating(
        &self,
        h: &PartialMorphism,
        k: &PartialMorphism,
    ) -> Result<PartialMorphism, ObjectError> {
        if h.source() != self.inj_a.source() || k.source() != self.inj_b.source() {
            return Err(ObjectError::SourceMismatch);
        }
        if h.target() != k.target() {
            return Err(ObjectError::NotACocone { witness: None });
        }
        mediate(&self.apex, &self.inj_a, &self.inj_b, h, k)
    }
}

/// Merges two morphisms with a common source.
///
/// Lines of `B ⊎ C` are identified when they are images of a common line of
/// `A`; a class containing the image of a line deleted by either side is
/// dropped. The apex relation is the transitive closure of the relations
/// inherited from `B` and `C` between surviving classes.
pub fn pushout(f: &PartialMorphism, g: &PartialMorphism) -> Result<PushoutResult, ObjectError> {
    if f.source() != g.source() {
        return Err(ObjectError::SourceMismatch);
    }
    let (b, c) = (f.target(), g.target());
    let b_ids: Vec<LineId> = b.ids().collect();
    let c_ids: Vec<LineId> = c.ids().collect();
    let (nb, nc) = (b_ids.len(), c_ids.len());
    let bottom = nb + nc;
    let b_index = |id: LineId| b_ids.binary_search(&id).ok();
    let c_index = |id: LineId| c_ids.binary_search(&id).ok().map(|i| nb + i);

    let mut classes = UnionFind::new(nb + nc + 1);
    for a in f.source().ids() {
        let x = match f.get(a) {
            Some(id) => b_index(id).ok_or(ObjectError::UnknownId(id))?,
            None => bottom,
        };
        let y = match g.get(a) {
            Some(id) => c_index(id).ok_or(ObjectError::UnknownId(id))?,
            None => bottom,
        };
        classes.union(x, y);
    }

    let member = |i: usize| -> (LineId, &super::Label) {
        if i < nb {
            (b_ids[i], &b.nodes()[&b_ids[i]])
        } else {
            (c_ids[i - nb], &c.nodes()[&c_ids[i - nb]])
        }
    };

    // Classes are numbered by their smallest surviving member index.
    let dropped = classes.find(bottom);
    let mut number: BTreeMap<usize, u32> = BTreeMap::new();
    let mut class_of: Vec<Option<u32>> = alloc::vec![None; nb + nc];
    let mut nodes = BTreeMap::new();
    let mut first_member: Vec<usize> = Vec::new();
    for (i, slot) in class_of.iter_mut().enumerate() {
        let root = classes.find(i);
        if root == dropped {
            continue;
        }
        let next = number.len() as u32;
        let id = *number.entry(root).or_insert(next);
        *slot = Some(id);
        let (member_id, label) = member(i);
        if id == next {
            nodes.insert(LineId(id), label.clone());
            first_member.push(i);
        } else if nodes[&LineId(id)] != *label {
            return Err(ObjectError::LabelClash {
                left: member(first_member[id as usize]).0,
                right: member_id,
            });
        }
    }

    let mut inherited = Vec::new();
    for (x, y) in b.order() {
        if let (Some(i), Some(j)) = (b_index(*x), b_index(*y)) {
            if let (Some(p), Some(q)) = (class_of[i], class_of[j]) {
                inherited.push((p as usize, q as usize));
            }
        }
    }
    for (x, y) in c.order() {
        if let (Some(i), Some(j)) = (c_index(*x), c_index(*y)) {
            if let (Some(p), Some(q)) = (class_of[i], class_of[j]) {
                inherited.push((p as usize, q as usize));
            }
        }
    }
    let order = transitive_closure(nodes.len(), &inherited)
        .into_iter()
        .map(|(p, q)| (LineId(p as u32), LineId(q as u32)))
        .collect();
    let apex = Arc::new(ConflictFile::from_parts(nodes, order));

    let leg_b = b_ids
        .iter()
        .enumerate()
        .filter_map(|(i, &id)| class_of[i].map(|p| (id, LineId(p))))
        .collect();
    let leg_c = c_ids
        .iter()
        .enumerate()
        .filter_map(|(i, &id)| class_of[nb + i].map(|p| (id, LineId(p))))
        .collect();
    Ok(PushoutResult {
        leg_b: PartialMorphism::from_parts(b.clone(), apex.clone(), leg_b),
        leg_c: PartialMorphism::from_parts(c.clone(), apex.clone(), leg_c),
        apex,
        f: f.clone(),
        g: g.clone(),
    })
}

impl PushoutResult {
    pub fn apex(&self) -> &Arc<ConflictFile> {
        &self.apex
    }

    /// The residual of `g` after `f`: from `f`'s target into the apex.
    pub fn leg_b(&self) -> &PartialMorphism {
        &self.leg_b
    }

    /// The residual of `f` after `g`: from `g`'s target into the apex.
    pub fn leg_c(&self) -> &PartialMorphism {
        &self.leg_c
    }

    pub fn span(&self) -> (&PartialMorphism, &PartialMorphism) {
        (&self.f, &self.g)
    }

    /// The map out of the apex induced by a cocone `(h, k)`, i.e. with
    /// `f;h = g;k`.
    ///
    /// Fails with `NotACocone` when the square does not commute and with
    /// `NotMonotone` when the induced map would break the apex relation.
    pub fn mediating(
        &self,
        h: &PartialMorphism,
        k: &PartialMorphism,
    ) -> Result<PartialMorphism, ObjectError> {
        if h.source() != self.f.target() || k.source() != self.g.target() {
            return Err(ObjectError::SourceMismatch);
        }
        if h.target() != k.target() {
            return Err(ObjectError::NotACocone { witness: None });
        }
        for a in self.f.source().ids() {
            let via_b = self.f.get(a).and_then(|x| h.get(x));
            let via_c = self.g.get(a).and_then(|y| k.get(y));
            if via_b != via_c {
                return Err(ObjectError::NotACocone { witness: Some(a) });
            }
        }
        mediate(&self.apex, &self.leg_b, &self.leg_c, h, k)
    }
}

fn mediate(
    apex: &Arc<ConflictFile>,
    leg_b: &PartialMorphism,
    leg_c: &PartialMorphism,
    h: &PartialMorphism,
    k: &PartialMorphism,
) -> Result<PartialMorphism, ObjectError> {
    // apex line -> image, filled from every member; `seen` also records
    // lines whose members are undefined
    let mut seen: BTreeMap<LineId, Option<LineId>> = BTreeMap::new();
    let members = leg_b
        .map()
        .iter()
        .map(|(x, p)| (*p, h.get(*x)))
        .chain(leg_c.map().iter().map(|(y, p)| (*p, k.get(*y))));
    for (p, image) in members {
        if *seen.entry(p).or_insert(image) != image {
            return Err(ObjectError::NotACocone { witness: None });
        }
    }
    seen.retain(|_, image| image.is_some());
    let map: BTreeMap<LineId, LineId> = seen.into_iter().map(|(p, image)| (p, image.unwrap())).collect();
    let target = h.target();
    for &(p, q) in apex.order() {
        if let (Some(x), Some(y)) = (map.get(&p), map.get(&q)) {
            if !target.lt(*x, *y) {
                return Err(ObjectError::NotMonotone { first: p, second: q });
            }
        }
    }
    Ok(PartialMorphism::from_parts(apex.clone(), target.clone(), map))
}
