//! Inferring the morphism from a conflicted state to a user's resolved file.
//!
//! The result keeps as many lines as possible: an injective, label- and
//! order-preserving partial map into the file. Lines on a cycle are always
//! dropped since no strict order can hold them.

use alloc::collections::BTreeMap;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::conflict::{ConflictFile, LineId, PartialMorphism};
use crate::line::{diff, File};

const STATE_LIMIT: usize = 200_000;
const SIZE_LIMIT: usize = 2_000;

struct Search<'a> {
    labels: Vec<&'a str>,
    preds: Vec<Vec<u64>>,
    file: Vec<&'a str>,
    memo: BTreeMap<(Vec<u64>, usize), usize>,
}

#[derive(Clone, Copy)]
enum Move {
    Match(usize),
    SkipLine,
    SkipVertex(usize),
}

fn has(set: &[u64], i: usize) -> bool {
    set[i / 64] >> (i % 64) & 1 == 1
}

fn with(set: &[u64], i: usize) -> Vec<u64> {
    let mut s = set.to_vec();
    s[i / 64] |= 1 << (i % 64);
    s
}

impl Search<'_> {
    fn available(&self, done: &[u64]) -> Vec<usize> {
        (0..self.labels.len())
            .filter(|&v| !has(done, v) && self.preds[v].iter().zip(done).all(|(p, d)| p & !d == 0))
            .collect()
    }

    fn moves(&self, done: &[u64], j: usize) -> Vec<Move> {
        let avail = self.available(done);
        let mut moves = Vec::new();
        if j < self.file.len() {
            moves.extend(avail.iter().filter(|&&v| self.labels[v] == self.file[j]).map(|&v| Move::Match(v)));
            moves.push(Move::SkipLine);
        }
        moves.extend(avail.iter().map(|&v| Move::SkipVertex(v)));
        moves
    }

    fn after(done: &[u64], j: usize, m: Move) -> (Vec<u64>, usize, usize) {
        match m {
            Move::Match(v) => (with(done, v), j + 1, 1),
            Move::SkipLine => (done.to_vec(), j + 1, 0),
            Move::SkipVertex(v) => (with(done, v), j, 0),
        }
    }

    /// Most matches reachable from `(done, j)`, or `None` past the limit.
    fn best(&mut self, done: &[u64], j: usize) -> Option<usize> {
        if let Some(&b) = self.memo.get(&(done.to_vec(), j)) {
            return Some(b);
        }
        if self.memo.len() >= STATE_LIMIT {
            return None;
        }
        let mut best = 0;
        for m in self.moves(done, j) {
            let (next, k, gain) = Self::after(done, j, m);
            best = best.max(gain + self.best(&next, k)?);
        }
        self.memo.insert((done.to_vec(), j), best);
        Some(best)
    }
}

/// The resolution morphism from `state` to the embedding of `file`.
pub fn infer_resolution(state: &Arc<ConflictFile>, file: &File) -> PartialMorphism {
    let target = Arc::new(ConflictFile::embed(file));
    let vertices: Vec<LineId> = state.ids().filter(|&v| !state.lt(v, v)).collect();
    let pairs = if vertices.len() + file.len() > SIZE_LIMIT {
        None
    } else {
        exact(state, &vertices, file)
    };
    let pairs = pairs.unwrap_or_else(|| greedy(state, &vertices, file));
    let map = pairs.into_iter().map(|(v, j)| (v, LineId(j as u32))).collect();
    PartialMorphism::from_parts(state.clone(), target, map)
}

fn exact(state: &ConflictFile, vertices: &[LineId], file: &File) -> Option<Vec<(LineId, usize)>> {
    let n = vertices.len();
    let words = n.div_ceil(64).max(1);
    let mut preds = vec![vec![0u64; words]; n];
    for (i, &x) in vertices.iter().enumerate() {
        for (k, &y) in vertices.iter().enumerate() {
            if state.lt(y, x) {
                preds[i][k / 64] |= 1 << (k % 64);
            }
        }
    }
    let mut search = Search {
        labels: vertices.iter().map(|v| state.nodes()[v].as_str()).collect(),
        preds,
        file: file.lines().iter().map(|l| l.as_str()).collect(),
        memo: BTreeMap::new(),
    };
    let mut done = vec![0u64; words];
    let mut j = 0;
    let mut remaining = search.best(&done, j)?;
    let mut out = Vec::new();
    while remaining > 0 {
        let mut chosen = None;
        for m in search.moves(&done, j) {
            let (next, k, gain) = Search::after(&done, j, m);
            if gain + search.best(&next, k)? == remaining {
                chosen = Some((m, next, k, gain));
                break;
            }
        }
        let (m, next, k, gain) = chosen.expect("an optimal move exists");
        if let Move::Match(v) = m {
            out.push((vertices[v], j));
        }
        done = next;
        j = k;
        remaining -= gain;
    }
    Some(out)
}

/// Linearizes by ascending id among available vertices, then diffs.
fn greedy(state: &ConflictFile, vertices: &[LineId], file: &File) -> Vec<(LineId, usize)> {
    let mut order: Vec<LineId> = Vec::with_capacity(vertices.len());
    let mut placed = vec![false; vertices.len()];
    while order.len() < vertices.len() {
        let next = (0..vertices.len())
            .find(|&i| {
                !placed[i]
                    && vertices
                        .iter()
                        .enumerate()
                        .all(|(k, &y)| placed[k] || !state.lt(y, vertices[i]))
            })
            .expect("the relation is acyclic off the cycles");
        placed[next] = true;
        order.push(vertices[next]);
    }
    let linear = File::new(order.iter().map(|v| state.nodes()[v].clone()).collect());
    diff(&linear, file).pairs().map(|(i, j)| (order[i], j)).collect()
}
