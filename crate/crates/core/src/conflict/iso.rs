use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use super::{ConflictFile, LineId};
use crate::line::Label;

#[derive(PartialEq, Eq, PartialOrd, Ord, Clone)]
struct Signature<'a> {
    label: &'a Label,
    looped: bool,
    into: usize,
    out: usize,
}

fn signatures(x: &ConflictFile) -> Vec<Signature<'_>> {
    let ids: Vec<LineId> = x.ids().collect();
    let mut sigs: Vec<Signature<'_>> = ids
        .iter()
        .map(|id| Signature { label: &x.nodes()[id], looped: false, into: 0, out: 0 })
        .collect();
    for &(a, b) in x.order() {
        let (i, j) = (index(&ids, a), index(&ids, b));
        if i == j {
            sigs[i].looped = true;
        }
        sigs[i].out += 1;
        sigs[j].into += 1;
    }
    sigs
}

fn index(ids: &[LineId], id: LineId) -> usize {
    ids.binary_search(&id).expect("relation names a line")
}

/// Backtracking search, vertices of `x` in ascending id order, candidates in
/// ascending id order.
pub(super) fn find_isomorphism(x: &ConflictFile, y: &ConflictFile) -> Option<BTreeMap<LineId, LineId>> {
    if x.len() != y.len() || x.order().len() != y.order().len() {
        return None;
    }
    let (sx, sy) = (signatures(x), signatures(y));
    let mut sorted_x = sx.clone();
    let mut sorted_y = sy.clone();
    sorted_x.sort();
    sorted_y.sort();
    if sorted_x != sorted_y {
        return None;
    }
    let xs: Vec<LineId> = x.ids().collect();
    let ys: Vec<LineId> = y.ids().collect();
    let n = xs.len();
    let rel = |o: &ConflictFile, ids: &[LineId]| {
        let mut m = vec![vec![false; ids.len()]; ids.len()];
        for &(a, b) in o.order() {
            m[index(ids, a)][index(ids, b)] = true;
        }
        m
    };
    let (rx, ry) = (rel(x, &xs), rel(y, &ys));
    let candidates: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..n).filter(|&j| sx[i] == sy[j]).collect())
        .collect();

    let mut assign: Vec<usize> = Vec::with_capacity(n);
    let mut used = vec![false; n];
    let mut next = vec![0usize; n];
    let mut i = 0;
    loop {
        if i == n {
            return Some(
                assign
                    .iter()
                    .enumerate()
                    .map(|(i, &j)| (xs[i], ys[j]))
                    .collect(),
            );
        }
        let mut placed = false;
        while next[i] < candidates[i].len() {
            let j = candidates[i][next[i]];
            next[i] += 1;
            if used[j] {
                continue;
            }
            let fits = assign.iter().enumerate().all(|(k, &l)| {
                rx[k][i] == ry[l][j] && rx[i][k] == ry[j][l]
            }) && rx[i][i] == ry[j][j];
            if fits {
                used[j] = true;
                assign.push(j);
                placed = true;
                break;
            }
        }
        if placed {
            i += 1;
            if i < n {
                next[i] = 0;
            }
        } else {
            if i == 0 {
                return None;
            }
            i -= 1;
            let j = assign.pop().expect("assigned");
            used[j] = false;
        }
    }
}
