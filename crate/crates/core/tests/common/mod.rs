#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use copatch_core::conflict::{ConflictFile, LineId, PartialMorphism};
use copatch_core::line::{File, Label, Patch};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn file(s: &str) -> File {
    File::from_lines(s.split("").filter(|c| !c.is_empty())).unwrap()
}

pub fn label(s: &str) -> Label {
    Label::new(s).unwrap()
}

pub fn random_file(rng: &mut impl Rng, max_len: usize, alphabet: &[&str]) -> File {
    let n = rng.gen_range(0..=max_len);
    File::new((0..n).map(|_| label(alphabet.choose(rng).unwrap())).collect())
}

/// A patch out of `source`: keep a random subset, insert random lines.
pub fn random_patch(rng: &mut impl Rng, source: &File, max_inserts: usize, alphabet: &[&str]) -> Patch {
    let mut target: Vec<Label> = Vec::new();
    let mut map = Vec::new();
    let mut inserts = rng.gen_range(0..=max_inserts);
    for line in source.lines() {
        while inserts > 0 && rng.gen_bool(0.3) {
            target.push(label(alphabet.choose(rng).unwrap()));
            inserts -= 1;
        }
        if rng.gen_bool(0.7) {
            map.push(Some(target.len()));
            target.push(line.clone());
        } else {
            map.push(None);
        }
    }
    for _ in 0..inserts {
        target.push(label(alphabet.choose(rng).unwrap()));
    }
    Patch::new(source.clone(), File::new(target), map).unwrap()
}

/// A random object on `n` lines with sparse, shuffled ids.
pub fn random_object(rng: &mut impl Rng, n: usize, alphabet: &[&str], density: f64) -> Arc<ConflictFile> {
    let mut ids: Vec<u32> = (0..(n as u32 * 3 + 1)).collect();
    ids.shuffle(rng);
    ids.truncate(n);
    let nodes: BTreeMap<LineId, Label> = ids
        .iter()
        .map(|&i| (LineId(i), label(alphabet.choose(rng).unwrap())))
        .collect();
    let mut pairs = Vec::new();
    for &x in &ids {
        for &y in &ids {
            if rng.gen_bool(density) {
                pairs.push((LineId(x), LineId(y)));
            }
        }
    }
    Arc::new(ConflictFile::with_closure(nodes, pairs).unwrap())
}

/// A random valid morphism: random label-respecting choices, then entries
/// breaking monotonicity are dropped until none remain.
pub fn random_morphism(rng: &mut impl Rng, source: &Arc<ConflictFile>, target: &Arc<ConflictFile>) -> PartialMorphism {
    let mut map = BTreeMap::new();
    for (a, l) in source.nodes() {
        let options: Vec<LineId> = target
            .nodes()
            .iter()
            .filter(|(_, m)| *m == l)
            .map(|(b, _)| *b)
            .collect();
        if !options.is_empty() && rng.gen_bool(0.8) {
            map.insert(*a, *options.choose(rng).unwrap());
        }
    }
    loop {
        let bad = source.order().iter().find(|(a, a2)| match (map.get(a), map.get(a2)) {
            (Some(b), Some(b2)) => !target.lt(*b, *b2),
            _ => false,
        });
        match bad {
            Some(&(a, a2)) => {
                let drop = if rng.gen_bool(0.5) { a } else { a2 };
                map.remove(&drop);
            }
            None => break,
        }
    }
    let m = PartialMorphism::from_parts(source.clone(), target.clone(), map);
    assert!(m.validate().is_valid());
    m
}

/// The same object with ids renamed by `rename`.
pub fn rename(x: &ConflictFile, rename: &BTreeMap<LineId, LineId>) -> ConflictFile {
    let nodes = x.nodes().iter().map(|(id, l)| (rename[id], l.clone())).collect();
    let order: BTreeSet<_> = x.order().iter().map(|(a, b)| (rename[a], rename[b])).collect();
    ConflictFile::new(nodes, order).unwrap()
}

pub fn random_renaming(rng: &mut impl Rng, x: &ConflictFile) -> BTreeMap<LineId, LineId> {
    let mut fresh: Vec<u32> = (100..100 + 2 * x.len() as u32 + 1).collect();
    fresh.shuffle(rng);
    x.ids().zip(fresh).map(|(a, b)| (a, LineId(b))).collect()
}

/// Every valid morphism between two small objects.
pub fn all_morphisms(source: &Arc<ConflictFile>, target: &Arc<ConflictFile>) -> Vec<PartialMorphism> {
    let xs: Vec<LineId> = source.ids().collect();
    let ys: Vec<Option<LineId>> = std::iter::once(None).chain(target.ids().map(Some)).collect();
    let mut out = Vec::new();
    let mut choice = vec![0usize; xs.len()];
    loop {
        let map: BTreeMap<LineId, LineId> = xs
            .iter()
            .zip(&choice)
            .filter_map(|(a, &c)| ys[c].map(|b| (*a, b)))
            .collect();
        let m = PartialMorphism::from_parts(source.clone(), target.clone(), map);
        if m.validate().is_valid() {
            out.push(m);
        }
        let mut i = 0;
        loop {
            if i == xs.len() {
                return out;
            }
            choice[i] += 1;
            if choice[i] < ys.len() {
                break;
            }
            choice[i] = 0;
            i += 1;
        }
    }
}

/// Longest common subsequence by exhaustive recursion.
pub fn brute_lcs(a: &[Label], b: &[Label]) -> usize {
    match (a.split_first(), b.split_first()) {
        (Some((x, ra)), Some((y, rb))) => {
            let skip = brute_lcs(ra, b).max(brute_lcs(a, rb));
            if x == y {
                skip.max(1 + brute_lcs(ra, rb))
            } else {
                skip
            }
        }
        _ => 0,
    }
}

/// Every file over `alphabet` with at most `max_len` lines.
pub fn all_files(max_len: usize, alphabet: &[&str]) -> Vec<File> {
    let mut out = vec![File::empty()];
    let mut layer = vec![Vec::<Label>::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for prefix in &layer {
            for l in alphabet {
                let mut p = prefix.clone();
                p.push(label(l));
                next.push(p);
            }
        }
        out.extend(next.iter().cloned().map(File::new));
        layer = next;
    }
    out
}

use copatch_core::conflict::pushout;
use copatch_core::repository::{Configuration, EventId, Evaluator, Repository, DEFAULT_ENUMERATION_BOUND};

pub fn event(name: &str) -> EventId {
    EventId::new(name).unwrap()
}

/// A random history of `events` events. Each event picks random causes,
/// walks a random linear extension of the acyclic part of the state below
/// it, keeps every line (or, with `deletions`, most lines) and inserts a few.
pub fn random_repository(rng: &mut impl Rng, events: usize, deletions: bool) -> Repository {
    let mut repo = Repository::new();
    let mut names: Vec<EventId> = Vec::new();
    for k in 0..events {
        let mut causes: BTreeSet<EventId> = BTreeSet::new();
        if k > 0 && !rng.gen_bool(0.15) {
            while causes.is_empty() {
                causes = names.iter().filter(|_| rng.gen_bool(0.4)).cloned().collect();
            }
        }
        let mut below = Configuration::new();
        for c in &causes {
            below.insert(c.clone());
            below.extend(repo.es().below(c));
        }
        let state = repo.state_ignoring_conflicts(&below).unwrap();
        let mut remaining: Vec<LineId> = state.ids().filter(|&v| !state.lt(v, v)).collect();
        let mut lines: Vec<Label> = Vec::new();
        let mut map = BTreeMap::new();
        let fresh = |rng: &mut dyn rand::RngCore| label(["a", "b", "c"].choose(rng).unwrap());
        while !remaining.is_empty() {
            let available: Vec<usize> = (0..remaining.len())
                .filter(|&i| remaining.iter().all(|&y| y == remaining[i] || !state.lt(y, remaining[i])))
                .collect();
            let v = remaining.remove(*available.choose(rng).unwrap());
            if rng.gen_bool(0.25) {
                lines.push(fresh(rng));
            }
            if !deletions || rng.gen_bool(0.75) {
                map.insert(v, LineId(lines.len() as u32));
                lines.push(state.nodes()[&v].clone());
            }
        }
        if rng.gen_bool(0.6) || lines.is_empty() {
            let at = rng.gen_range(0..=lines.len());
            lines.insert(at, fresh(rng));
            map.values_mut().filter(|j| j.0 as usize >= at).for_each(|j| j.0 += 1);
        }
        let target = Arc::new(ConflictFile::embed(&File::new(lines)));
        let name = event(&format!("e{k}"));
        repo.add_event(name.clone(), causes, PartialMorphism::from_parts(state, target, map)).unwrap();
        names.push(name);
    }
    repo
}

/// Every way the repository's states disagree with themselves: a linear
/// extension giving a non-isomorphic state, a trace-graph square whose
/// transitions do not commute, or whose top is not the pushout of its
/// lower transitions.
pub fn coherence_failures(repo: &Repository) -> Vec<String> {
    let mut failures = Vec::new();
    let es = repo.es().without_conflicts();
    let configs = es.configurations(DEFAULT_ENUMERATION_BOUND).unwrap();
    let known: BTreeSet<&Configuration> = configs.iter().collect();
    let mut ev = Evaluator::new(repo);
    for x in &configs {
        let state = ev.state_ignoring_conflicts(x).unwrap();
        for order in es.linear_extensions(x) {
            let along = repo.state_along(&order).unwrap();
            if state.object().is_isomorphic(&along).is_none() {
                failures.push(format!("{x:?} along {order:?}"));
            }
        }
        let outside: Vec<&EventId> = es.events().filter(|e| !x.contains(*e)).collect();
        for (i, e1) in outside.iter().enumerate() {
            for e2 in &outside[i + 1..] {
                let with = |es: &[&EventId]| -> Configuration {
                    let mut y = x.clone();
                    y.extend(es.iter().map(|e| (*e).clone()));
                    y
                };
                let (x1, x2, x12) = (with(&[e1]), with(&[e2]), with(&[e1, e2]));
                if !(known.contains(&x1) && known.contains(&x2) && known.contains(&x12)) {
                    continue;
                }
                let t1 = ev.transition(x, e1).unwrap();
                let t2 = ev.transition(x, e2).unwrap();
                let t12 = ev.transition(&x1, e2).unwrap();
                let t21 = ev.transition(&x2, e1).unwrap();
                if t1.compose(&t12).unwrap() != t2.compose(&t21).unwrap() {
                    failures.push(format!("square at {x:?} + {e1}, {e2} does not commute"));
                }
                let top = ev.state_ignoring_conflicts(&x12).unwrap();
                let po = pushout(&t1, &t2).unwrap();
                if po.apex().is_isomorphic(top.object()).is_none() {
                    failures.push(format!("square at {x:?} + {e1}, {e2} is not a pushout"));
                }
            }
        }
    }
    failures
}
