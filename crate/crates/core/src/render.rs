//! Canonical text encodings and conflict rendering.
//!
//! Objects:
//!
//! ```text
//! copatch-object 1
//! node <id> <label>
//! rel <x> <y>
//! ```
//!
//! with nodes in ascending id order, the full transitive relation sorted by
//! `(x, y)`, and `%`, LF and CR in labels written `%25`, `%0A`, `%0D`.
//!
//! Morphisms:
//!
//! ```text
//! copatch-morphism 1
//! src-digest <sha256 of the source encoding, lowercase hex>
//! <target object block>
//! map <src-id> <dst-id>
//! ```
//!
//! Decoding accepts exactly the strings encoding produces.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt::Write;

use sha2::{Digest, Sha256};

use crate::conflict::{ConflictFile, LineId, PartialMorphism};
use crate::line::Label;

const OBJECT_HEADER: &str = "copatch-object 1";
const MORPHISM_HEADER: &str = "copatch-morphism 1";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DecodeError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("decoded value is invalid: {0}")]
    Validation(String),
    #[error("source digest {found} does not match {expected}")]
    DigestMismatch { expected: String, found: String },
}

fn parse_error(line: usize, message: &str) -> DecodeError {
    DecodeError::Parse { line, message: message.to_string() }
}

fn escape(label: &str, out: &mut String) {
    for c in label.chars() {
        match c {
            '%' => out.push_str("%25"),
            '\n' => out.push_str("%0A"),
            '\r' => out.push_str("%0D"),
            c => out.push(c),
        }
    }
}

fn unescape(text: &str) -> Option<String> {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(at) = rest.find('%') {
        out.push_str(&rest[..at]);
        let code = rest.get(at + 1..at + 3)?;
        out.push(match code {
            "25" => '%',
            "0A" => '\n',
            "0D" => '\r',
            _ => return None,
        });
        rest = &rest[at + 3..];
    }
    out.push_str(rest);
    Some(out)
}

pub fn encode_object(x: &ConflictFile) -> String {
    let mut out = String::new();
    write_object(x, &mut out);
    out
}

fn write_object(x: &ConflictFile, out: &mut String) {
    out.push_str(OBJECT_HEADER);
    out.push('\n');
    for (id, label) in x.nodes() {
        let _ = write!(out, "node {id} ");
        escape(label.as_str(), out);
        out.push('\n');
    }
    for (a, b) in x.order() {
        let _ = writeln!(out, "rel {a} {b}");
    }
}

/// SHA-256 of the canonical encoding, lowercase hex.
pub fn object_digest(x: &ConflictFile) -> String {
    hex::encode(Sha256::digest(encode_object(x).as_bytes()))
}

/// Splits text into LF-terminated lines; the last line must be terminated.
fn split_lines(text: &str) -> Result<Vec<&str>, DecodeError> {
    if text.is_empty() {
        return Err(parse_error(1, "empty input"));
    }
    if !text.ends_with('\n') {
        return Err(parse_error(text.matches('\n').count() + 1, "missing final newline"));
    }
    Ok(text[..text.len() - 1].split('\n').collect())
}

fn parse_id(token: &str, line: usize) -> Result<LineId, DecodeError> {
    let canonical = token == "0" || (!token.starts_with('0') && !token.is_empty());
    if !canonical || !token.bytes().all(|b| b.is_ascii_digit()) {
        return Err(parse_error(line, "malformed id"));
    }
    token.parse().map(LineId).map_err(|_| parse_error(line, "id out of range"))
}

fn parse_pair(rest: &str, line: usize) -> Result<(LineId, LineId), DecodeError> {
    let (x, y) = rest.split_once(' ').ok_or_else(|| parse_error(line, "expected two ids"))?;
    Ok((parse_id(x, line)?, parse_id(y, line)?))
}

/// Parses an object block starting at `lines[0]` (numbered from `first`),
/// stopping before the first line that is neither `node` nor `rel`.
fn parse_object_block(lines: &[&str], first: usize) -> Result<(ConflictFile, usize), DecodeError> {
    if lines.first() != Some(&OBJECT_HEADER) {
        return Err(parse_error(first, "expected object header"));
    }
    let mut nodes = BTreeMap::new();
    let mut order = BTreeSet::new();
    let mut used = 1;
    for (offset, text) in lines.iter().enumerate().skip(1) {
        let line = first + offset;
        if let Some(rest) = text.strip_prefix("node ") {
            if !order.is_empty() {
                return Err(parse_error(line, "node after rel"));
            }
            let (id, label) = rest.split_once(' ').ok_or_else(|| parse_error(line, "missing label"))?;
            let id = parse_id(id, line)?;
            if nodes.keys().next_back().is_some_and(|last| *last >= id) {
                return Err(parse_error(line, "node ids not ascending"));
            }
            let label = unescape(label).ok_or_else(|| parse_error(line, "bad escape"))?;
            let label = Label::new(&label).map_err(|_| parse_error(line, "bad label"))?;
            nodes.insert(id, label);
        } else if let Some(rest) = text.strip_prefix("rel ") {
            let pair = parse_pair(rest, line)?;
            if order.last().is_some_and(|last| *last >= pair) {
                return Err(parse_error(line, "rel pairs not ascending"));
            }
            order.insert(pair);
        } else {
            break;
        }
        used += 1;
    }
    let object = ConflictFile::from_parts(nodes, order);
    let report = object.validate();
    if !report.is_valid() {
        return Err(DecodeError::Validation(report.to_string()));
    }
    Ok((object, used))
}

pub fn decode_object(text: &str) -> Result<ConflictFile, DecodeError> {
    let lines = split_lines(text)?;
    let (object, used) = parse_object_block(&lines, 1)?;
    if used != lines.len() {
        return Err(parse_error(used + 1, "unexpected line"));
    }
    Ok(object)
}

pub fn encode_morphism(m: &PartialMorphism) -> String {
    let mut out = String::new();
    out.push_str(MORPHISM_HEADER);
    out.push('\n');
    let _ = writeln!(out, "src-digest {}", object_digest(m.source()));
    write_object(m.target(), &mut out);
    for (a, b) in m.map() {
        let _ = writeln!(out, "map {a} {b}");
    }
    out
}

/// A morphism encoding before it is attached to a source object.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MorphismParts {
    pub source_digest: String,
    pub target: ConflictFile,
    pub map: BTreeMap<LineId, LineId>,
}

pub fn parse_morphism(text: &str) -> Result<MorphismParts, DecodeError> {
    let lines = split_lines(text)?;
    if lines[0] != MORPHISM_HEADER {
        return Err(parse_error(1, "expected morphism header"));
    }
    let digest = lines
        .get(1)
        .and_then(|l| l.strip_prefix("src-digest "))
        .ok_or_else(|| parse_error(2, "expected src-digest"))?;
    if digest.len() != 64 || !digest.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f')) {
        return Err(parse_error(2, "malformed digest"));
    }
    let (target, used) = parse_object_block(&lines[2..], 3)?;
    let mut map = BTreeMap::new();
    for (offset, text) in lines[2 + used..].iter().enumerate() {
        let line = 3 + used + offset;
        let rest = text
            .strip_prefix("map ")
            .ok_or_else(|| parse_error(line, "expected map line"))?;
        let (a, b) = parse_pair(rest, line)?;
        if map.keys().next_back().is_some_and(|last| *last >= a) {
            return Err(parse_error(line, "map ids not ascending"));
        }
        if !target.contains(b) {
            return Err(DecodeError::Validation(format!("{b} is not a target line")));
        }
        map.insert(a, b);
    }
    Ok(MorphismParts { source_digest: digest.to_string(), target, map })
}

impl MorphismParts {
    /// Attaches the parsed map to `source`, which must have the recorded
    /// digest.
    pub fn attach(self, source: &Arc<ConflictFile>) -> Result<PartialMorphism, DecodeError> {
        let expected = object_digest(source);
        if expected != self.source_digest {
            return Err(DecodeError::DigestMismatch { expected, found: self.source_digest });
        }
        PartialMorphism::new(source.clone(), Arc::new(self.target), self.map)
            .map_err(|e| DecodeError::Validation(e.to_string()))
    }
}

pub fn decode_morphism(text: &str, source: &Arc<ConflictFile>) -> Result<PartialMorphism, DecodeError> {
    parse_morphism(text)?.attach(source)
}

/// Text rendering of an object with git-style markers around incomparable
/// lines and `(cycle` blocks around strongly connected components.
pub fn render_conflicts(x: &ConflictFile) -> String {
    if let Some(file) = x.is_linear() {
        return file.to_text();
    }
    // With a transitive relation, x and y share a component iff x < y < x.
    let ids: Vec<LineId> = x.ids().collect();
    let mut component: BTreeMap<LineId, usize> = BTreeMap::new();
    let mut members: Vec<Vec<LineId>> = Vec::new();
    for &id in &ids {
        if component.contains_key(&id) {
            continue;
        }
        let mut group: Vec<LineId> = ids
            .iter()
            .copied()
            .filter(|&other| other == id || (x.lt(id, other) && x.lt(other, id)))
            .collect();
        let key = |l: &LineId| (x.nodes()[l].clone(), *l);
        group.sort_by_key(key);
        for &m in &group {
            component.insert(m, members.len());
        }
        members.push(group);
    }
    let n = members.len();
    let mut below = alloc::vec![BTreeSet::new(); n];
    for &(a, b) in x.order() {
        let (p, q) = (component[&a], component[&b]);
        if p != q {
            below[q].insert(p);
        }
    }
    let sort_key = |c: usize| {
        let first = members[c][0];
        (x.nodes()[&first].clone(), first)
    };

    let mut out = String::new();
    let mut done = alloc::vec![false; n];
    let mut remaining = n;
    while remaining > 0 {
        let mut minimal: Vec<usize> = (0..n)
            .filter(|&c| !done[c] && below[c].iter().all(|&p| done[p]))
            .collect();
        minimal.sort_by_key(|&c| sort_key(c));
        if minimal.len() > 1 {
            out.push_str("<<<<<<<\n");
        }
        for (i, &c) in minimal.iter().enumerate() {
            if i > 0 {
                out.push_str("=======\n");
            }
            let group = &members[c];
            let cyclic = group.len() > 1 || x.lt(group[0], group[0]);
            if cyclic {
                out.push_str("(cycle\n");
            }
            for id in group {
                out.push_str(x.nodes()[id].as_str());
                out.push('\n');
            }
            if cyclic {
                out.push_str("cycle)\n");
            }
            done[c] = true;
        }
        if minimal.len() > 1 {
            out.push_str(">>>>>>>\n");
        }
        remaining -= minimal.len();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conflict::{initial, pushout};
    use crate::line::{File, Patch};

    fn file(s: &str) -> File {
        File::from_lines(s.split("").filter(|c| !c.is_empty())).unwrap()
    }

    fn object(labels: &[&str], pairs: &[(u32, u32)]) -> ConflictFile {
        let nodes = labels
            .iter()
            .enumerate()
            .map(|(i, l)| (LineId(i as u32), Label::new(l).unwrap()))
            .collect();
        ConflictFile::with_closure(nodes, pairs.iter().map(|&(a, b)| (LineId(a), LineId(b)))).unwrap()
    }

    fn diamond() -> ConflictFile {
        object(&["a", "c", "b", "d"], &[(0, 1), (1, 2), (0, 3), (3, 2)])
    }

    #[test]
    fn initial_encoding() {
        assert_eq!(encode_object(&initial()), "copatch-object 1\n");
        assert_eq!(decode_object("copatch-object 1\n").unwrap(), initial());
    }

    #[test]
    fn five_vertex_figure_encoding() {
        // a' < a < {c, d} < b
        let x = object(&["a'", "a", "c", "d", "b"], &[(0, 1), (1, 2), (1, 3), (2, 4), (3, 4)]);
        let text = encode_object(&x);
        assert_eq!(text.lines().filter(|l| l.starts_with("node ")).count(), 5);
        assert_eq!(text.lines().filter(|l| l.starts_with("rel ")).count(), 9);
        assert_eq!(decode_object(&text).unwrap(), x);
    }

    #[test]
    fn labels_are_escaped() {
        let x = object(&["50%", "", "a b"], &[]);
        let text = encode_object(&x);
        assert!(text.contains("node 0 50%25\n"));
        assert!(text.contains("node 1 \n"));
        assert_eq!(decode_object(&text).unwrap(), x);
        // %0A decodes to LF, which is not a legal label
        assert!(decode_object("copatch-object 1\nnode 0 %0A\n").is_err());
    }

    #[test]
    fn decode_rejects_non_canonical_text() {
        for bad in [
            "copatch-object 1",
            "copatch-object 2\n",
            "copatch-object 1\nnode 01 a\n",
            "copatch-object 1\nnode 1 a\nnode 0 b\n",
            "copatch-object 1\nnode 0 a\nnode 1 b\nrel 0 1\nrel 0 1\n",
            "copatch-object 1\nnode 0 %41\n",
            "copatch-object 1\nnode 0 a\nextra\n",
            "copatch-object 1\nnode 0 a\nrel 0 1\nnode 1 b\n",
        ] {
            assert!(matches!(decode_object(bad), Err(DecodeError::Parse { .. })), "{bad:?}");
        }
        assert_eq!(
            decode_object("copatch-object 1\nnode 0 a\nnode 1 b\n\n"),
            Err(DecodeError::Parse { line: 4, message: "unexpected line".into() })
        );
        let not_transitive = "copatch-object 1\nnode 0 a\nnode 1 b\nnode 2 c\nrel 0 1\nrel 1 2\n";
        assert!(matches!(decode_object(not_transitive), Err(DecodeError::Validation(_))));
    }

    #[test]
    fn identity_morphism_encoding() {
        let ab = Arc::new(ConflictFile::embed(&file("ab")));
        let id = PartialMorphism::identity(&ab);
        let text = encode_morphism(&id);
        assert_eq!(text.lines().filter(|l| l.starts_with("map ")).count(), 2);
        assert_eq!(decode_morphism(&text, &ab).unwrap(), id);
        let other = Arc::new(ConflictFile::embed(&file("ba")));
        assert!(matches!(decode_morphism(&text, &other), Err(DecodeError::DigestMismatch { .. })));
    }

    #[test]
    fn deletion_has_no_map_line() {
        let p = Patch::from_pairs(file("abc"), file("ac"), &[(0, 0), (2, 1)]).unwrap();
        let m = PartialMorphism::embed_patch(&p).unwrap();
        let text = encode_morphism(&m);
        assert!(text.ends_with("map 0 0\nmap 2 1\n"));
        assert!(!text.contains("map 1 "));
        assert_eq!(decode_morphism(&text, m.source()).unwrap(), m);
    }

    #[test]
    fn renders_linear_diamond_and_cycle() {
        assert_eq!(render_conflicts(&ConflictFile::embed(&file("abc"))), "a\nb\nc\n");
        assert_eq!(render_conflicts(&diamond()), "a\n<<<<<<<\nc\n=======\nd\n>>>>>>>\nb\n");
        let cycle = object(&["b", "a"], &[(0, 1), (1, 0)]);
        assert_eq!(render_conflicts(&cycle), "(cycle\na\nb\ncycle)\n");
        assert_eq!(render_conflicts(&initial()), "");
    }

    #[test]
    fn renders_three_way_conflict_and_loop() {
        let three = object(&["z", "y", "x"], &[]);
        assert_eq!(render_conflicts(&three), "<<<<<<<\nx\n=======\ny\n=======\nz\n>>>>>>>\n");
        let looped = object(&["a", "b"], &[(0, 0), (0, 1)]);
        assert_eq!(render_conflicts(&looped), "(cycle\na\ncycle)\nb\n");
    }

    #[test]
    fn pushout_rendering_matches_markers() {
        let f = PartialMorphism::embed_patch(&Patch::from_pairs(file("ab"), file("acb"), &[(0, 0), (1, 2)]).unwrap())
            .unwrap();
        let g = PartialMorphism::embed_patch(&Patch::from_pairs(file("ab"), file("adb"), &[(0, 0), (1, 2)]).unwrap())
            .unwrap();
        let po = pushout(&f, &g).unwrap();
        assert_eq!(encode_object(po.apex()), encode_object(&diamond()));
    }
}
