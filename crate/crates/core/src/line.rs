//! Plain files and patches between them.
//!
//! A [`Patch`] from a file with `m` lines to a file with `n` lines is a partial
//! map `[m] -> [n]` which is injective, strictly increasing where defined and
//! preserves labels. Lines outside the domain are deleted, lines outside the
//! image are inserted.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

/// Errors raised by operations on files and patches.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LineError {
    #[error("label contains a line terminator")]
    InvalidLabel,
    #[error("source mismatch at line {index}")]
    SourceMismatch { index: usize },
    #[error("position {position} out of range for a file of {len} lines")]
    PositionOutOfRange { position: usize, len: usize },
    #[error("invalid patch: {0}")]
    InvalidPatch(PatchReport),
}

/// The content of one line. Never contains LF or CR.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Label(Arc<str>);

impl Label {
    pub fn new(text: &str) -> Result<Self, LineError> {
        if text.bytes().any(|b| b == b'\n' || b == b'\r') {
            return Err(LineError::InvalidLabel);
        }
        Ok(Label(Arc::from(text)))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(&*self.0, f)
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl TryFrom<&str> for Label {
    type Error = LineError;

    fn try_from(text: &str) -> Result<Self, LineError> {
        Label::new(text)
    }
}

/// A finite sequence of lines. The empty file is the monoidal unit.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct File {
    lines: Vec<Label>,
}

impl File {
    pub fn new(lines: Vec<Label>) -> Self {
        File { lines }
    }

    pub fn empty() -> Self {
        File::default()
    }

    pub fn from_lines<'a, I>(lines: I) -> Result<Self, LineError>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let lines = lines
            .into_iter()
            .map(Label::new)
            .collect::<Result<Vec<_>, _>>()?;
        Ok(File { lines })
    }

    /// Parses LF-separated text. A trailing LF does not start an extra line
    /// and a CR directly before an LF is dropped.
    pub fn from_text(text: &str) -> Result<Self, LineError> {
        if text.is_empty() {
            return Ok(File::empty());
        }
        let body = text.strip_suffix('\n').unwrap_or(text);
        File::from_lines(body.split('\n').map(|l| l.strip_suffix('\r').unwrap_or(l)))
    }

    /// Every line followed by LF.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for line in &self.lines {
            out.push_str(line.as_str());
            out.push('\n');
        }
        out
    }

    pub fn lines(&self) -> &[Label] {
        &self.lines
    }

    pub fn len(&self) -> usize {
        self.lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }

    pub fn concat(&self, other: &File) -> File {
        let mut lines = self.lines.clone();
        lines.extend(other.lines.iter().cloned());
        File { lines }
    }

    fn first_difference(&self, other: &File) -> Option<usize> {
        if self == other {
            return None;
        }
        let index = self
            .lines
            .iter()
            .zip(&other.lines)
            .position(|(a, b)| a != b)
            .unwrap_or_else(|| self.len().min(other.len()));
        Some(index)
    }
}

impl fmt::Debug for File {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(&self.lines).finish()
    }
}

/// One reason a patch is not a morphism of files.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PatchViolation {
    /// The map does not have one entry per source line.
    MapLength { expected: usize, found: usize },
    /// A source line is sent past the end of the target.
    OutOfRange { source: usize, target: usize },
    /// Two source lines share an image.
    NotInjective { first: usize, second: usize, target: usize },
    /// `first < second` but `map(first) > map(second)`.
    NotIncreasing { first: usize, second: usize },
    /// A line is sent to a line with another label.
    LabelMismatch { source: usize, target: usize },
}

impl fmt::Display for PatchViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PatchViolation::MapLength { expected, found } => {
                write!(f, "map has {found} entries, source has {expected} lines")
            }
            PatchViolation::OutOfRange { source, target } => {
                write!(f, "line {source} sent to {target}, past the end of the target")
            }
            PatchViolation::NotInjective { first, second, target } => {
                write!(f, "lines {first} and {second} both sent to {target}")
            }
            PatchViolation::NotIncreasing { first, second } => {
                write!(f, "lines {first} < {second} are sent in decreasing order")
            }
            PatchViolation::LabelMismatch { source, target } => {
                write!(f, "line {source} sent to {target} with a different label")
            }
        }
    }
}

/// Result of [`Patch::validate`]; empty when the patch is valid.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PatchReport {
    pub violations: Vec<PatchViolation>,
}

impl PatchReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for PatchReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return f.write_str("valid");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// A morphism between two files.
///
/// Both endpoints are stored in full, so two patches are equal only when
/// their sources, targets and maps all agree.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Patch {
    source: File,
    target: File,
    map: Vec<Option<usize>>,
}

impl fmt::Debug for Patch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pairs: Vec<_> = self.pairs().collect();
        f.debug_struct("Patch")
            .field("source", &self.source)
            .field("target", &self.target)
            .field("map", &pairs)
            .finish()
    }
}

impl Patch {
    /// Builds a patch without checking it; see [`Patch::validate`].
    pub fn from_parts(source: File, target: File, map: Vec<Option<usize>>) -> Self {
        Patch { source, target, map }
    }

    pub fn new(source: File, target: File, map: Vec<Option<usize>>) -> Result<Self, LineError> {
        let patch = Patch::from_parts(source, target, map);
        let report = patch.validate();
        if report.is_valid() {
            Ok(patch)
        } else {
            Err(LineError::InvalidPatch(report))
        }
    }

    /// Builds a patch from its defined `(source, target)` pairs.
    pub fn from_pairs(
        source: File,
        target: File,
        pairs: &[(usize, usize)],
    ) -> Result<Self, LineError> {
        let mut map = vec![None; source.len()];
        for &(i, j) in pairs {
            match map.get_mut(i) {
                Some(slot) => *slot = Some(j),
                None => {
                    return Err(LineError::PositionOutOfRange { position: i, len: source.len() })
                }
            }
        }
        Patch::new(source, target, map)
    }

    pub fn source(&self) -> &File {
        &self.source
    }

    pub fn target(&self) -> &File {
        &self.target
    }

    pub fn map(&self) -> &[Option<usize>] {
        &self.map
    }

    pub fn get(&self, i: usize) -> Option<usize> {
        self.map.get(i).copied().flatten()
    }

    /// The defined entries, in source order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.map.iter().enumerate().filter_map(|(i, j)| j.map(|j| (i, j)))
    }

    pub fn defined_count(&self) -> usize {
        self.map.iter().filter(|j| j.is_some()).count()
    }

    pub fn is_identity(&self) -> bool {
        self.source == self.target
            && self.map.iter().enumerate().all(|(i, j)| *j == Some(i))
    }

    pub fn validate(&self) -> PatchReport {
        let mut violations = Vec::new();
        if self.map.len() != self.source.len() {
            violations.push(PatchViolation::MapLength {
                expected: self.source.len(),
                found: self.map.len(),
            });
        }
        let mut previous: Option<(usize, usize)> = None;
        for (i, j) in self.pairs() {
            match self.target.lines.get(j) {
                None => violations.push(PatchViolation::OutOfRange { source: i, target: j }),
                Some(label) => {
                    if self.source.lines.get(i) != Some(label) {
                        violations.push(PatchViolation::LabelMismatch { source: i, target: j });
                    }
                }
            }
            if let Some((pi, pj)) = previous {
                if pj == j {
                    violations.push(PatchViolation::NotInjective { first: pi, second: i, target: j });
                } else if pj > j {
                    violations.push(PatchViolation::NotIncreasing { first: pi, second: i });
                }
            }
            previous = Some((i, j));
        }
        PatchReport { violations }
    }

    pub fn identity(file: &File) -> Self {
        Patch {
            source: file.clone(),
            target: file.clone(),
            map: (0..file.len()).map(Some).collect(),
        }
    }

    /// `self` followed by `next`.
    pub fn compose(&self, next: &Patch) -> Result<Patch, LineError> {
        if let Some(index) = self.target.first_difference(&next.source) {
            return Err(LineError::SourceMismatch { index });
        }
        let map = self.map.iter().map(|j| j.and_then(|j| next.get(j))).collect();
        Ok(Patch {
            source: self.source.clone(),
            target: next.target.clone(),
            map,
        })
    }

    /// Checks that `file` is the source of this patch and returns the target.
    pub fn apply(&self, file: &File) -> Result<File, LineError> {
        match file.first_difference(&self.source) {
            Some(index) => Err(LineError::SourceMismatch { index }),
            None => Ok(self.target.clone()),
        }
    }

    /// Side-by-side juxtaposition: `self` acts on the first lines and
    /// `other` on the remaining ones.
    pub fn tensor(&self, other: &Patch) -> Patch {
        let offset = self.target.len();
        let map = self
            .map
            .iter()
            .copied()
            .chain(other.map.iter().map(|j| j.map(|j| j + offset)))
            .collect();
        Patch {
            source: self.source.concat(&other.source),
            target: self.target.concat(&other.target),
            map,
        }
    }

    /// Inserts `label` so that it becomes line `position` of the target.
    pub fn insert_line(file: &File, position: usize, label: Label) -> Result<Patch, LineError> {
        if position > file.len() {
            return Err(LineError::PositionOutOfRange { position, len: file.len() });
        }
        let mut lines = file.lines.clone();
        lines.insert(position, label);
        let map = (0..file.len())
            .map(|j| Some(if j < position { j } else { j + 1 }))
            .collect();
        Ok(Patch {
            source: file.clone(),
            target: File { lines },
            map,
        })
    }

    pub fn delete_line(file: &File, position: usize) -> Result<Patch, LineError> {
        if position >= file.len() {
            return Err(LineError::PositionOutOfRange { position, len: file.len() });
        }
        let mut lines = file.lines.clone();
        lines.remove(position);
        let map = (0..file.len())
            .map(|j| match j.cmp(&position) {
                core::cmp::Ordering::Less => Some(j),
                core::cmp::Ordering::Equal => None,
                core::cmp::Ordering::Greater => Some(j - 1),
            })
            .collect();
        Ok(Patch {
            source: file.clone(),
            target: File { lines },
            map,
        })
    }

    /// Factors the patch into deletions (descending positions) followed by
    /// insertions (ascending positions).
    pub fn to_generators(&self) -> Result<GeneratorSeq, LineError> {
        let report = self.validate();
        if !report.is_valid() {
            return Err(LineError::InvalidPatch(report));
        }
        let mut steps: Vec<Step> = (0..self.source.len())
            .rev()
            .filter(|&i| self.map[i].is_none())
            .map(Step::Delete)
            .collect();
        let mut image = vec![false; self.target.len()];
        for (_, j) in self.pairs() {
            image[j] = true;
        }
        for (j, hit) in image.iter().enumerate() {
            if !hit {
                steps.push(Step::Insert(j, self.target.lines[j].clone()));
            }
        }
        Ok(GeneratorSeq { steps })
    }
}

/// A single insertion or deletion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Step {
    Delete(usize),
    Insert(usize, Label),
}

/// A patch written as a sequence of generators.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GeneratorSeq {
    pub steps: Vec<Step>,
}

impl GeneratorSeq {
    /// Composes the generators starting from `source`.
    pub fn replay(&self, source: &File) -> Result<Patch, LineError> {
        let mut patch = Patch::identity(source);
        for step in &self.steps {
            let next = match step {
                Step::Delete(i) => Patch::delete_line(patch.target(), *i)?,
                Step::Insert(i, label) => Patch::insert_line(patch.target(), *i, label.clone())?,
            };
            patch = patch.compose(&next)?;
        }
        Ok(patch)
    }
}

/// A patch from `a` to `b` keeping as many lines as possible.
///
/// Among the maximum matchings, the one with the lexicographically smallest
/// sequence of matched source indices is returned, ties broken by the
/// smallest target indices.
pub fn diff(a: &File, b: &File) -> Patch {
    let (n, m) = (a.len(), b.len());
    let width = m + 1;
    // suffix[i * width + j] = LCS length of a[i..] and b[j..]
    let mut suffix = vec![0u32; (n + 1) * width];
    for i in (0..n).rev() {
        for j in (0..m).rev() {
            suffix[i * width + j] = if a.lines[i] == b.lines[j] {
                suffix[(i + 1) * width + j + 1] + 1
            } else {
                suffix[(i + 1) * width + j].max(suffix[i * width + j + 1])
            };
        }
    }
    let mut map = vec![None; n];
    let mut remaining = suffix[0];
    let (mut i, mut j) = (0, 0);
    while remaining > 0 {
        let (ii, jj) = (i..n)
            .flat_map(|ii| (j..m).map(move |jj| (ii, jj)))
            .find(|&(ii, jj)| a.lines[ii] == b.lines[jj] && suffix[(ii + 1) * width + jj + 1] == remaining - 1)
            .expect("suffix table guarantees a match");
        map[ii] = Some(jj);
        (i, j) = (ii + 1, jj + 1);
        remaining -= 1;
    }
    Patch {
        source: a.clone(),
        target: b.clone(),
        map,
    }
}

impl fmt::Display for Patch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (k, (i, j)) in self.pairs().enumerate() {
            if k > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{i}->{j}")?;
        }
        f.write_str("}")
    }
}
