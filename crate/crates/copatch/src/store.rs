//! The on-disk repository under `.copatch/`.
//!
//! ```text
//! .copatch/
//!   heads           current maximal event ids, one per line
//!   events/<id>     `cause <id>` lines, then the morphism encoding
//!   messages/<id>   the message given to `record`
//!   lock            present while a command mutates the store
//! ```
//!
//! Every file is written to a temporary name and renamed into place, and
//! `heads` is renamed last. Only events reachable from `heads` are loaded, so
//! a command killed midway leaves either the old store or the new one.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use copatch_core::repository::{split_event, EventId, RepoError, Repository};

pub const STORE_DIR: &str = ".copatch";

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("not a copatch repository: {0}")]
    NotARepository(PathBuf),
    #[error("already a copatch repository: {0}")]
    AlreadyInitialized(PathBuf),
    #[error("repository is locked by another command (remove {0} if no command is running)")]
    Locked(PathBuf),
    #[error("corrupt store: {0}")]
    Corrupt(String),
}

fn io_error(path: &Path) -> impl FnOnce(io::Error) -> StoreError + '_ {
    move |source| StoreError::Io { path: path.to_path_buf(), source }
}

pub struct Store {
    root: PathBuf,
}

/// Exclusive right to mutate a store; released on drop.
pub struct Lock {
    path: PathBuf,
}

impl Drop for Lock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

/// A repository read from disk, with its messages.
pub struct Loaded {
    pub repo: Repository,
    pub messages: BTreeMap<EventId, String>,
}

impl Store {
    pub fn init(dir: &Path) -> Result<Store, StoreError> {
        let root = dir.join(STORE_DIR);
        if root.exists() {
            return Err(StoreError::AlreadyInitialized(root));
        }
        for sub in ["events", "messages"] {
            let path = root.join(sub);
            fs::create_dir_all(&path).map_err(io_error(&path))?;
        }
        let store = Store { root };
        write_atomic(&store.root.join("heads"), b"")?;
        Ok(store)
    }

    pub fn open(dir: &Path) -> Result<Store, StoreError> {
        let root = dir.join(STORE_DIR);
        if !root.join("heads").is_file() {
            return Err(StoreError::NotARepository(dir.to_path_buf()));
        }
        Ok(Store { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn lock(&self) -> Result<Lock, StoreError> {
        let path = self.root.join("lock");
        match fs::OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
                Ok(Lock { path })
            }
            Err(e) if e.kind() == io::ErrorKind::AlreadyExists => Err(StoreError::Locked(path)),
            Err(e) => Err(StoreError::Io { path, source: e }),
        }
    }

    fn event_path(&self, id: &EventId) -> PathBuf {
        self.root.join("events").join(id.as_str())
    }

    fn message_path(&self, id: &EventId) -> PathBuf {
        self.root.join("messages").join(id.as_str())
    }

    pub fn read_heads(&self) -> Result<Vec<EventId>, StoreError> {
        let path = self.root.join("heads");
        let text = fs::read_to_string(&path).map_err(io_error(&path))?;
        let mut heads = Vec::new();
        for line in text.lines() {
            heads.push(EventId::new(line).map_err(|_| StoreError::Corrupt(format!("bad head {line:?}")))?);
        }
        Ok(heads)
    }

    /// Loads every event reachable from `heads`, checking that each file's
    /// content hashes to its name and that each morphism matches the state
    /// below its event.
    pub fn load(&self) -> Result<Loaded, StoreError> {
        let mut texts: BTreeMap<EventId, String> = BTreeMap::new();
        let mut causes: BTreeMap<EventId, BTreeSet<EventId>> = BTreeMap::new();
        let mut stack = self.read_heads()?;
        while let Some(id) = stack.pop() {
            if texts.contains_key(&id) {
                continue;
            }
            let path = self.event_path(&id);
            let text = match fs::read_to_string(&path) {
                Ok(t) => t,
                Err(e) if e.kind() == io::ErrorKind::NotFound => {
                    return Err(StoreError::Corrupt(format!("missing event {id}")))
                }
                Err(e) => return Err(StoreError::Io { path, source: e }),
            };
            let (cs, _) = split_event(&text).map_err(|e| StoreError::Corrupt(format!("event {id}: {e}")))?;
            stack.extend(cs.iter().cloned());
            causes.insert(id.clone(), cs);
            texts.insert(id, text);
        }

        let mut repo = Repository::new();
        let mut placed: BTreeSet<EventId> = BTreeSet::new();
        let mut pending: Vec<EventId> = texts.keys().cloned().collect();
        while !pending.is_empty() {
            let before = pending.len();
            let mut rest = Vec::new();
            for id in pending {
                if causes[&id].is_subset(&placed) {
                    let got = repo
                        .insert_encoded(&texts[&id])
                        .map_err(|e| StoreError::Corrupt(format!("event {id}: {e}")))?;
                    if got != id {
                        return Err(StoreError::Corrupt(format!("event {id} hashes to {got}")));
                    }
                    placed.insert(id);
                } else {
                    rest.push(id);
                }
            }
            if rest.len() == before {
                return Err(StoreError::Corrupt("causes form a cycle".into()));
            }
            pending = rest;
        }

        let mut messages = BTreeMap::new();
        for id in texts.keys() {
            let path = self.message_path(id);
            match fs::read_to_string(&path) {
                Ok(m) => {
                    messages.insert(id.clone(), m);
                }
                Err(e) if e.kind() == io::ErrorKind::NotFound => {}
                Err(e) => return Err(StoreError::Io { path, source: e }),
            }
        }
        Ok(Loaded { repo, messages })
    }

    /// Files in `events/` and `messages/` that no head reaches, and leftover
    /// temporary files.
    pub fn orphans(&self, repo: &Repository) -> Result<Vec<String>, StoreError> {
        let mut out = Vec::new();
        for sub in ["events", "messages"] {
            let dir = self.root.join(sub);
            for entry in fs::read_dir(&dir).map_err(io_error(&dir))? {
                let entry = entry.map_err(io_error(&dir))?;
                let name = entry.file_name().to_string_lossy().into_owned();
                let known = EventId::new(&name).is_ok_and(|id| repo.es().contains(&id));
                if !known {
                    out.push(format!("{sub}/{name}"));
                }
            }
        }
        for entry in fs::read_dir(&self.root).map_err(io_error(&self.root))? {
            let name = entry.map_err(io_error(&self.root))?.file_name().to_string_lossy().into_owned();
            if name.contains(".tmp-") {
                out.push(name);
            }
        }
        Ok(out)
    }

    /// The writes that take the store from `old` to `new`.
    pub fn plan(
        &self,
        old: &Repository,
        new: &Repository,
        messages: &BTreeMap<EventId, String>,
    ) -> Result<CommitPlan, RepoError> {
        let mut steps = Vec::new();
        let fresh: Vec<EventId> = new
            .es()
            .topological_order()?
            .into_iter()
            .filter(|e| !old.es().contains(e))
            .collect();
        for id in &fresh {
            let text = new.event_text(id).expect("event is present");
            steps.extend(self.atomic_steps(self.event_path(id), text.into_bytes()));
            if let Some(m) = messages.get(id) {
                steps.extend(self.atomic_steps(self.message_path(id), m.clone().into_bytes()));
            }
        }
        let mut heads = String::new();
        for h in new.heads() {
            heads.push_str(h.as_str());
            heads.push('\n');
        }
        steps.extend(self.atomic_steps(self.root.join("heads"), heads.into_bytes()));
        Ok(CommitPlan { steps })
    }

    fn atomic_steps(&self, path: PathBuf, contents: Vec<u8>) -> [Step; 2] {
        let mut tmp = path.clone().into_os_string();
        tmp.push(format!(".tmp-{}", std::process::id()));
        let tmp = PathBuf::from(tmp);
        [Step::Write { path: tmp.clone(), contents }, Step::Rename { from: tmp, to: path }]
    }
}

#[derive(Debug, Clone)]
enum Step {
    Write { path: PathBuf, contents: Vec<u8> },
    Rename { from: PathBuf, to: PathBuf },
}

/// An ordered list of file writes and renames ending with the `heads`
/// rename.
#[derive(Debug, Clone)]
pub struct CommitPlan {
    steps: Vec<Step>,
}

impl CommitPlan {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn execute(&self) -> Result<(), StoreError> {
        self.execute_prefix(self.steps.len(), false)
    }

    /// Runs the first `n` steps, as if the process died afterwards. With
    /// `torn`, step `n` is also started: half its bytes are written, or the
    /// rename is skipped.
    pub fn execute_prefix(&self, n: usize, torn: bool) -> Result<(), StoreError> {
        for step in &self.steps[..n] {
            match step {
                Step::Write { path, contents } => {
                    let mut f = fs::File::create(path).map_err(io_error(path))?;
                    f.write_all(contents).map_err(io_error(path))?;
                    f.sync_all().map_err(io_error(path))?;
                }
                Step::Rename { from, to } => fs::rename(from, to).map_err(io_error(to))?,
            }
        }
        if torn {
            if let Some(Step::Write { path, contents }) = self.steps.get(n) {
                fs::write(path, &contents[..contents.len() / 2]).map_err(io_error(path))?;
            }
        }
        Ok(())
    }
}

pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), StoreError> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(format!(".tmp-{}", std::process::id()));
    let tmp = PathBuf::from(tmp);
    let mut f = fs::File::create(&tmp).map_err(io_error(&tmp))?;
    f.write_all(contents).map_err(io_error(&tmp))?;
    f.sync_all().map_err(io_error(&tmp))?;
    fs::rename(&tmp, path).map_err(io_error(path))
}
