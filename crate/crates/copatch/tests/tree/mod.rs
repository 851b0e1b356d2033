#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Stdio};
use std::time::Duration;

use copatch::cli::run;
use copatch::store::Store;
use copatch_core::line::File;
use rand::Rng;
use tempfile::TempDir;

pub struct Output {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// A working directory in a temporary location, driven in-process.
pub struct Tree {
    dir: TempDir,
}

impl Tree {
    pub fn new() -> Tree {
        Tree { dir: TempDir::new().unwrap() }
    }

    pub fn init() -> Tree {
        let t = Tree::new();
        assert_eq!(t.run(&["init"]).code, 0);
        t
    }

    pub fn path(&self) -> &Path {
        self.dir.path()
    }

    pub fn run(&self, args: &[&str]) -> Output {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let argv = std::iter::once("copatch").chain(args.iter().copied());
        let code = run(argv, self.path(), None, &mut out, &mut err);
        Output { code, stdout: String::from_utf8(out).unwrap(), stderr: String::from_utf8(err).unwrap() }
    }

    pub fn write(&self, text: &str) {
        fs::write(self.path().join("FILE"), text).unwrap();
    }

    pub fn read(&self) -> String {
        fs::read_to_string(self.path().join("FILE")).unwrap()
    }

    pub fn record(&self, text: &str) -> String {
        self.write(text);
        let o = self.run(&["record", "-m", "edit"]);
        assert_eq!(o.code, 0, "{}", o.stderr);
        o.stdout.trim().to_string()
    }

    pub fn merge(&self, other: &Tree) -> Output {
        self.run(&["merge", other.path().to_str().unwrap()])
    }
}

/// Two clones sharing a root recording `root`, then `left` and `right`.
pub fn clones(root: &str, left: &str, right: &str) -> (Tree, Tree) {
    let a = Tree::init();
    let b = Tree::init();
    a.record(root);
    b.record(root);
    a.record(left);
    b.record(right);
    (a, b)
}

/// Replays every prefix of a merge-and-record commit, with and without a
/// torn last write, and checks the store then loads as the old state or the
/// new one. Returns the number of interrupted commits checked.
pub fn crash_prefixes() -> Result<usize, String> {
    let after = File::from_text("a\nc\nb\nd\n").unwrap();
    let prepare = || {
        let (t, other) = clones("a\n", "a\nb\n", "x\na\n");
        let store = Store::open(t.path()).unwrap();
        let old = store.load().unwrap().repo;
        let mut new = old.import(&Store::open(other.path()).unwrap().load().unwrap().repo).unwrap();
        new.record(&after).unwrap();
        let plan = store.plan(&old, &new, &BTreeMap::new()).unwrap();
        (t, store, old, new, plan)
    };
    let (_, _, old, new, plan) = prepare();
    let (old_state, new_state) = (old.repo_state().unwrap(), new.repo_state().unwrap());
    let steps = plan.len();
    let mut checked = 0;
    for n in 0..=steps {
        for torn in [false, true] {
            let (t, store, _, _, plan) = prepare();
            plan.execute_prefix(n, torn).map_err(|e| e.to_string())?;
            let got = store.load().map_err(|e| format!("prefix {n}: {e}"))?.repo.repo_state().unwrap();
            let expected = if n == steps { &new_state } else { &old_state };
            if &got != expected {
                return Err(format!("prefix {n} of {steps} (torn: {torn}) loads a third state"));
            }
            if t.run(&["check"]).code != 0 {
                return Err(format!("prefix {n} of {steps} fails check"));
            }
            checked += 1;
        }
    }
    Ok(checked)
}

/// Starts `record` in the real binary and kills it after a random delay,
/// `rounds` times, checking after each kill that the store loads as the old
/// or the new state. Returns how many processes were killed before exiting.
pub fn kill_loop(bin: &str, rng: &mut impl Rng, rounds: usize) -> Result<usize, String> {
    let t = Tree::init();
    let text = |k: usize| -> String { (0..400).map(|i| format!("{}\n", (i * 7 + k) % 13)).collect() };
    t.record(&text(0));
    let mut current = text(0);
    let mut kills = 0;
    for k in 1..=rounds {
        let next = text(k);
        t.write(&next);
        let mut child = Command::new(bin)
            .args(["record", "-m", "k"])
            .current_dir(t.path())
            .stdout(Stdio::null())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| e.to_string())?;
        std::thread::sleep(Duration::from_micros(rng.gen_range(0..150_000)));
        let _ = child.kill();
        if !child.wait().map_err(|e| e.to_string())?.success() {
            kills += 1;
        }
        // a killed command leaves its lock behind
        let _ = fs::remove_file(t.path().join(".copatch/lock"));
        let state = t.run(&["state"]);
        if state.code != 0 {
            return Err(format!("round {k}: {}", state.stderr.trim()));
        }
        if state.stdout != current && state.stdout != next {
            return Err(format!("round {k}: neither the old nor the new state"));
        }
        current = state.stdout;
    }
    if t.run(&["check"]).code != 0 {
        return Err("final check failed".into());
    }
    Ok(kills)
}
