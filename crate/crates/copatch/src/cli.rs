use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use copatch_core::line::File;
use copatch_core::render::render_conflicts;
use copatch_core::repository::{RepoError, Repository};

use crate::store::{write_atomic, Store, StoreError};

pub const DEFAULT_FILE: &str = "FILE";

pub const EXIT_LINEAR: i32 = 0;
pub const EXIT_CONFLICTED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CORRUPT: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "copatch", version, about = "Version control for a single text file")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Create an empty repository in the current directory
    Init,
    /// Record the working file on top of the current state
    Record {
        #[arg(short, long)]
        message: String,
    },
    /// Print the current state, with conflict markers if conflicted
    State,
    /// Overwrite the working file with the current state
    Checkout {
        /// Write the marker rendering when the state is conflicted
        #[arg(long)]
        markers: bool,
    },
    /// Import the events of the repository at PATH
    Merge { path: PathBuf },
    /// Record the working file above every head, even if conflicted
    Resolve {
        #[arg(short, long, default_value = "")]
        message: String,
    },
    /// List events, causes first
    Log,
    /// Validate the store
    Check,
}

#[derive(Debug, thiserror::Error)]
enum Failure {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Repo(#[from] RepoError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{0}")]
    Refused(String),
}

impl Failure {
    fn exit_code(&self) -> i32 {
        match self {
            Failure::Store(StoreError::Corrupt(_)) => EXIT_CORRUPT,
            Failure::Store(StoreError::NotARepository(_) | StoreError::AlreadyInitialized(_)) => EXIT_USAGE,
            Failure::Repo(RepoError::Decode(_) | RepoError::MalformedEvent(_)) => EXIT_CORRUPT,
            _ => EXIT_CONFLICTED,
        }
    }
}

struct Context<'a> {
    cwd: &'a Path,
    file: PathBuf,
    out: &'a mut dyn Write,
}

/// Runs one command. `args` includes the program name. Output goes to `out`,
/// diagnostics to `err`, and the exit code is returned.
pub fn run<I, T>(args: I, cwd: &Path, file: Option<&str>, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{e}");
                return EXIT_LINEAR;
            }
            let first = e.to_string();
            let first = first.lines().next().unwrap_or("").trim_start_matches("error: ");
            let _ = writeln!(err, "error: {first}");
            return EXIT_USAGE;
        }
    };
    let mut ctx = Context { cwd, file: cwd.join(file.unwrap_or(DEFAULT_FILE)), out };
    let result = match cli.command {
        Command::Init => init(&mut ctx),
        Command::Record { message } => record(&mut ctx, &message, false),
        Command::State => state(&mut ctx),
        Command::Checkout { markers } => checkout(&mut ctx, markers),
        Command::Merge { path } => merge(&mut ctx, &path),
        Command::Resolve { message } => record(&mut ctx, &message, true),
        Command::Log => log(&mut ctx),
        Command::Check => check(&mut ctx),
    };
    match result {
        Ok(code) => code,
        Err(failure) => {
            let _ = writeln!(err, "error: {failure}");
            failure.exit_code()
        }
    }
}

fn write_out(out: &mut dyn Write, text: &str) -> Result<(), Failure> {
    out.write_all(text.as_bytes())
        .map_err(|source| Failure::Io { path: PathBuf::from("<stdout>"), source })
}

fn init(ctx: &mut Context) -> Result<i32, Failure> {
    Store::init(ctx.cwd)?;
    Ok(EXIT_LINEAR)
}

/// Reads the working file, refusing text that would not be written back
/// byte for byte.
fn read_working_file(path: &Path) -> Result<File, Failure> {
    let bytes = fs::read(path).map_err(|source| Failure::Io { path: path.to_path_buf(), source })?;
    let text = String::from_utf8(bytes)
        .map_err(|_| Failure::Refused(format!("{}: not UTF-8 text", path.display())))?;
    let file = File::from_text(&text).map_err(|e| Failure::Refused(format!("{}: {e}", path.display())))?;
    if file.to_text() != text {
        return Err(Failure::Refused(format!(
            "{}: every line must end with LF and contain no CR",
            path.display()
        )));
    }
    Ok(file)
}

fn record(ctx: &mut Context, message: &str, resolve: bool) -> Result<i32, Failure> {
    let store = Store::open(ctx.cwd)?;
    let _lock = store.lock()?;
    let file = read_working_file(&ctx.file)?;
    let loaded = store.load()?;
    let mut repo = loaded.repo.clone();
    let id = if resolve { repo.resolve(&file)? } else { repo.record(&file)? };
    let messages = BTreeMap::from([(id.clone(), message.to_string())]);
    store.plan(&loaded.repo, &repo, &messages)?.execute()?;
    write_out(ctx.out, &format!("{id}\n"))?;
    Ok(EXIT_LINEAR)
}

fn print_state(ctx: &mut Context, repo: &Repository) -> Result<i32, Failure> {
    let state = repo.repo_state()?;
    write_out(ctx.out, &render_conflicts(&state))?;
    Ok(if state.is_linear().is_some() { EXIT_LINEAR } else { EXIT_CONFLICTED })
}

fn state(ctx: &mut Context) -> Result<i32, Failure> {
    let repo = Store::open(ctx.cwd)?.load()?.repo;
    print_state(ctx, &repo)
}

fn checkout(ctx: &mut Context, markers: bool) -> Result<i32, Failure> {
    let store = Store::open(ctx.cwd)?;
    let _lock = store.lock()?;
    let state = store.load()?.repo.repo_state()?;
    let (text, code) = match state.is_linear() {
        Some(file) => (file.to_text(), EXIT_LINEAR),
        None if markers => (render_conflicts(&state), EXIT_CONFLICTED),
        None => return Err(Failure::Refused("the current state is conflicted (use --markers)".into())),
    };
    write_atomic(&ctx.file, text.as_bytes())?;
    Ok(code)
}

fn merge(ctx: &mut Context, path: &Path) -> Result<i32, Failure> {
    let store = Store::open(ctx.cwd)?;
    let _lock = store.lock()?;
    let other = Store::open(&ctx.cwd.join(path))?.load()?;
    let loaded = store.load()?;
    let merged = loaded.repo.import(&other.repo)?;
    store.plan(&loaded.repo, &merged, &other.messages)?.execute()?;
    print_state(ctx, &merged)
}

fn log(ctx: &mut Context) -> Result<i32, Failure> {
    let loaded = Store::open(ctx.cwd)?.load()?;
    let es = loaded.repo.es();
    let mut text = String::new();
    for e in es.topological_order()? {
        text.push_str(&format!("event {e}\n"));
        for c in es.causes(&e).into_iter().flatten() {
            text.push_str(&format!("cause {c}\n"));
        }
        for line in loaded.messages.get(&e).map(String::as_str).unwrap_or("").lines() {
            text.push_str(&format!("    {line}\n"));
        }
        text.push('\n');
    }
    write_out(ctx.out, &text)?;
    Ok(EXIT_LINEAR)
}

fn check(ctx: &mut Context) -> Result<i32, Failure> {
    let store = Store::open(ctx.cwd)?;
    let loaded = store.load()?;
    let repo = &loaded.repo;
    let mut problems = Vec::new();
    let report = repo.es().validate();
    if !report.is_valid() {
        problems.push(format!("event structure: {report}"));
    }
    for e in repo.es().events() {
        let report = repo.morphism(e).expect("event is present").validate();
        if !report.is_valid() {
            problems.push(format!("event {e}: invalid morphism"));
        }
    }
    let mut text = String::new();
    for p in &problems {
        text.push_str(&format!("problem {p}\n"));
    }
    for o in store.orphans(repo)? {
        text.push_str(&format!("unreferenced {o}\n"));
    }
    text.push_str(&format!("{} events, {}\n", repo.len(), if problems.is_empty() { "clean" } else { "invalid" }));
    write_out(ctx.out, &text)?;
    Ok(if problems.is_empty() { EXIT_LINEAR } else { EXIT_CORRUPT })
}
