use std::io;
use std::process::ExitCode;

fn main() -> ExitCode {
    let cwd = match std::env::current_dir() {
        Ok(dir) => dir,
        Err(e) => {
            eprintln!("error: current directory: {e}");
            return ExitCode::from(2);
        }
    };
    let file = std::env::var("COPATCH_FILE").ok();
    let code = copatch::cli::run(
        std::env::args_os(),
        &cwd,
        file.as_deref(),
        &mut io::stdout().lock(),
        &mut io::stderr().lock(),
    );
    ExitCode::from(code as u8)
}
