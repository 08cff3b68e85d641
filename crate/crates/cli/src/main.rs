use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use hausdorff_forge_cli::{init_threads, run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_threads();
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let code = match run(cli, &mut out) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit as u8
        }
    };
    let _ = out.flush();
    ExitCode::from(code)
}
