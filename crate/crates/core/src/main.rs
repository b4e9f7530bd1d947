//! Command-line entry point. Parses flags (and an optional config file) into
//! a validated run description, executes the experiment, prints the run
//! summary as JSON on stdout, and maps failures onto exit codes: 0 success,
//! 1 usage error, 2 runtime failure, 3 I/O failure.

use std::process::ExitCode;

use clap::Parser;

use qwalk2d::config::{self, Cli};
use qwalk2d::experiments;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            // --help/--version land here too; they are not usage errors.
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };

    if let Ok(threads) = std::env::var("QWALK2D_THREADS") {
        match threads.trim().parse::<usize>() {
            Ok(n) if n >= 1 => {
                // Ignore the error if a pool already exists (e.g. repeated
                // installs under a test harness); the first install wins.
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("qwalk2d: QWALK2D_THREADS must be a positive integer, got {threads:?}");
                return ExitCode::from(1);
            }
        }
    }

    let spec = match config::build_spec(&cli) {
        Ok(spec) => spec,
        Err(e) => {
            eprintln!("qwalk2d: {e}");
            return ExitCode::from(e.exit_code());
        }
    };

    match experiments::run(&spec) {
        Ok(summary) => {
            println!("{}", serde_json::to_string_pretty(&summary).expect("summary is plain data"));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("qwalk2d: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
