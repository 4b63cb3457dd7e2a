use std::process::ExitCode;

use clap::Parser;

use pcbound_cli::{configure_threads, run, Cli, EXIT_ERROR, EXIT_OK};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Usage errors share the general error status: 2 is reserved for
            // an uncertain verdict under --strict.
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_ERROR } else { EXIT_OK } as u8);
        }
    };
    let outcome = configure_threads().and_then(|()| run(cli));
    match outcome {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR as u8)
        }
    }
}
