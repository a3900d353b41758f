use std::io;
use std::process::ExitCode;

use clap::Parser;
use nonlocal_volume::cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli, &mut io::stdout().lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("nlvol: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
