use std::io;
use std::process::ExitCode;

use clap::Parser;

use epath::cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let status = run(cli, &mut io::stdout().lock(), &mut io::stderr().lock());
    ExitCode::from(status as u8)
}
