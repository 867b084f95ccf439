use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    // Peek at -v without failing; `run` reports parse errors itself.
    let verbose = tlink_cli::Cli::try_parse().map(|c| c.verbose).unwrap_or(0);
    env_logger::Builder::new()
        .filter_level(tlink_cli::log_level(verbose))
        .parse_default_env()
        .init();
    ExitCode::from(tlink_cli::run(std::env::args_os()))
}
