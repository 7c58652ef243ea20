use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use selector_cli::{run, Cli, Format};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(report) => {
            // A closed pipe downstream is not our failure.
            let _ = std::io::stdout().lock().write_all(report.render(cli.format).as_bytes());
            if cli.format == Format::Structured {
                eprint!("{}", report.summary());
            }
            ExitCode::from(report.exit_code())
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
