use carnot_lab::cli::{run, Cli};
use clap::Parser;
use std::io::Write;
use std::process::ExitCode;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(report) => {
            let _ = std::io::stdout().write_all(&report);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("carnot-lab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
