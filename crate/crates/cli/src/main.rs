use std::process::ExitCode;

use clap::Parser;

use hedgekit_cli::{run, Cli, EXIT_OK};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(text) => {
            println!("{text}");
            ExitCode::from(EXIT_OK)
        }
        Err(e) => {
            let report = e.report();
            eprintln!("{}", serde_json::to_string_pretty(&report).expect("error report serializes"));
            ExitCode::from(report.exit_code)
        }
    }
}
