use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use tnpur_cli::args::Cli;
use tnpur_cli::{run, EXIT_ERROR};

fn main() -> ExitCode {
    // clap exits with 2 on usage errors; 2 is reserved for witnesses here
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_ERROR as u8) } else { ExitCode::SUCCESS };
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot start {n} worker threads: {e}");
            return ExitCode::from(EXIT_ERROR as u8);
        }
    }
    match run(&cli) {
        Ok(report) => {
            let text = if cli.json {
                format!("{}\n", serde_json::to_string_pretty(&report).expect("report serializes"))
            } else {
                report.render()
            };
            // a closed pipe (`| head`) is not an error of the run
            let _ = std::io::stdout().write_all(text.as_bytes());
            ExitCode::from(report.exit_code as u8)
        }
        Err(e) => {
            if cli.json {
                let v = serde_json::json!({ "error": format!("{e:#}") });
                println!("{v}");
            }
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR as u8)
        }
    }
}
