mod commands;
mod config;

use std::io::Write;
use std::process::ExitCode;

use config::{parse_args, USAGE};

fn main() -> ExitCode {
    let inv = match parse_args(std::env::args().skip(1)) {
        Ok(Some(inv)) => inv,
        Ok(None) => {
            println!("{USAGE}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("error: {e}\n{USAGE}");
            return ExitCode::from(1);
        }
    };
    let cfg = match inv.load() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    if let Some(n) = cfg.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot start {n} worker threads: {e}");
            return ExitCode::from(1);
        }
    }
    let outcome = match commands::run(&cfg) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            eprintln!("parameters: {} {}", cfg.command.name(), cfg.describe());
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let mut stdout = std::io::stdout().lock();
    for line in &outcome.summary {
        let _ = writeln!(stdout, "{line}");
    }
    if let Some(table) = &outcome.table {
        let csv = table.to_csv();
        match &cfg.out {
            Some(path) => {
                if let Err(e) = std::fs::write(path, csv) {
                    eprintln!("error: cannot write {}: {e}", path.display());
                    return ExitCode::from(1);
                }
                let _ = writeln!(stdout, "wrote {} rows to {}", table.len(), path.display());
            }
            None => {
                let _ = write!(stdout, "\n{csv}");
            }
        }
    }
    if outcome.exit_code != 0 {
        eprintln!("parameters: {} {}", cfg.command.name(), cfg.describe());
    }
    ExitCode::from(outcome.exit_code as u8)
}
