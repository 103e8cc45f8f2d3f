use std::process::ExitCode;

use clap::Parser;
use ttnn_cli::{run_and_write, Args};

fn main() -> ExitCode {
    let result = Args::parse().into_config().and_then(|cfg| {
        let report = run_and_write(&cfg)?;
        Ok((cfg.report_path(), report))
    });
    match result {
        Ok((path, report)) => {
            let failed = report.rows.iter().filter(|r| r.failed()).count();
            eprintln!("{} rows written to {}", report.rows.len(), path.display());
            if failed == 0 {
                ExitCode::SUCCESS
            } else {
                eprintln!("{failed} of {} jobs failed", report.rows.len());
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
