//! Runs without the libtest harness so the per-criterion lines are always
//! printed, not only under `--nocapture`.

use std::process::ExitCode;

use thinpower::acceptance::run_all;
use thinpower::ToleranceConfig;

fn main() -> ExitCode {
    // `cargo test -- --list` and filters are harness flags; listing reports nothing to run.
    if std::env::args().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    let report = run_all(&ToleranceConfig::default());
    for c in &report.criteria {
        println!("{}", c.line());
    }
    let failed: Vec<u8> = report.criteria.iter().filter(|c| !c.passed).map(|c| c.id).collect();
    if failed.is_empty() {
        println!("acceptance: all {} criteria passed", report.criteria.len());
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failed:?}");
        ExitCode::FAILURE
    }
}
