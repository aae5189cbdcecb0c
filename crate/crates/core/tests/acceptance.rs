//! The fourteen acceptance criteria at full scale, one line each.
//!
//! Runs without the libtest harness so the lines always reach stdout.
//! `ACCEPTANCE_ONLY=3,5` restricts the run to the listed criteria.

use std::process::ExitCode;
use std::time::Instant;

use nested_stable::harness::verify::{run_criterion, Scale, DEFAULT_VERIFY_SEED};

fn selected() -> Vec<usize> {
    match std::env::var("ACCEPTANCE_ONLY") {
        Ok(list) if !list.trim().is_empty() => list
            .split(',')
            .map(|s| {
                s.trim()
                    .parse()
                    .expect("ACCEPTANCE_ONLY takes criterion numbers")
            })
            .collect(),
        _ => (1..=14).collect(),
    }
}

fn main() -> ExitCode {
    // `cargo test -- --list` and friends pass flags; there is nothing to list.
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return ExitCode::SUCCESS;
    }
    let mut failed = 0;
    for id in selected() {
        let start = Instant::now();
        let line = match run_criterion(id, Scale::Full, DEFAULT_VERIFY_SEED) {
            Ok(r) => {
                failed += usize::from(!r.passed);
                r.line()
            }
            Err(e) => {
                failed += 1;
                format!("FAIL  {id:>2} error: {e}")
            }
        };
        println!("{line} [{:.1}s]", start.elapsed().as_secs_f64());
    }
    if failed == 0 {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} criteria failed");
        ExitCode::FAILURE
    }
}
