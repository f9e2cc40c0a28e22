//! Runs every acceptance criterion and prints one PASS/FAIL line each.
//! Exits with status 1 when any criterion fails.

use std::process::ExitCode;

use stationary_matching::experiments::{ExperimentParams, Runner};

fn main() -> ExitCode {
    let mut runner = Runner::new(ExperimentParams::default());
    let mut failed = 0;
    for id in 1..=13 {
        match runner.run(id) {
            Ok(result) => {
                println!("{result}");
                failed += usize::from(!result.passed);
            }
            Err(e) => {
                println!("FAIL {id:>2}: {e}");
                failed += 1;
            }
        }
    }
    println!("{} of 13 criteria passed", 13 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
