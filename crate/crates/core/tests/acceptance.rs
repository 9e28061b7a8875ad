//! The ten acceptance criteria, one status line each.
//!
//! Runs without the libtest harness so the lines appear in `cargo test`
//! output as the checks finish. `VERBOSE=1` also prints measured values.

use std::process::ExitCode;

use vertexset::verify::{run_suite, CheckReport};

fn main() -> ExitCode {
    let verbose = std::env::var_os("VERBOSE").is_some();
    let reports = run_suite("all", |r: &CheckReport| {
        println!("{r}");
        if verbose || !r.passed {
            for l in &r.lines {
                println!("      {l}");
            }
        }
    })
    .expect("suite name is valid");
    let failed = reports.iter().filter(|r| !r.passed).count();
    println!("acceptance: {} passed, {failed} failed", reports.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
