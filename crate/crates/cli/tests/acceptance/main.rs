//! Acceptance run: one line per criterion, nonzero exit if any fails.

mod clustering;
mod fixtures;
mod harness;
mod parsing;
mod pipeline;
mod ptp;
mod snapshot;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

/// Detail text on success, reason on failure.
pub type Check = Result<String, String>;

/// Fails the enclosing check with a formatted reason.
#[macro_export]
macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($fmt)+));
        }
    };
}

type Criterion = fn() -> Check;

fn main() -> ExitCode {
    let criteria: [(&str, Criterion); 12] = [
        ("hdbscan matches brute-force reference", clustering::hdbscan_oracle),
        ("mst weight equals exhaustive minimum", clustering::mst_optimality),
        ("dbcv matches direct formula", clustering::dbcv_formula),
        ("planted groups recovered", ptp::planted_recovery),
        ("coverage floor on planted corpora", ptp::coverage_floor),
        ("identification loop terminates", ptp::termination),
        ("harness calibration", harness::calibration),
        ("deterministic fixture run", pipeline::determinism),
        ("parsers survive fuzzed payloads", parsing::robustness),
        ("metadata digest matches counting reference", harness::digest_oracle),
        ("classification prompts name no side", pipeline::placeholder_hygiene),
        ("snapshot contracts", snapshot::contracts),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name} ({detail}; {secs:.1}s)", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name} ({why}; {secs:.1}s)", i + 1);
            }
        }
    }
    println!("{} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
