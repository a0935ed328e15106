//! The nine acceptance criteria. Runs as a plain binary so that the
//! PASS/FAIL line of every criterion is always printed.

mod common;

use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use common::checks::{self, seeds, Outcome};

fn main() -> ExitCode {
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome>)> = vec![
        ("fixture with rigid and flexible roles", Box::new(checks::fixture_s34)),
        ("entailment is dual to satisfiability", Box::new(|| checks::duality(seeds(200)))),
        ("CQ entailment, reformulation and chase agree", Box::new(|| checks::cq_triangle(seeds(500)))),
        ("rewritings match direct entailment", Box::new(|| checks::rewritings(seeds(150)))),
        ("solver, rewriting and oracle agree", Box::new(|| checks::engines(seeds(120)))),
        ("r-completeness decomposes per time point", Box::new(|| checks::r_completeness(seeds(50)))),
        ("canonical model of unnamed elements", Box::new(|| checks::canonical_law(seeds(300)))),
        ("inclusion rows match their queries", Box::new(checks::table_rows)),
        ("rigid materialization rounds are bounded", Box::new(|| checks::materialization_rounds(seeds(200)))),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let elapsed = start.elapsed();
        match outcome {
            Ok(summary) => println!("criterion {}: PASS {name} ({elapsed:.1?}): {summary}", k + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL {name} ({elapsed:.1?}): {why}", k + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} of {} criteria failed", criteria.len());
        ExitCode::FAILURE
    }
}
