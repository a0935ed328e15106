//! Differential checks of the solver against the brute-force oracle.

mod common;

use std::time::Instant;

use tcq_core::oracle::{bounded_tcq_sat, eval_tcq_on_lasso, OracleResult};
use tcq_core::rsat::Problem;
use tcq_core::solver::{satisfiable, Verdict};

#[test]
fn oracle_models_are_solver_sat() {
    let lim = common::Limits::default();
    let start = Instant::now();
    let (mut found, mut sat, mut unsat) = (0, 0, 0);
    for seed in 0..std::env::var("SEEDS").ok().and_then(|s| s.parse().ok()).unwrap_or(150u64) {
        let mut r = common::rng(seed);
        let tkb = common::tkb(&mut r, &lim);
        let phi = common::tcq(&mut r, &tkb.signature, &lim);
        let v = satisfiable(&tkb, &phi).unwrap();
        match &v {
            Verdict::Sat(_) => sat += 1,
            Verdict::Unsat => unsat += 1,
            Verdict::Unknown(s) => panic!("seed {seed}: unknown {s}"),
        }
        match bounded_tcq_sat(&phi, &tkb, 2, 3, 2) {
            Ok(OracleResult::Found(l)) => {
                found += 1;
                assert!(l.respects_rigid(&tkb.signature));
                assert!(eval_tcq_on_lasso(&l, &phi, tkb.n()));
                assert!(v.is_sat(), "seed {seed}: oracle model but solver UNSAT\n{tkb:?}\n{phi:?}");
            }
            Ok(OracleResult::NotFoundWithinBounds) | Err(_) => {}
        }
    }
    eprintln!("found {found}, sat {sat}, unsat {unsat}, {:?}", start.elapsed());
}

#[test]
fn sat_certificates_are_r_complete() {
    let lim = common::Limits::default();
    let mut checked = 0;
    for seed in 1000..1150u64 {
        let mut r = common::rng(seed);
        let tkb = common::tkb(&mut r, &lim);
        let phi = common::tcq(&mut r, &tkb.signature, &lim);
        if let Verdict::Sat(c) = satisfiable(&tkb, &phi).unwrap() {
            let p = Problem::new(&tkb, &phi).unwrap();
            let (ws, iota) = c.world_set(p.n());
            assert!(p.is_r_complete(&c.tuple, &ws, &iota), "seed {seed}");
            checked += 1;
        }
    }
    assert!(checked > 20);
}
