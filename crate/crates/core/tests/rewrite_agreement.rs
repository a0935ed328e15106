//! The rewritings against direct entailment, and the rewriting engine
//! against the solver.

mod common;

use common::checks::{self, seeds};
use tcq_core::rewrite;
use tcq_core::solver;

#[test]
fn rep_matches_direct_entailment() {
    eprintln!("{}", checks::rep_vs_direct(seeds(150)).unwrap());
}

#[test]
fn pref_matches_entailment_at_each_time_point() {
    eprintln!("{}", checks::pref_vs_entailment(seeds(150)).unwrap());
}

#[test]
fn rigid_levels_match_materialization() {
    eprintln!("{}", checks::rigid_levels(seeds(150)).unwrap());
}

#[test]
fn rewriting_agrees_with_solver_on_separated_queries() {
    let lim = common::Limits::default();
    let (mut sat, mut unsat, mut entailed) = (0, 0, 0);
    for seed in 0..seeds(120) {
        let mut r = common::rng(20_000 + seed);
        let tkb = common::tkb(&mut r, &lim);
        let phi = common::separated_tcq(&mut r, &tkb.signature, &lim);
        let a = solver::satisfiable(&tkb, &phi).unwrap().decided();
        let b = rewrite::satisfiable(&tkb, &phi).unwrap().decided();
        assert_eq!(a, b, "seed {seed}: satisfiability\n{tkb:?}\n{phi:?}");
        match a {
            Some(true) => sat += 1,
            Some(false) => unsat += 1,
            None => {}
        }
        let a = solver::entails(&tkb, &phi).unwrap().decided();
        let (b, _) = rewrite::entails(&tkb, &phi).unwrap();
        assert_eq!(a, b, "seed {seed}: entailment\n{tkb:?}\n{phi:?}");
        entailed += (a == Some(true)) as usize;
    }
    eprintln!("sat {sat}, unsat {unsat}, entailed {entailed}");
    assert!(sat > 0 && unsat > 0);
}

#[test]
fn rigid_tree_below_a_flexible_existential() {
    // ∃S(a) with S flexible and S ⊑ R rigid gives a rigid tree below a.
    let (tkb, phi) = tcq_core::syntax::parse_instance(
        "concept A\nrole S\nrigid role R\nA <= exists S\nS < R\n",
        "@0:\nA(a)\n@1:\n",
        "!(EX x . R(a,x))",
    )
    .unwrap();
    assert_eq!(rewrite::satisfiable(&tkb, &phi).unwrap().decided(), Some(false));
}
