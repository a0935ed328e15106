//! The Boolean-to-krom reduction against brute-force semantics over small
//! domains.

mod common;

use std::collections::HashMap;

use tcq_core::boolkrom::{complement_axioms, normalize, reduce_bool_to_krom, Fresh, Mode, Row};
use tcq_core::model::{ConceptName, ExtendedCi, RoleName, Tcq};
use tcq_core::oracle::{interp_satisfies, interp_satisfies_ci, Interp};

fn satisfies_all(i: &Interp, d: usize, cis: &[ExtendedCi]) -> bool {
    cis.iter().all(|ci| interp_satisfies_ci(i, d, ci))
}

/// Normalization is a conservative extension: an interpretation of the
/// original names satisfies the inclusion iff it extends to the fresh names
/// so that the krom inclusions, the complement inclusions and every negated
/// CQ hold. The rows themselves are checked as inclusions on a second route.
#[test]
fn normalization_is_a_conservative_extension() {
    let lim = common::Limits {
        concepts: 2,
        roles: 1,
        ..Default::default()
    };
    let mut checked = 0;
    for seed in 0..200 {
        let mut r = common::rng(70_000 + seed);
        let sig = common::signature(&mut r, &lim);
        let ci = ExtendedCi {
            lhs: common::extended_concept(&mut r, &sig, 2, false),
            rhs: common::extended_concept(&mut r, &sig, 2, true),
        };
        let mut ext = sig.clone();
        let mut fresh = Fresh::new(&mut ext);
        let n = normalize(&ci, &mut fresh).unwrap();
        let names = n.rows.iter().flat_map(|r| r.rhs_names()).collect();
        let (comp_cis, comp) = complement_axioms(&mut fresh, &names);
        let added = fresh.introduced.clone();
        if added.len() > 4 {
            continue;
        }
        assert!(n.plain.iter().all(|c| c.is_krom()), "seed {seed}");
        let mut krom: Vec<ExtendedCi> = n.plain.iter().map(ExtendedCi::from).collect();
        krom.extend(comp_cis.iter().map(ExtendedCi::from));
        let rows: Vec<ExtendedCi> = n.rows.iter().map(Row::to_extended).collect();
        let queries: Vec<_> = n.rows.iter().map(|r| r.query(&comp)).collect();
        let concepts: Vec<ConceptName> = sig.concepts().collect();
        let roles: Vec<RoleName> = sig.roles().collect();
        let inds = HashMap::new();
        for d in 1..=2 {
            for base in common::all_interps(d, &concepts, &roles) {
                let want = interp_satisfies_ci(&base, d, &ci);
                let (mut by_query, mut by_rows) = (false, false);
                for extra in common::all_interps(d, &added, &[]) {
                    let mut i = base.clone();
                    i.concepts.extend(extra.concepts);
                    if !satisfies_all(&i, d, &krom) {
                        continue;
                    }
                    by_rows |= satisfies_all(&i, d, &rows);
                    by_query |= queries.iter().all(|q| !interp_satisfies(&i, d, &inds, q));
                }
                assert_eq!(by_rows, want, "seed {seed}: {}", sig.show_extended_ci(&ci));
                assert_eq!(by_query, want, "seed {seed}: {}", sig.show_extended_ci(&ci));
                checked += 1;
            }
        }
    }
    assert!(checked > 1000, "{checked} interpretations");
}

#[test]
fn reduced_ontology_is_krom_and_query_is_wrapped() {
    let (tkb, ext) = tcq_core::syntax::parse_kb(
        "concept A, B, C\nrole R\nA, B <= C | exists R\nexists R . A <= B\nA <= B\n",
        "@0:\nA(a)\n",
    )
    .unwrap();
    let phi = Tcq::True;
    let ent = reduce_bool_to_krom(&tkb, &ext, &phi, Mode::Entailment).unwrap();
    assert!(ent.tkb.ontology.cis.iter().all(|c| c.is_krom()));
    assert_eq!(ent.rows.len(), 2);
    assert!(matches!(ent.phi, Tcq::Implies(..)));
    let sat = reduce_bool_to_krom(&tkb, &ext, &phi, Mode::Satisfiability).unwrap();
    assert!(matches!(sat.phi, Tcq::And(..)));
    // Fresh names are new and pairwise distinct.
    let old: Vec<String> = tkb.signature.concepts().map(|c| tkb.signature.concept_name(c).to_string()).collect();
    let new: Vec<String> = ent.tkb.signature.concepts().map(|c| ent.tkb.signature.concept_name(c).to_string()).collect();
    assert_eq!(&new[..old.len()], &old[..]);
    let mut fresh = new[old.len()..].to_vec();
    fresh.sort();
    fresh.dedup();
    assert_eq!(fresh.len(), new.len() - old.len());
}
