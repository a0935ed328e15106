//! Printing and re-parsing random instances gives back the same instance.

mod common;

use proptest::prelude::*;

use tcq_core::syntax::{parse_instance, print_ontology, print_tcq, print_tkb};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn printed_instances_parse_back(seed in any::<u64>()) {
        let lim = common::Limits::default();
        let mut r = common::rng(seed);
        let tkb = common::tkb(&mut r, &lim);
        let phi = common::tcq(&mut r, &tkb.signature, &lim);
        let sig = &tkb.signature;
        let onto = print_ontology(sig, &tkb.ontology, &[]);
        let aboxes = print_tkb(sig, &tkb.aboxes);
        let query = print_tcq(sig, &phi);
        let (back, psi) = parse_instance(&onto, &aboxes, &query)
            .map_err(|e| TestCaseError::fail(format!("{e}\n{onto}\n{aboxes}\n{query}")))?;
        prop_assert_eq!(&back.ontology, &tkb.ontology);
        prop_assert_eq!(&back.aboxes, &tkb.aboxes);
        prop_assert_eq!(&back.signature, &tkb.signature);
        prop_assert_eq!(&psi, &phi, "{}", query);
    }
}
