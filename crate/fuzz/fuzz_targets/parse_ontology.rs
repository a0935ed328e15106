#![no_main]
use libfuzzer_sys::fuzz_target;
use tcq_core::syntax::{parse_ontology, print_ontology};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(doc) = parse_ontology(text) else { return };
    let printed = print_ontology(&doc.signature, &doc.ontology, &doc.extended);
    let again = parse_ontology(&printed).expect("printed ontology parses");
    assert_eq!(again.ontology, doc.ontology);
    assert_eq!(again.extended, doc.extended);
});
