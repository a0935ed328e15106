#![no_main]
use libfuzzer_sys::fuzz_target;
use tcq_core::model::Signature;
use tcq_core::syntax::{parse_tcq, print_tcq};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let mut sig = Signature::new();
    let Ok(q) = parse_tcq(text, &mut sig) else { return };
    let printed = print_tcq(&sig, &q);
    let again = parse_tcq(&printed, &mut sig).expect("printed query parses");
    assert_eq!(again, q);
});
