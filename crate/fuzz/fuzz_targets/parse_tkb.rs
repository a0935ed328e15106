#![no_main]
use libfuzzer_sys::fuzz_target;
use tcq_core::model::Signature;
use tcq_core::syntax::{parse_tkb, print_tkb};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let mut sig = Signature::new();
    let Ok(aboxes) = parse_tkb(text, &mut sig) else { return };
    let printed = print_tkb(&sig, &aboxes);
    let mut again_sig = sig.clone();
    let again = parse_tkb(&printed, &mut again_sig).expect("printed ABoxes parse");
    assert_eq!(again, aboxes);
});
