#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(c) = aigsynt::aiger::parse_binary(data) {
        c.validate().expect("parsed circuits are valid");
        let again = aigsynt::aiger::write_binary(&c).expect("binary parses are normalized");
        assert_eq!(aigsynt::aiger::parse_binary(&again).unwrap(), c);
    }
});
