#![no_main]

use aigsynt::aiger::{normalize, parse, parse_ascii, parse_binary, write_ascii, write_binary};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(c) = parse(data) else { return };
    assert_eq!(parse_ascii(&write_ascii(&c)).unwrap(), c);
    let Ok(n) = normalize(&c) else { return };
    let bin = write_binary(&n).unwrap();
    let from_bin = parse_binary(&bin).unwrap();
    assert_eq!(write_binary(&from_bin).unwrap(), bin);
    assert_eq!(from_bin, parse_ascii(&write_ascii(&n)).unwrap());
});
