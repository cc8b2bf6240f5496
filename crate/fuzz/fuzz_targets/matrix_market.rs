#![no_main]

use cbspart::sparse::mm::{parse_matrix_market, write_matrix_market};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(a) = parse_matrix_market(text) else {
        return;
    };
    // Anything accepted must survive a write/read round trip unchanged.
    let mut out = Vec::new();
    write_matrix_market(&a, &mut out, &[]).unwrap();
    let back = parse_matrix_market(std::str::from_utf8(&out).unwrap()).unwrap();
    assert_eq!(a, back);
});
