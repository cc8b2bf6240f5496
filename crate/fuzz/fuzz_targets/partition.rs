#![no_main]

use cbspart::partition::{check_partition, read_partition, write_partition};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(subs) = read_partition(data) else {
        return;
    };
    let mut out = Vec::new();
    write_partition(&subs, &["round trip".to_string()], &mut out).unwrap();
    assert_eq!(read_partition(&out[..]).unwrap(), subs);
    let n = subs.iter().map(|s| s.len()).sum();
    let _ = check_partition(&subs, n);
});
