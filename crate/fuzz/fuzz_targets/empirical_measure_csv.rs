#![no_main]

use apstat::io::{read_empirical_measure, write_empirical_measure};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(m) = read_empirical_measure(data) {
        let mut buf = Vec::new();
        write_empirical_measure(&mut buf, &m).unwrap();
        assert_eq!(read_empirical_measure(buf.as_slice()).unwrap(), m);
    }
});
