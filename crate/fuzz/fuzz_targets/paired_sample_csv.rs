#![no_main]

use apstat::io::{read_paired_sample, write_paired_sample};
use apstat::metrics::ky_fan;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok((x, y)) = read_paired_sample(data) {
        let mut buf = Vec::new();
        write_paired_sample(&mut buf, &x, &y).unwrap();
        assert_eq!(read_paired_sample(buf.as_slice()).unwrap(), (x.clone(), y.clone()));
        if let Ok(k) = ky_fan(&x, &y) {
            assert!((0.0..=1.0).contains(&k));
        }
    }
});
