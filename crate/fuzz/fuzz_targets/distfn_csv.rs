#![no_main]

use apstat::io::{read_dist_fn, write_dist_fn};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(d) = read_dist_fn(data) {
        assert!(d.values.windows(2).all(|w| w[1] <= w[0]));
        let mut buf = Vec::new();
        write_dist_fn(&mut buf, &d).unwrap();
        let e = read_dist_fn(buf.as_slice()).unwrap();
        assert_eq!((&e.alphas, &e.values), (&d.alphas, &d.values));
    }
});
