#![no_main]

use apstat::io::{read_charfn_grid, write_charfn_grid};
use apstat::metrics::gamma_from_grids;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(g) = read_charfn_grid(data) {
        let mut buf = Vec::new();
        write_charfn_grid(&mut buf, &g).unwrap();
        assert_eq!(read_charfn_grid(buf.as_slice()).unwrap(), g);
        if let Ok(r) = gamma_from_grids(&g, &g, 4) {
            assert_eq!(r.value, 0.0);
        }
    }
});
