#![no_main]

use apstat::io::read_path_grid;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok((t, x)) = read_path_grid(data) {
        assert_eq!(t.len(), x.len());
    }
});
