#![no_main]

use apstat_cli::{check_config, Command};
use libfuzzer_sys::fuzz_target;

// First byte picks the subcommand, the rest is the TOML text.
fuzz_target!(|data: &[u8]| {
    let Some((&k, rest)) = data.split_first() else { return };
    let Ok(text) = std::str::from_utf8(rest) else { return };
    let cmd = Command::ALL[k as usize % Command::ALL.len()];
    if let Ok(echo) = check_config(cmd, text) {
        assert_eq!(check_config(cmd, &echo).unwrap(), echo);
    }
});
