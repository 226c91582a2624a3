#![no_main]

use libfuzzer_sys::fuzz_target;
use semiwave::io::parse_profile;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(profile) = parse_profile(text) {
        // printing and re-reading gives the same profile
        let again = parse_profile(&profile.to_string()).expect("display output parses");
        assert_eq!(profile, again);
    }
});
