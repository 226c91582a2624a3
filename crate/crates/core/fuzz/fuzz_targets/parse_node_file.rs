#![no_main]

use libfuzzer_sys::fuzz_target;
use semiwave::io::parse_node_file_str;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let nx = 1 + data.first().copied().unwrap_or(0) as usize % 16;
    if let Ok(state) = parse_node_file_str(text, nx) {
        assert_eq!(state.position.len(), nx);
        assert_eq!(state.velocity.len(), nx);
        assert!(state.is_finite());
    }
});
