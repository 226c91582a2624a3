#![no_main]

use std::path::Path;

use libfuzzer_sys::{fuzz_target, Corpus};
use semiwave::io::{parse_config_str, sweep_points};

fuzz_target!(|data: &[u8]| -> Corpus {
    let Ok(text) = std::str::from_utf8(data) else {
        return Corpus::Reject;
    };
    // profile files would be read relative to this directory; keep it empty
    let Ok(cfg) = parse_config_str(text, Path::new("/nonexistent"), "fuzz") else {
        return Corpus::Keep;
    };
    if cfg.sweep.iter().map(|(_, v)| v.len()).product::<usize>() <= 64 {
        let _ = sweep_points(&cfg);
    }
    if cfg.grid.nx <= 256 {
        let _ = cfg.setup();
    }
    Corpus::Keep
});
