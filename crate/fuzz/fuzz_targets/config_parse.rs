#![no_main]

use feddrl_cli::ExperimentConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = ExperimentConfig::from_toml(text, &[]) {
        let echo = cfg.to_toml();
        ExperimentConfig::from_toml(&echo, &[]).unwrap();
    }
});
