#![no_main]

use feddrl_metrics::RunLog;
use libfuzzer_sys::fuzz_target;

// rounds.csv, optionally followed by a NUL and timing.csv
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let (rounds, timing) = match text.split_once('\0') {
        Some((r, t)) => (r, Some(t)),
        None => (text, None),
    };
    let _ = RunLog::from_csv(rounds, timing);
});
