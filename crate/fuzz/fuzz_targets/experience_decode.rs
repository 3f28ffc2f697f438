#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok((k, exps)) = feddrl_agent::decode_experiences(data) {
        for e in &exps {
            assert_eq!(e.state.len(), 3 * k);
            assert_eq!(e.action.len(), 2 * k);
        }
    }
});
