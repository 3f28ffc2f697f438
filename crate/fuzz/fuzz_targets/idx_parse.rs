#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(a) = feddrl_data::parse_idx(data) {
        assert_eq!(a.dims.iter().product::<usize>(), a.data.len());
    }
});
