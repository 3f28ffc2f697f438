#![no_main]

use feddrl_data::PartitionManifest;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(m) = PartitionManifest::from_text(text) {
        // whatever parses must survive a round trip
        let again = PartitionManifest::from_text(&m.to_text()).unwrap();
        assert_eq!(again.assignments, m.assignments);
    }
});
