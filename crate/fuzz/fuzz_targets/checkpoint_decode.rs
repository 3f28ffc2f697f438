#![no_main]

use feddrl_nn::Network;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(net) = Network::from_checkpoint_bytes(data) {
        let bytes = net.to_checkpoint_bytes();
        assert_eq!(Network::from_checkpoint_bytes(&bytes).unwrap().to_checkpoint_bytes(), bytes);
    }
});
