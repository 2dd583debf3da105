#![no_main]

use affectkit::train::{decode_checkpoint, encode_checkpoint};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(tensors) = decode_checkpoint(data) {
        let again = decode_checkpoint(&encode_checkpoint(&tensors)).expect("re-decode");
        assert_eq!(again.len(), tensors.len());
    }
});
