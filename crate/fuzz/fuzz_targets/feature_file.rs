#![no_main]

use affectkit::pipeline::FeatureFile;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(f) = FeatureFile::decode(data) {
        assert_eq!(f.encode(), data);
    }
});
