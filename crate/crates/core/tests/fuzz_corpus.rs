//! Replays the checked-in fuzz seeds through the same entry points the fuzz
//! targets exercise. Seeds named `bad*`/`invalid*` must be rejected, all
//! others must decode.

use std::path::PathBuf;

use affectkit::pipeline::{FeatureFile, Manifest};
use affectkit::train::{decode_checkpoint, encode_checkpoint, TrainConfig};

fn seeds(target: &str) -> Vec<(String, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<(String, Vec<u8>)> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let path = e.unwrap().path();
            (path.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&path).unwrap())
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

fn expect_ok(name: &str) -> bool {
    !(name.starts_with("bad") || name.starts_with("invalid"))
}

#[test]
fn manifest_seeds() {
    for (name, bytes) in seeds("manifest") {
        let parsed = Manifest::from_json(std::str::from_utf8(&bytes).unwrap(), "");
        assert_eq!(parsed.is_ok(), expect_ok(&name), "{name}: {parsed:?}");
        if let Ok(m) = parsed {
            assert_eq!(Manifest::from_json(&m.to_json(), "").unwrap(), m);
        }
    }
}

#[test]
fn feature_file_seeds() {
    for (name, bytes) in seeds("feature_file") {
        let parsed = FeatureFile::decode(&bytes);
        assert_eq!(parsed.is_ok(), expect_ok(&name), "{name}: {parsed:?}");
        if let Ok(f) = parsed {
            assert_eq!(f.encode(), bytes);
        }
    }
}

#[test]
fn checkpoint_seeds() {
    for (name, bytes) in seeds("checkpoint") {
        let parsed = decode_checkpoint(&bytes);
        assert_eq!(parsed.is_ok(), expect_ok(&name), "{name}: {parsed:?}");
        if let Ok(t) = parsed {
            assert_eq!(encode_checkpoint(&t), bytes);
        }
    }
}

#[test]
fn train_config_seeds() {
    for (name, bytes) in seeds("train_config") {
        let ok = serde_json::from_slice::<TrainConfig>(&bytes).map_err(affectkit::Error::from).and_then(|c| c.validate());
        assert_eq!(ok.is_ok(), expect_ok(&name), "{name}: {ok:?}");
    }
}
