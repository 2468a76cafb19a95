#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

/// Small enough to run every experiment in seconds.
pub const TINY_CONFIG: &str = r#"{
  "seeds": [1, 2],
  "train": {"steps": 60, "batch_size": 64, "hidden": [16, 16, 16], "history_every": 10},
  "keep_training": {"validation_size": 500, "eval_every": 10, "patience": 2, "max_steps": 60, "batch_size": 64},
  "calibration": {"samples_per_class": 500},
  "drs": {"burn_in_count": 500, "target_count": 400, "batch_size": 100},
  "eval_samples": 400,
  "sweep_percentiles": [0, 50, 90],
  "oracle": {"samples": 2000}
}"#;

pub fn tiny_config() -> drslab::ExperimentConfig {
    drslab::ExperimentConfig::from_json(TINY_CONFIG).unwrap()
}

/// Every file under `root`, keyed by its relative path.
pub fn read_tree(root: &Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(dir: &Path, root: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
        for entry in fs::read_dir(dir).unwrap() {
            let path: PathBuf = entry.unwrap().path();
            if path.is_dir() {
                walk(&path, root, out);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_string_lossy().replace('\\', "/");
                out.insert(rel, fs::read(&path).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

/// The manifest with wall-clock fields removed.
pub fn manifest_without_timings(bytes: &[u8]) -> serde_json::Value {
    let mut v: serde_json::Value = serde_json::from_slice(bytes).unwrap();
    v.as_object_mut().unwrap().remove("total_seconds");
    for s in v["seeds"].as_array_mut().unwrap() {
        s.as_object_mut().unwrap().remove("seconds");
    }
    v
}
