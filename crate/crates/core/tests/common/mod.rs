//! Shared helpers for integration tests.

use std::path::PathBuf;

use sublabel::dataset::{serialize_idx_images, serialize_idx_labels};
use sublabel::simulate::fixture_corpus;

/// Writes the 20-digit fixture into a fresh temp directory and returns
/// (dir, images path, labels path).
pub fn fixture_files(tag: &str) -> (PathBuf, PathBuf, PathBuf) {
    let dir = std::env::temp_dir().join(format!("sublabel-test-{tag}"));
    std::fs::create_dir_all(&dir).unwrap();
    let (images, labels) = fixture_corpus();
    let images_path = dir.join("fixture-images.idx");
    let labels_path = dir.join("fixture-labels.idx");
    std::fs::write(&images_path, serialize_idx_images(&images)).unwrap();
    std::fs::write(&labels_path, serialize_idx_labels(&labels)).unwrap();
    (dir, images_path, labels_path)
}
