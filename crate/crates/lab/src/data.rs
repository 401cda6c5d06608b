//! MNIST files on disk. Nothing here downloads; see `scripts/fetch_mnist.sh`.

use std::fs;
use std::path::{Path, PathBuf};

use superaccel::mlp::{dataset_from_idx, LabeledDataset};

use crate::error::{usage, LabError, Result};

pub const MNIST_ENV: &str = "MNIST_DIR";
pub const TRAIN_IMAGES: &str = "train-images-idx3-ubyte";
pub const TRAIN_LABELS: &str = "train-labels-idx1-ubyte";
pub const TEST_IMAGES: &str = "t10k-images-idx3-ubyte";
pub const TEST_LABELS: &str = "t10k-labels-idx1-ubyte";

/// `data/mnist` at the workspace root.
pub fn default_mnist_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist")
}

/// Explicit flag, then `MNIST_DIR`, then the workspace default.
pub fn resolve_mnist_dir(flag: Option<&Path>) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| std::env::var_os(MNIST_ENV).map(PathBuf::from))
        .unwrap_or_else(default_mnist_dir)
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| LabError::io(path, e))
}

pub fn load_mnist_idx(images: &Path, labels: &Path, limit: Option<usize>) -> Result<LabeledDataset> {
    let ds = dataset_from_idx(&read(images)?, &read(labels)?, limit)
        .map_err(|e| LabError::from(e).context(images.display().to_string()))?;
    Ok(ds)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

/// Checks that all four files exist, with a pointer to the fetch script when
/// they do not.
pub fn check_mnist_dir(dir: &Path) -> Result<()> {
    let missing: Vec<&str> = [TRAIN_IMAGES, TRAIN_LABELS, TEST_IMAGES, TEST_LABELS]
        .into_iter()
        .filter(|f| !dir.join(f).is_file())
        .collect();
    if missing.is_empty() {
        Ok(())
    } else {
        Err(usage(format!(
            "MNIST files missing in {}: {} (set --mnist-dir or {MNIST_ENV}; scripts/fetch_mnist.sh shows how to obtain them)",
            dir.display(),
            missing.join(", ")
        )))
    }
}

pub fn load_split(dir: &Path, split: Split, limit: Option<usize>) -> Result<LabeledDataset> {
    check_mnist_dir(dir)?;
    let (img, lbl) = match split {
        Split::Train => (TRAIN_IMAGES, TRAIN_LABELS),
        Split::Test => (TEST_IMAGES, TEST_LABELS),
    };
    load_mnist_idx(&dir.join(img), &dir.join(lbl), limit)
}
