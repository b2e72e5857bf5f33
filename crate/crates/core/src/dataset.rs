//! IDX ingestion, binarization, normalization, and seeded subsetting.
//!
//! The IDX container is the MNIST binary layout: a big-endian magic number
//! (0x00000803 for images, 0x00000801 for labels), big-endian `u32`
//! dimensions, then raw unsigned bytes. Files may be gzip-compressed; the
//! two leading bytes 0x1F 0x8B select the decompression path.

use std::io::Read;
use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};
use crate::seeding::rng_from_seed;

pub const IMAGE_MAGIC: u32 = 0x0000_0803;
pub const LABEL_MAGIC: u32 = 0x0000_0801;

/// Grayscale threshold used to binarize digits unless overridden.
pub const DEFAULT_BINARIZE_THRESHOLD: u8 = 100;

/// A set of grayscale images, stored row-major as one flat byte buffer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageSet {
    n: usize,
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl ImageSet {
    pub fn new(n: usize, width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        let d = width * height;
        if pixels.len() != n * d {
            return Err(Error::LengthMismatch {
                left: pixels.len(),
                right: n * d,
            });
        }
        Ok(Self {
            n,
            width,
            height,
            pixels,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Pixels per image.
    pub fn d(&self) -> usize {
        self.width * self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn row(&self, i: usize) -> &[u8] {
        let d = self.d();
        &self.pixels[i * d..(i + 1) * d]
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    /// New set holding the given rows of `self`, in order.
    pub fn gather(&self, indices: &[usize]) -> ImageSet {
        let d = self.d();
        let mut pixels = Vec::with_capacity(indices.len() * d);
        for &i in indices {
            pixels.extend_from_slice(self.row(i));
        }
        ImageSet {
            n: indices.len(),
            width: self.width,
            height: self.height,
            pixels,
        }
    }

    /// First `n` images.
    pub fn take(&self, n: usize) -> Result<ImageSet> {
        if n > self.n {
            return Err(Error::InsufficientData {
                requested: n,
                available: self.n,
            });
        }
        Ok(ImageSet {
            n,
            width: self.width,
            height: self.height,
            pixels: self.pixels[..n * self.d()].to_vec(),
        })
    }

    /// Concatenates two image sets of equal geometry.
    pub fn concat(&self, other: &ImageSet) -> Result<ImageSet> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::DimensionMismatch {
                expected: self.d(),
                got: other.d(),
            });
        }
        let mut pixels = self.pixels.clone();
        pixels.extend_from_slice(&other.pixels);
        Ok(ImageSet {
            n: self.n + other.n,
            width: self.width,
            height: self.height,
            pixels,
        })
    }
}

/// Class labels paired with an [`ImageSet`]; every value is in `0..=9`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelSet {
    values: Vec<u8>,
}

impl LabelSet {
    pub fn new(values: Vec<u8>) -> Result<Self> {
        for (index, &value) in values.iter().enumerate() {
            if value > 9 {
                return Err(Error::LabelOutOfRange { index, value });
            }
        }
        Ok(Self { values })
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[u8] {
        &self.values
    }

    pub fn get(&self, i: usize) -> u8 {
        self.values[i]
    }

    pub fn gather(&self, indices: &[usize]) -> LabelSet {
        LabelSet {
            values: indices.iter().map(|&i| self.values[i]).collect(),
        }
    }

    /// First `n` labels.
    pub fn take(&self, n: usize) -> Result<LabelSet> {
        if n > self.values.len() {
            return Err(Error::InsufficientData {
                requested: n,
                available: self.values.len(),
            });
        }
        Ok(LabelSet {
            values: self.values[..n].to_vec(),
        })
    }

    pub fn concat(&self, other: &LabelSet) -> LabelSet {
        let mut values = self.values.clone();
        values.extend_from_slice(&other.values);
        LabelSet { values }
    }
}

/// Binarized view of an [`ImageSet`]: entries are exactly 0 or 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryImageSet {
    n: usize,
    d: usize,
    rows: Vec<u8>,
    threshold: u8,
}

impl BinaryImageSet {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn threshold(&self) -> u8 {
        self.threshold
    }

    pub fn row(&self, i: usize) -> &[u8] {
        &self.rows[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> &[u8] {
        &self.rows
    }

    /// Builds a binary set directly from 0/1 rows (test and sampling support).
    pub fn from_rows(n: usize, d: usize, rows: Vec<u8>) -> Result<Self> {
        if rows.len() != n * d {
            return Err(Error::LengthMismatch {
                left: rows.len(),
                right: n * d,
            });
        }
        if rows.iter().any(|&b| b > 1) {
            return Err(Error::BadModelFile("binary rows must be 0/1".into()));
        }
        Ok(Self {
            n,
            d,
            rows,
            threshold: 1,
        })
    }

    /// First `n` rows.
    pub fn take(&self, n: usize) -> Result<BinaryImageSet> {
        if n > self.n {
            return Err(Error::InsufficientData {
                requested: n,
                available: self.n,
            });
        }
        Ok(BinaryImageSet {
            n,
            d: self.d,
            rows: self.rows[..n * self.d].to_vec(),
            threshold: self.threshold,
        })
    }
}

/// Real-valued features in `[0,1]`, one flat row-major buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    n: usize,
    d: usize,
    rows: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(n: usize, d: usize, rows: Vec<f64>) -> Result<Self> {
        if rows.len() != n * d {
            return Err(Error::LengthMismatch {
                left: rows.len(),
                right: n * d,
            });
        }
        Ok(Self { n, d, rows })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> &[f64] {
        &self.rows
    }
}

/// How [`subset_split`] picks its records.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitPolicy {
    /// First `total` records in file order, then first `train` / last `validation`.
    HeadOfFile,
    /// `total` indices drawn without replacement from the seeded stream.
    SeededRandom,
}

impl std::str::FromStr for SplitPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "head-of-file" | "head" => Ok(SplitPolicy::HeadOfFile),
            "seeded-random" | "random" => Ok(SplitPolicy::SeededRandom),
            other => Err(Error::Config(format!("unknown split policy `{other}`"))),
        }
    }
}

/// Seeded train/validation subsetting parameters.
#[derive(Debug, Clone, Copy)]
pub struct SplitSpec {
    pub total: usize,
    pub train: usize,
    pub validation: usize,
    pub seed: u64,
    pub policy: SplitPolicy,
}

impl SplitSpec {
    pub fn head_of_file(total: usize, train: usize, validation: usize) -> Self {
        Self {
            total,
            train,
            validation,
            seed: 0,
            policy: SplitPolicy::HeadOfFile,
        }
    }
}

fn read_be_u32(bytes: &[u8], offset: usize) -> Result<u32> {
    let end = offset + 4;
    if bytes.len() < end {
        return Err(Error::TruncatedPayload {
            needed: end,
            available: bytes.len(),
        });
    }
    Ok(u32::from_be_bytes([
        bytes[offset],
        bytes[offset + 1],
        bytes[offset + 2],
        bytes[offset + 3],
    ]))
}

/// Parses an IDX3 image file already loaded into memory.
pub fn parse_idx_images(bytes: &[u8]) -> Result<ImageSet> {
    let magic = read_be_u32(bytes, 0)?;
    if magic != IMAGE_MAGIC {
        return Err(Error::WrongMagic {
            expected: IMAGE_MAGIC,
            found: magic,
        });
    }
    let n = read_be_u32(bytes, 4)? as usize;
    let rows = read_be_u32(bytes, 8)? as usize;
    let cols = read_be_u32(bytes, 12)? as usize;
    if n == 0 || rows == 0 || cols == 0 {
        return Err(Error::ZeroDimension);
    }
    let needed = 16 + n * rows * cols;
    if bytes.len() < needed {
        return Err(Error::TruncatedPayload {
            needed,
            available: bytes.len(),
        });
    }
    ImageSet::new(n, cols, rows, bytes[16..needed].to_vec())
}

/// Parses an IDX1 label file already loaded into memory.
pub fn parse_idx_labels(bytes: &[u8]) -> Result<LabelSet> {
    let magic = read_be_u32(bytes, 0)?;
    if magic != LABEL_MAGIC {
        return Err(Error::WrongMagic {
            expected: LABEL_MAGIC,
            found: magic,
        });
    }
    let n = read_be_u32(bytes, 4)? as usize;
    if n == 0 {
        return Err(Error::ZeroDimension);
    }
    let needed = 8 + n;
    if bytes.len() < needed {
        return Err(Error::TruncatedPayload {
            needed,
            available: bytes.len(),
        });
    }
    LabelSet::new(bytes[8..needed].to_vec())
}

/// Serializes an [`ImageSet`] back to IDX3 bytes (bit-exact round trip).
pub fn serialize_idx_images(images: &ImageSet) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + images.pixels.len());
    out.extend_from_slice(&IMAGE_MAGIC.to_be_bytes());
    out.extend_from_slice(&(images.n as u32).to_be_bytes());
    out.extend_from_slice(&(images.height as u32).to_be_bytes());
    out.extend_from_slice(&(images.width as u32).to_be_bytes());
    out.extend_from_slice(&images.pixels);
    out
}

/// Serializes a [`LabelSet`] back to IDX1 bytes.
pub fn serialize_idx_labels(labels: &LabelSet) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.values.len());
    out.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.values.len() as u32).to_be_bytes());
    out.extend_from_slice(&labels.values);
    out
}

/// Reads a file, transparently inflating gzip (leading bytes 0x1F 0x8B).
pub fn read_maybe_gzip(path: &Path) -> Result<Vec<u8>> {
    let raw = std::fs::read(path)?;
    if raw.len() >= 2 && raw[0] == 0x1F && raw[1] == 0x8B {
        let mut decoder = flate2::read::GzDecoder::new(&raw[..]);
        let mut out = Vec::new();
        decoder.read_to_end(&mut out)?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

pub fn load_idx_images(path: &Path) -> Result<ImageSet> {
    parse_idx_images(&read_maybe_gzip(path)?)
}

pub fn load_idx_labels(path: &Path) -> Result<LabelSet> {
    parse_idx_labels(&read_maybe_gzip(path)?)
}

/// Thresholds grayscale to 0/1: pixel >= threshold maps to 1.
pub fn binarize(images: &ImageSet, threshold: u8) -> BinaryImageSet {
    assert!(threshold >= 1, "binarize threshold must be in 1..=255");
    let rows = images
        .pixels
        .iter()
        .map(|&p| u8::from(p >= threshold))
        .collect();
    BinaryImageSet {
        n: images.n,
        d: images.d(),
        rows,
        threshold,
    }
}

/// Divides every pixel by 255, yielding features in `[0,1]`.
pub fn normalize(images: &ImageSet) -> FeatureMatrix {
    let rows = images.pixels.iter().map(|&p| f64::from(p) / 255.0).collect();
    FeatureMatrix {
        n: images.n,
        d: images.d(),
        rows,
    }
}

/// The record indices a split spec selects from a source of `n` records,
/// in selection order.
pub fn select_indices(n: usize, spec: &SplitSpec) -> Result<Vec<usize>> {
    if spec.train + spec.validation != spec.total {
        return Err(Error::BadSplitSpec {
            train: spec.train,
            validation: spec.validation,
            total: spec.total,
        });
    }
    if spec.total == 0 || spec.train == 0 {
        return Err(Error::EmptyDataset);
    }
    if spec.total > n {
        return Err(Error::InsufficientData {
            requested: spec.total,
            available: n,
        });
    }
    Ok(match spec.policy {
        SplitPolicy::HeadOfFile => (0..spec.total).collect(),
        SplitPolicy::SeededRandom => {
            let mut rng = rng_from_seed(spec.seed);
            let mut indices: Vec<usize> = (0..n).collect();
            // Partial Fisher-Yates: the first `total` slots become a uniform
            // sample without replacement, in draw order.
            for i in 0..spec.total {
                let j = rng.gen_range(i..n);
                indices.swap(i, j);
            }
            indices.truncate(spec.total);
            indices
        }
    })
}

/// Deterministic train/validation subsetting per the split spec.
pub fn subset_split(
    images: &ImageSet,
    labels: &LabelSet,
    spec: &SplitSpec,
) -> Result<((ImageSet, LabelSet), (ImageSet, LabelSet))> {
    if images.n != labels.n() {
        return Err(Error::LengthMismatch {
            left: images.n,
            right: labels.n(),
        });
    }
    let selected = select_indices(images.n, spec)?;
    let train_idx = &selected[..spec.train];
    let val_idx = &selected[spec.train..];
    Ok((
        (images.gather(train_idx), labels.gather(train_idx)),
        (images.gather(val_idx), labels.gather(val_idx)),
    ))
}
