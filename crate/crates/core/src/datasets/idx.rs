use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use flate2::read::GzDecoder;
use thiserror::Error;

use super::{DataError, Dataset};
use crate::numkit::Matrix;

const IMAGE_MAGIC: u32 = 0x0000_0803;
const LABEL_MAGIC: u32 = 0x0000_0801;

#[derive(Debug, Error)]
pub enum IdxError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: bad magic 0x{found:08x} (expected 0x{expected:08x})", path.display())]
    BadMagic { path: PathBuf, expected: u32, found: u32 },
    #[error("{}: truncated, need {expected} bytes but file has {found}", path.display())]
    Truncated { path: PathBuf, expected: usize, found: usize },
    #[error("{images} images but {labels} labels")]
    CountMismatch { images: usize, labels: usize },
    #[error("no IDX file named {name} (or {name}.gz) in {}", dir.display())]
    Missing { dir: PathBuf, name: String },
}

/// Reads a file, transparently inflating gzip content.
fn read_maybe_gz(path: &Path) -> Result<Vec<u8>, IdxError> {
    let io = |source| IdxError::Io {
        path: path.to_path_buf(),
        source,
    };
    let raw = fs::read(path).map_err(io)?;
    if raw.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(raw.as_slice()).read_to_end(&mut out).map_err(io)?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

fn be_u32(bytes: &[u8], offset: usize) -> u32 {
    u32::from_be_bytes(bytes[offset..offset + 4].try_into().unwrap())
}

/// Checks magic and length; returns the dimension sizes.
fn parse_header(path: &Path, bytes: &[u8], magic: u32, n_dims: usize) -> Result<Vec<usize>, IdxError> {
    let header_len = 4 + 4 * n_dims;
    if bytes.len() < 4 {
        return Err(IdxError::Truncated {
            path: path.to_path_buf(),
            expected: header_len,
            found: bytes.len(),
        });
    }
    let found = be_u32(bytes, 0);
    if found != magic {
        return Err(IdxError::BadMagic {
            path: path.to_path_buf(),
            expected: magic,
            found,
        });
    }
    if bytes.len() < header_len {
        return Err(IdxError::Truncated {
            path: path.to_path_buf(),
            expected: header_len,
            found: bytes.len(),
        });
    }
    let dims: Vec<usize> = (0..n_dims).map(|i| be_u32(bytes, 4 + 4 * i) as usize).collect();
    let expected = header_len + dims.iter().product::<usize>();
    if bytes.len() < expected {
        return Err(IdxError::Truncated {
            path: path.to_path_buf(),
            expected,
            found: bytes.len(),
        });
    }
    Ok(dims)
}

/// Loads an IDX image/label pair. Pixels are scaled to `[0, 1]` by dividing
/// by 255 and each image is flattened row by row. Gzipped files are accepted.
pub fn load_idx(images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<Dataset, DataError> {
    let (images_path, labels_path) = (images_path.as_ref(), labels_path.as_ref());
    let images = read_maybe_gz(images_path)?;
    let labels = read_maybe_gz(labels_path)?;
    let image_dims = parse_header(images_path, &images, IMAGE_MAGIC, 3)?;
    let label_dims = parse_header(labels_path, &labels, LABEL_MAGIC, 1)?;
    let (count, rows, cols) = (image_dims[0], image_dims[1], image_dims[2]);
    if count != label_dims[0] {
        return Err(IdxError::CountMismatch {
            images: count,
            labels: label_dims[0],
        }
        .into());
    }
    let pixels = &images[16..16 + count * rows * cols];
    let features: Vec<f64> = pixels.iter().map(|&b| f64::from(b) / 255.0).collect();
    let labels: Vec<usize> = labels[8..8 + count].iter().map(|&b| usize::from(b)).collect();
    let n_classes = labels.iter().max().map_or(0, |m| m + 1).max(10);
    let name = images_path
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "idx".into());
    Dataset::new(name, Matrix::new(count, rows * cols, features)?, labels, Some(n_classes))
}

/// Writes `d` as an uncompressed IDX pair with images of `rows × cols`.
/// Feature values are mapped back to bytes by `round(255 · x)`.
pub fn write_idx(
    d: &Dataset,
    rows: usize,
    cols: usize,
    images_path: impl AsRef<Path>,
    labels_path: impl AsRef<Path>,
) -> Result<(), DataError> {
    if rows * cols != d.n_features() {
        return Err(DataError::InvalidParameter(format!(
            "{rows}x{cols} images need {} features, dataset has {}",
            rows * cols,
            d.n_features()
        )));
    }
    if let Some(&bad) = d.labels().iter().find(|&&l| l > 255) {
        return Err(DataError::InvalidParameter(format!("label {bad} does not fit in a byte")));
    }
    let mut images = Vec::with_capacity(16 + d.len() * rows * cols);
    images.extend_from_slice(&IMAGE_MAGIC.to_be_bytes());
    for dim in [d.len(), rows, cols] {
        images.extend_from_slice(&(dim as u32).to_be_bytes());
    }
    images.extend(d.features().data().iter().map(|&x| (x * 255.0).round().clamp(0.0, 255.0) as u8));
    let mut labels = Vec::with_capacity(8 + d.len());
    labels.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
    labels.extend_from_slice(&(d.len() as u32).to_be_bytes());
    labels.extend(d.labels().iter().map(|&l| l as u8));
    for (path, bytes) in [(images_path.as_ref(), images), (labels_path.as_ref(), labels)] {
        fs::write(path, bytes).map_err(|source| IdxError::Io {
            path: path.to_path_buf(),
            source,
        })?;
    }
    Ok(())
}

/// Which half of an MNIST-style directory to read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MnistSplit {
    Train,
    Test,
}

impl MnistSplit {
    fn prefix(self) -> &'static str {
        match self {
            MnistSplit::Train => "train",
            MnistSplit::Test => "t10k",
        }
    }

    /// Desk-scale cap applied when no explicit limit is given.
    pub fn default_limit(self) -> usize {
        match self {
            MnistSplit::Train => 10_000,
            MnistSplit::Test => 2_000,
        }
    }
}

fn locate(dir: &Path, name: &str) -> Result<PathBuf, IdxError> {
    for candidate in [name.to_string(), format!("{name}.gz")] {
        let p = dir.join(&candidate);
        if p.is_file() {
            return Ok(p);
        }
    }
    Err(IdxError::Missing {
        dir: dir.to_path_buf(),
        name: name.to_string(),
    })
}

/// Loads `<prefix>-images-idx3-ubyte[.gz]` / `<prefix>-labels-idx1-ubyte[.gz]`
/// from `dir`, keeping the first `limit` samples in file order.
pub fn load_mnist_dir(dir: impl AsRef<Path>, split: MnistSplit, limit: Option<usize>) -> Result<Dataset, DataError> {
    let dir = dir.as_ref();
    let prefix = split.prefix();
    let images = locate(dir, &format!("{prefix}-images-idx3-ubyte"))?;
    let labels = locate(dir, &format!("{prefix}-labels-idx1-ubyte"))?;
    let mut d = load_idx(images, labels)?;
    let limit = limit.unwrap_or(split.default_limit());
    if d.len() > limit {
        d = d.head(limit);
    }
    d.name = format!("mnist-{prefix}");
    Ok(d)
}
