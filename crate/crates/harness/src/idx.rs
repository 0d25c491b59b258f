//! IDX image/label files (the MNIST container format), optionally gzipped.

use std::fs::File;
use std::io::{BufReader, Read};
use std::path::{Path, PathBuf};

use flate2::read::GzDecoder;

use crate::error::{HarnessError, Result};

pub const IMAGE_MAGIC: u32 = 2051;
pub const LABEL_MAGIC: u32 = 2049;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxImages {
    pub rows: usize,
    pub cols: usize,
    /// Row-major grayscale pixels, `rows * cols` per image.
    pub pixels: Vec<u8>,
}

impl IdxImages {
    pub fn len(&self) -> usize {
        self.pixels.len().checked_div(self.rows * self.cols).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn image(&self, i: usize) -> &[u8] {
        let n = self.rows * self.cols;
        &self.pixels[i * n..(i + 1) * n]
    }
}

fn open(path: &Path) -> Result<Box<dyn Read>> {
    let file = File::open(path).map_err(|e| HarnessError::io(path, e))?;
    let reader = BufReader::new(file);
    Ok(if path.extension().is_some_and(|e| e == "gz") {
        Box::new(GzDecoder::new(reader))
    } else {
        Box::new(reader)
    })
}

fn read_u32(r: &mut dyn Read, path: &Path) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(|e| HarnessError::io(path, e))?;
    Ok(u32::from_be_bytes(b))
}

pub fn parse_images(bytes: &[u8], path: &Path) -> Result<IdxImages> {
    read_images(&mut &bytes[..], path)
}

pub fn parse_labels(bytes: &[u8], path: &Path) -> Result<Vec<u8>> {
    read_labels(&mut &bytes[..], path)
}

fn read_images(r: &mut dyn Read, path: &Path) -> Result<IdxImages> {
    let magic = read_u32(r, path)?;
    if magic != IMAGE_MAGIC {
        return Err(HarnessError::input(path, 0, format!("bad image magic {magic}, expected {IMAGE_MAGIC}")));
    }
    let n = read_u32(r, path)? as usize;
    let rows = read_u32(r, path)? as usize;
    let cols = read_u32(r, path)? as usize;
    let mut pixels = vec![0u8; n * rows * cols];
    r.read_exact(&mut pixels).map_err(|e| HarnessError::io(path, e))?;
    Ok(IdxImages { rows, cols, pixels })
}

fn read_labels(r: &mut dyn Read, path: &Path) -> Result<Vec<u8>> {
    let magic = read_u32(r, path)?;
    if magic != LABEL_MAGIC {
        return Err(HarnessError::input(path, 0, format!("bad label magic {magic}, expected {LABEL_MAGIC}")));
    }
    let n = read_u32(r, path)? as usize;
    let mut labels = vec![0u8; n];
    r.read_exact(&mut labels).map_err(|e| HarnessError::io(path, e))?;
    Ok(labels)
}

pub fn load_images(path: &Path) -> Result<IdxImages> {
    read_images(&mut *open(path)?, path)
}

pub fn load_labels(path: &Path) -> Result<Vec<u8>> {
    read_labels(&mut *open(path)?, path)
}

/// Finds `name` or `name.gz` inside `dir`.
pub fn locate(dir: &Path, name: &str) -> Option<PathBuf> {
    [dir.join(name), dir.join(format!("{name}.gz"))].into_iter().find(|p| p.exists())
}

/// Images and labels from an MNIST directory, training set first then test set.
pub fn load_mnist_stream(dir: &Path) -> Result<(IdxImages, Vec<u8>, usize)> {
    let find = |name: &str| {
        locate(dir, name).ok_or_else(|| HarnessError::config(format!("{} not found in {}", name, dir.display())))
    };
    let mut images = load_images(&find("train-images-idx3-ubyte")?)?;
    let mut labels = load_labels(&find("train-labels-idx1-ubyte")?)?;
    let test_images = load_images(&find("t10k-images-idx3-ubyte")?)?;
    let test_labels = load_labels(&find("t10k-labels-idx1-ubyte")?)?;
    if (test_images.rows, test_images.cols) != (images.rows, images.cols) {
        return Err(HarnessError::config("train and test image sizes differ"));
    }
    check_counts(&images, &labels, dir)?;
    check_counts(&test_images, &test_labels, dir)?;
    let test_len = test_labels.len();
    images.pixels.extend_from_slice(&test_images.pixels);
    labels.extend_from_slice(&test_labels);
    Ok((images, labels, test_len))
}

pub fn check_counts(images: &IdxImages, labels: &[u8], path: &Path) -> Result<()> {
    if images.len() != labels.len() {
        return Err(HarnessError::input(
            path,
            0,
            format!("{} images but {} labels", images.len(), labels.len()),
        ));
    }
    Ok(())
}
