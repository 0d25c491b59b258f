//! Bundled 8×8 handwritten-digit surrogate for offline classification runs.
//!
//! The 1797 UCI optical-recognition digits (as distributed with
//! scikit-learn) are stored as IDX files and rendered onto 28×28 grayscale
//! canvases so they flow through exactly the same receptive-field pipeline
//! as MNIST. Training inputs get a small random affine jitter so a long
//! stream can be drawn from the modest training split.

use std::path::Path;

use rand::{seq::SliceRandom, Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::idx::{parse_images, parse_labels, IdxImages};

const IMAGES: &[u8] = include_bytes!("../data/digits8x8-images-idx3-ubyte");
const LABELS: &[u8] = include_bytes!("../data/digits8x8-labels-idx1-ubyte");

/// Images held out at the end of the set; they form the stream's tail.
pub const HELD_OUT: usize = 300;
pub const CANVAS: usize = 28;
/// Side of the box the 8×8 digit is stretched over (MNIST digits fit 20×20).
const BOX: f64 = 20.0;

pub fn load() -> Result<(IdxImages, Vec<u8>)> {
    let imgs = parse_images(IMAGES, Path::new("digits8x8-images"))?;
    let labels = parse_labels(LABELS, Path::new("digits8x8-labels"))?;
    Ok((imgs, labels))
}

/// Affine placement of the digit on the canvas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Placement {
    pub scale: f64,
    pub angle: f64,
    pub dx: f64,
    pub dy: f64,
}

impl Placement {
    pub const CENTERED: Placement = Placement { scale: 1.0, angle: 0.0, dx: 0.0, dy: 0.0 };

    /// Random placement; `amount` scales the ranges (±10% size, ±0.15 rad,
    /// ±1.5 px shift at 1.0).
    pub fn jittered(rng: &mut impl Rng, amount: f64) -> Self {
        let mut u = |half: f64| if half > 0.0 { rng.random_range(-half..half) } else { 0.0 };
        Placement {
            scale: 1.0 + u(0.1 * amount),
            angle: u(0.15 * amount),
            dx: u(1.5 * amount),
            dy: u(1.5 * amount),
        }
    }
}

fn sample(src: &[u8], side: usize, y: f64, x: f64) -> f64 {
    let at = |r: isize, c: isize| -> f64 {
        if r < 0 || c < 0 || r >= side as isize || c >= side as isize {
            0.0
        } else {
            f64::from(src[r as usize * side + c as usize])
        }
    };
    let (y0, x0) = (y.floor(), x.floor());
    let (fy, fx) = (y - y0, x - x0);
    let (r, c) = (y0 as isize, x0 as isize);
    at(r, c) * (1.0 - fy) * (1.0 - fx)
        + at(r, c + 1) * (1.0 - fy) * fx
        + at(r + 1, c) * fy * (1.0 - fx)
        + at(r + 1, c + 1) * fy * fx
}

/// Bilinear rendering of a square `side × side` image onto a 28×28 canvas.
pub fn render(src: &[u8], side: usize, place: Placement) -> Vec<u8> {
    let center = (CANVAS as f64 - 1.0) / 2.0;
    let k = BOX / side as f64 * place.scale;
    let (sin, cos) = place.angle.sin_cos();
    let mut out = vec![0u8; CANVAS * CANVAS];
    for r in 0..CANVAS {
        for c in 0..CANVAS {
            let (y, x) = (r as f64 - center - place.dy, c as f64 - center - place.dx);
            let (yr, xr) = (cos * y + sin * x, -sin * y + cos * x);
            let sy = yr / k + (side as f64 - 1.0) / 2.0;
            let sx = xr / k + (side as f64 - 1.0) / 2.0;
            out[r * CANVAS + c] = sample(src, side, sy, sx).round().clamp(0.0, 255.0) as u8;
        }
    }
    out
}

/// A labelled stream of 28×28 grayscale images.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageStream {
    pub images: IdxImages,
    pub labels: Vec<u8>,
    /// Trailing inputs that form the evaluation window.
    pub tail: usize,
}

/// `train_len` jittered draws from the training split (shuffled passes),
/// followed by the held-out images rendered without jitter.
pub fn surrogate_stream(train_len: usize, jitter: f64, seed: u64) -> Result<ImageStream> {
    let (src, labels) = load()?;
    let n = src.len();
    let train: Vec<usize> = (0..n - HELD_OUT).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pixels = Vec::with_capacity((train_len + HELD_OUT) * CANVAS * CANVAS);
    let mut out_labels = Vec::with_capacity(train_len + HELD_OUT);
    let mut order = Vec::new();
    for _ in 0..train_len {
        if order.is_empty() {
            order = train.clone();
            order.shuffle(&mut rng);
        }
        let i = order.pop().expect("refilled above");
        pixels.extend(render(src.image(i), src.rows, Placement::jittered(&mut rng, jitter)));
        out_labels.push(labels[i]);
    }
    for (i, &label) in labels.iter().enumerate().skip(n - HELD_OUT) {
        pixels.extend(render(src.image(i), src.rows, Placement::CENTERED));
        out_labels.push(label);
    }
    Ok(ImageStream {
        images: IdxImages { rows: CANVAS, cols: CANVAS, pixels },
        labels: out_labels,
        tail: HELD_OUT,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_set_loads() {
        let (imgs, labels) = load().unwrap();
        assert_eq!((imgs.rows, imgs.cols, imgs.len()), (8, 8, 1797));
        assert_eq!(labels.len(), 1797);
        assert!(labels.iter().all(|&l| l < 10));
    }

    #[test]
    fn rendering_keeps_ink_inside_the_canvas() {
        let (imgs, _) = load().unwrap();
        let out = render(imgs.image(0), 8, Placement::CENTERED);
        assert_eq!(out.len(), 784);
        let ink = out.iter().filter(|&&v| v >= 128).count();
        assert!(ink > 40, "ink {ink}");
        for i in 0..28 {
            assert_eq!(out[i], 0);
            assert_eq!(out[27 * 28 + i], 0);
        }
    }

    #[test]
    fn stream_layout() {
        let s = surrogate_stream(50, 1.0, 3).unwrap();
        assert_eq!(s.labels.len(), 50 + HELD_OUT);
        assert_eq!(s.images.len(), 50 + HELD_OUT);
        assert_eq!(s.tail, HELD_OUT);
        assert_eq!(s, surrogate_stream(50, 1.0, 3).unwrap());
    }
}
