//! Frontend transforms turning raw waveforms and images into spike vectors.
//!
//! Waveforms: frame around the peak, block-downsample, rescale to
//! `precision` bits, convert to a one-hot pixel image, then similarity-code.
//! Images: binarize, cut into overlapping receptive fields, keep a masked
//! subset of pixels and emit each bit together with its complement.

use crate::error::{check_len, Error, Result};
use crate::numeric::SpikeVector;

/// How a block of samples is reduced to one value during downsampling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Reduce {
    #[default]
    Mean,
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameParams {
    pub precision: u32,
    pub before: usize,
    pub after: usize,
    pub stride: usize,
    pub window: usize,
    pub reduce: Reduce,
}

impl FrameParams {
    pub fn new(precision: u32, before: usize, after: usize, stride: usize, window: usize) -> Result<Self> {
        let fp = FrameParams { precision, before, after, stride, window, reduce: Reduce::Mean };
        fp.validate()?;
        Ok(fp)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=16).contains(&self.precision) {
            return Err(Error::domain(format!("precision {} outside 1..=16", self.precision)));
        }
        if self.stride == 0 || self.window == 0 {
            return Err(Error::domain("stride and window must be at least 1"));
        }
        Ok(())
    }

    pub fn levels(&self) -> u32 {
        1 << self.precision
    }

    pub fn frame_len(&self) -> usize {
        self.before + self.after + 1
    }

    /// `2^precision × (before + after + 1)`: synapses per segment.
    pub fn frame_size(&self) -> usize {
        self.levels() as usize * self.frame_len()
    }
}

/// A framed, downsampled waveform before amplitude scaling.
#[derive(Debug, Clone, PartialEq)]
pub struct Downsampled {
    pub values: Vec<f64>,
    /// Set when the frame ran past either end of the signal and was edge-padded.
    pub padded: bool,
}

/// Frames `samples` around `peak_index` and block-downsamples each step.
pub fn downsample(samples: &[f64], peak_index: usize, fp: &FrameParams) -> Result<Downsampled> {
    fp.validate()?;
    if peak_index >= samples.len() {
        return Err(Error::domain(format!(
            "peak index {peak_index} outside waveform of {} samples",
            samples.len()
        )));
    }
    let n = samples.len() as i64;
    let half_lo = (fp.window as i64 - 1) / 2;
    let half_hi = fp.window as i64 / 2;
    let mut padded = false;
    let mut values = Vec::with_capacity(fp.frame_len());
    for k in -(fp.before as i64)..=(fp.after as i64) {
        let center = peak_index as i64 + k * fp.stride as i64;
        let mut acc: f64 = 0.0;
        let mut max = f64::NEG_INFINITY;
        for t in center - half_lo..=center + half_hi {
            if t < 0 || t >= n {
                padded = true;
            }
            let v = samples[t.clamp(0, n - 1) as usize];
            acc += v;
            max = max.max(v);
        }
        values.push(match fp.reduce {
            Reduce::Mean => (acc / fp.window as f64 + 0.5).floor(),
            Reduce::Max => max,
        });
    }
    Ok(Downsampled { values, padded })
}

/// Linear map of `v` from `[min, max]` onto `[0, levels − 1]`, rounded and clamped.
pub fn scale_level(v: f64, min: f64, max: f64, levels: u32) -> u32 {
    let top = f64::from(levels - 1);
    let s = ((v - min) / (max - min) * top + 0.5).floor();
    s.clamp(0.0, top) as u32
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub values: Vec<u32>,
    pub padded: bool,
}

/// Frames, downsamples and rescales one waveform into `[0, 2^precision − 1]`
/// using a range fixed over the whole dataset.
pub fn frame_waveform(
    samples: &[f64],
    peak_index: usize,
    fp: &FrameParams,
    global_min: f64,
    global_max: f64,
) -> Result<Frame> {
    if global_min.partial_cmp(&global_max) != Some(std::cmp::Ordering::Less) {
        return Err(Error::domain(format!("degenerate amplitude range [{global_min}, {global_max}]")));
    }
    let d = downsample(samples, peak_index, fp)?;
    let values = d
        .values
        .iter()
        .map(|&v| scale_level(v, global_min, global_max, fp.levels()))
        .collect();
    Ok(Frame { values, padded: d.padded })
}

/// Minimum and maximum downsampled value over a dataset: the calibration pass
/// that lets at least one frame touch each end of the amplitude range.
pub fn calibrate_range<'a>(
    waveforms: impl IntoIterator<Item = (&'a [f64], usize)>,
    fp: &FrameParams,
) -> Result<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (samples, peak) in waveforms {
        for v in downsample(samples, peak, fp)?.values {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    if lo.partial_cmp(&hi) != Some(std::cmp::Ordering::Less) {
        return Err(Error::domain("calibration found no amplitude range"));
    }
    Ok((lo, hi))
}

/// Binary `rows × cols` grid, stored row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PixelImage {
    pub rows: usize,
    pub cols: usize,
    pub bits: Vec<bool>,
}

impl PixelImage {
    pub fn blank(rows: usize, cols: usize) -> Self {
        PixelImage { rows, cols, bits: vec![false; rows * cols] }
    }

    pub fn from_bits(rows: usize, cols: usize, bits: Vec<bool>) -> Result<Self> {
        check_len(rows * cols, bits.len())?;
        Ok(PixelImage { rows, cols, bits })
    }

    /// Black-and-white conversion: a pixel is set when `gray >= threshold`.
    pub fn from_gray(rows: usize, cols: usize, gray: &[u8], threshold: u8) -> Result<Self> {
        check_len(rows * cols, gray.len())?;
        Ok(PixelImage { rows, cols, bits: gray.iter().map(|&g| g >= threshold).collect() })
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        self.bits[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: bool) {
        self.bits[r * self.cols + c] = v;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Row-major flattening.
    pub fn to_spike_vector(&self) -> SpikeVector {
        SpikeVector::from_bools(&self.bits)
    }

    pub fn transpose(&self) -> PixelImage {
        let mut t = PixelImage::blank(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.set(c, r, self.get(r, c));
            }
        }
        t
    }
}

/// One-hot column per sample: row `value` (row 0 is amplitude 0) of column `k` is set.
pub fn to_pixels(frame: &[u32], precision: u32) -> Result<PixelImage> {
    let rows = 1usize << precision;
    let mut img = PixelImage::blank(rows, frame.len());
    for (c, &v) in frame.iter().enumerate() {
        if v as usize >= rows {
            return Err(Error::domain(format!("value {v} at sample {c} exceeds {} levels", rows)));
        }
        img.set(v as usize, c, true);
    }
    Ok(img)
}

/// Dilates every set pixel to a neighbourhood spanning `col_hot` rows (along
/// each column, i.e. amplitude) and `row_hot` columns (along each row, i.e.
/// time), clipped at the image edges.
pub fn similarity_encode(img: &PixelImage, row_hot: usize, col_hot: usize) -> Result<PixelImage> {
    for (name, h) in [("row_hot", row_hot), ("col_hot", col_hot)] {
        if h == 0 || h % 2 == 0 {
            return Err(Error::domain(format!("{name} must be odd and at least 1, got {h}")));
        }
    }
    let (dr, dc) = ((col_hot / 2) as isize, (row_hot / 2) as isize);
    let mut out = PixelImage::blank(img.rows, img.cols);
    for r in 0..img.rows {
        for c in 0..img.cols {
            if !img.get(r, c) {
                continue;
            }
            for rr in (r as isize - dr).max(0)..=(r as isize + dr).min(img.rows as isize - 1) {
                for cc in (c as isize - dc).max(0)..=(c as isize + dc).min(img.cols as isize - 1) {
                    out.set(rr as usize, cc as usize, true);
                }
            }
        }
    }
    Ok(out)
}

/// 1-D similarity code of `value` in a `width`-bit field: `hot` consecutive
/// ones centred on position `value`, clipped at the ends.
pub fn similarity_code(value: usize, width: usize, hot: usize) -> Result<SpikeVector> {
    if value >= width {
        return Err(Error::domain(format!("value {value} outside field of {width}")));
    }
    let img = PixelImage::from_bits(width, 1, (0..width).map(|i| i == value).collect())?;
    Ok(similarity_encode(&img, 1, hot)?.to_spike_vector())
}

/// Full waveform encoding chain after framing: pixels, similarity, flatten.
pub fn encode_frame(frame: &[u32], precision: u32, row_hot: usize, col_hot: usize) -> Result<SpikeVector> {
    Ok(similarity_encode(&to_pixels(frame, precision)?, row_hot, col_hot)?.to_spike_vector())
}

/// Receptive-field layout and per-field encoding for image classification.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RfEncoding {
    pub image_rows: usize,
    pub image_cols: usize,
    pub rf_size: usize,
    /// Selected `(row, col)` offsets within each field.
    pub mask: Vec<(usize, usize)>,
    pub two_rail: bool,
}

impl RfEncoding {
    /// 28×28 images, 5×5 fields, checkerboard mask, two-rail code.
    pub fn mnist() -> Self {
        RfEncoding {
            image_rows: 28,
            image_cols: 28,
            rf_size: 5,
            mask: checkerboard_mask(5),
            two_rail: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rf_size == 0 || self.rf_size > self.image_rows || self.rf_size > self.image_cols {
            return Err(Error::domain(format!(
                "receptive field {} does not fit a {}x{} image",
                self.rf_size, self.image_rows, self.image_cols
            )));
        }
        if self.mask.is_empty() || self.mask.iter().any(|&(r, c)| r >= self.rf_size || c >= self.rf_size) {
            return Err(Error::domain("mask must be non-empty and inside the receptive field"));
        }
        Ok(())
    }

    pub fn fields_per_row(&self) -> usize {
        self.image_cols - self.rf_size + 1
    }

    pub fn rf_count(&self) -> usize {
        (self.image_rows - self.rf_size + 1) * self.fields_per_row()
    }

    /// Length of each encoded field vector.
    pub fn context_len(&self) -> usize {
        self.mask.len() * if self.two_rail { 2 } else { 1 }
    }
}

/// The positions with even row and even column inside an `n × n` field.
pub fn checkerboard_mask(n: usize) -> Vec<(usize, usize)> {
    (0..n)
        .step_by(2)
        .flat_map(|r| (0..n).step_by(2).map(move |c| (r, c)))
        .collect()
}

/// Two-rail expansion: bit `b` becomes the pair `[b, 1 − b]`.
pub fn two_rail(bits: &[bool]) -> SpikeVector {
    let idx = bits.iter().enumerate().map(|(i, &b)| if b { 2 * i } else { 2 * i + 1 });
    SpikeVector::from_indices(2 * bits.len(), idx).expect("indices are in range")
}

/// One encoded vector per overlapping field position, row by row.
pub fn rf_extract(image: &PixelImage, enc: &RfEncoding) -> Result<Vec<SpikeVector>> {
    enc.validate()?;
    check_len(enc.image_rows, image.rows)?;
    check_len(enc.image_cols, image.cols)?;
    let mut out = Vec::with_capacity(enc.rf_count());
    let mut bits = vec![false; enc.mask.len()];
    for r0 in 0..=image.rows - enc.rf_size {
        for c0 in 0..=image.cols - enc.rf_size {
            for (b, &(dr, dc)) in bits.iter_mut().zip(&enc.mask) {
                *b = image.get(r0 + dr, c0 + dc);
            }
            out.push(if enc.two_rail { two_rail(&bits) } else { SpikeVector::from_bools(&bits) });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::sad;

    fn bench_params() -> FrameParams {
        FrameParams::new(5, 6, 6, 3, 5).unwrap()
    }

    #[test]
    fn frame_size_matches_cost_formula() {
        let fp = bench_params();
        assert_eq!(fp.frame_len(), 13);
        assert_eq!(fp.frame_size(), 416);
        assert_eq!(fp.frame_size() * 6, 2496);
    }

    #[test]
    fn constant_signal_frames_to_constant_level() {
        let fp = bench_params();
        let s = vec![3.0; 100];
        let f = frame_waveform(&s, 50, &fp, 0.0, 31.0).unwrap();
        assert_eq!(f.values, vec![3; 13]);
        assert!(!f.padded);
    }

    #[test]
    fn frame_values_bounded_and_padding_flagged() {
        let fp = bench_params();
        let s: Vec<f64> = (0..40).map(|i| ((i * 37) % 23) as f64 - 11.0).collect();
        let f = frame_waveform(&s, 2, &fp, -11.0, 11.0).unwrap();
        assert_eq!(f.values.len(), 13);
        assert!(f.values.iter().all(|&v| v < 32));
        assert!(f.padded);
        assert!(frame_waveform(&s, 40, &fp, -1.0, 1.0).is_err());
        assert!(frame_waveform(&s, 20, &fp, 1.0, 1.0).is_err());
    }

    #[test]
    fn window_mean_rounds_half_up() {
        let fp = FrameParams::new(3, 0, 1, 2, 2).unwrap();
        // Windows: [1,2] -> 1.5 -> 2, [3,4] -> 3.5 -> 4
        let d = downsample(&[1.0, 2.0, 3.0, 4.0], 0, &fp).unwrap();
        assert_eq!(d.values, vec![2.0, 4.0]);
    }

    #[test]
    fn framing_is_monotone_in_amplitude() {
        let fp = bench_params();
        let s: Vec<f64> = (0..80).map(|i| (i as f64 / 7.0).sin() * 10.0 + 10.0).collect();
        let louder: Vec<f64> = s.iter().map(|v| v * 1.5).collect();
        let a = frame_waveform(&s, 40, &fp, 0.0, 40.0).unwrap();
        let b = frame_waveform(&louder, 40, &fp, 0.0, 40.0).unwrap();
        assert!(a.values.iter().zip(&b.values).all(|(x, y)| x <= y));
    }

    #[test]
    fn pixels_are_one_hot_per_column_and_invertible() {
        let frame = [0, 5, 31, 7, 7];
        let img = to_pixels(&frame, 5).unwrap();
        assert_eq!(img.count(), frame.len());
        assert!(img.get(0, 0));
        for (c, &v) in frame.iter().enumerate() {
            let row = (0..img.rows).find(|&r| img.get(r, c)).unwrap();
            assert_eq!(row as u32, v);
        }
        assert!(to_pixels(&[32], 5).is_err());
    }

    #[test]
    fn similarity_distances() {
        // Values are 1-based positions in a 7-bit field.
        let code = |v: usize, hot: usize| similarity_code(v - 1, 7, hot).unwrap().to_reals();
        for other in [2, 5, 6] {
            assert_eq!(sad(&code(3, 1), &code(other, 1)).unwrap(), 2.0);
        }
        assert_eq!(code(3, 3), vec![0.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0]);
        assert_eq!(sad(&code(3, 3), &code(2, 3)).unwrap(), 2.0);
        assert_eq!(sad(&code(3, 3), &code(5, 3)).unwrap(), 4.0);
        assert_eq!(sad(&code(3, 3), &code(6, 3)).unwrap(), 6.0);
    }

    #[test]
    fn similarity_identity_and_errors() {
        let img = to_pixels(&[1, 2, 3], 2).unwrap();
        assert_eq!(similarity_encode(&img, 1, 1).unwrap(), img);
        assert!(similarity_encode(&img, 2, 1).is_err());
        assert!(similarity_encode(&img, 1, 0).is_err());
        let e = similarity_encode(&img, 3, 3).unwrap();
        assert!(e.count() <= 9 * 3);
    }

    #[test]
    fn checkerboard_has_nine_of_twenty_five() {
        let m = checkerboard_mask(5);
        assert_eq!(m.len(), 9);
        assert!(m.iter().all(|&(r, c)| r % 2 == 0 && c % 2 == 0));
    }

    #[test]
    fn rf_extract_counts_and_constant_weight() {
        let enc = RfEncoding::mnist();
        let blank = PixelImage::blank(28, 28);
        let rfs = rf_extract(&blank, &enc).unwrap();
        assert_eq!(rfs.len(), 576);
        for v in &rfs {
            assert_eq!(v.len(), 18);
            assert_eq!(v.spike_count(), 9);
            assert!(v.active().iter().all(|i| i % 2 == 1));
        }
        let mut img = PixelImage::blank(28, 28);
        for i in 0..28 {
            img.set(i, i, true);
            img.set(i, 27 - i, true);
        }
        assert!(rf_extract(&img, &enc).unwrap().iter().all(|v| v.spike_count() == 9));
        assert!(rf_extract(&PixelImage::blank(27, 28), &enc).is_err());
    }

    #[test]
    fn rf_extract_reads_masked_pixels() {
        let enc = RfEncoding::mnist();
        let mut img = PixelImage::blank(28, 28);
        img.set(2, 2, true);
        let rfs = rf_extract(&img, &enc).unwrap();
        // Field at origin: mask index 4 is offset (2, 2) -> on-rail bit 8.
        assert!(rfs[0].get(8));
        assert!(!rfs[0].get(9));
        // Field at (0, 1): pixel (2, 2) sits at offset (2, 1), not in the mask.
        assert_eq!(rfs[1], two_rail(&[false; 9]));
    }

    #[test]
    fn gray_threshold_and_transpose() {
        let img = PixelImage::from_gray(2, 3, &[0, 127, 128, 255, 10, 200], 128).unwrap();
        assert_eq!(img.bits, vec![false, false, true, true, false, true]);
        let t = img.transpose();
        assert_eq!((t.rows, t.cols), (3, 2));
        assert!(t.get(2, 0));
        assert_eq!(t.transpose(), img);
    }
}
