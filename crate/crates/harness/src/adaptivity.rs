//! Macro-level input changes used to probe how quickly learning adapts.

use dendrite_core::PixelImage;

use crate::config::Transform;
use crate::error::{HarnessError, Result};

/// One stream input, before encoding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sample {
    /// Framed waveform levels in `0..2^precision`.
    Frame { levels: Vec<u32>, precision: u32 },
    Image(PixelImage),
}

/// Identity before the trigger step; afterwards flips waveform amplitudes
/// (`v → 2^precision − 1 − v`) or transposes images.
pub fn apply_adaptivity(transform: &Transform, step: usize, input: Sample) -> Result<Sample> {
    match (transform, input) {
        (Transform::None, s) => Ok(s),
        (Transform::Flip { .. }, Sample::Frame { levels, precision }) => {
            if !transform.active_at(step) {
                return Ok(Sample::Frame { levels, precision });
            }
            let top = (1u32 << precision) - 1;
            if let Some(&v) = levels.iter().find(|&&v| v > top) {
                return Err(HarnessError::config(format!("level {v} exceeds {top}")));
            }
            Ok(Sample::Frame { levels: levels.into_iter().map(|v| top - v).collect(), precision })
        }
        (Transform::Transpose { .. }, Sample::Image(img)) => {
            if !transform.active_at(step) {
                return Ok(Sample::Image(img));
            }
            if img.rows != img.cols {
                return Err(HarnessError::config(format!("cannot transpose a {}x{} image", img.rows, img.cols)));
            }
            Ok(Sample::Image(img.transpose()))
        }
        (Transform::Flip { .. }, Sample::Image(_)) => {
            Err(HarnessError::config("flip applies to waveforms, not images"))
        }
        (Transform::Transpose { .. }, Sample::Frame { .. }) => {
            Err(HarnessError::config("transpose applies to images, not waveforms"))
        }
    }
}
