//! Spike waveform records: file ingestion, a synthetic benchmark generator,
//! and the framing + similarity encoding chain.

use std::fs;
use std::io::Write;
use std::path::Path;

use dendrite_core::encoders::{calibrate_range, encode_frame, frame_waveform, FrameParams};
use dendrite_core::SpikeVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

/// One detected spike event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Waveform {
    pub samples: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub peak: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<usize>,
}

impl Waveform {
    /// Supplied peak index, else the position of the largest sample.
    pub fn peak_index(&self) -> usize {
        self.peak.unwrap_or_else(|| {
            let mut best = 0;
            for (i, &v) in self.samples.iter().enumerate() {
                if v > self.samples[best] {
                    best = i;
                }
            }
            best
        })
    }
}

/// Loads waveforms from JSON lines (`.jsonl`/`.json`) or CSV (anything else).
///
/// CSV rows are `label,s0,s1,...` with an optionally empty label; lines
/// starting with `#` and a leading `label,...` header are skipped.
pub fn load_waveforms(path: &Path) -> Result<Vec<Waveform>> {
    let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    let json = path.extension().is_some_and(|e| e == "jsonl" || e == "json");
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let w = if json {
            serde_json::from_str::<Waveform>(line).map_err(|e| HarnessError::input(path, lineno, e.to_string()))?
        } else {
            if lineno == 1 && line.starts_with("label") {
                continue;
            }
            parse_csv_record(line).map_err(|msg| HarnessError::input(path, lineno, msg))?
        };
        if w.samples.is_empty() {
            return Err(HarnessError::input(path, lineno, "waveform has no samples"));
        }
        if w.peak.is_some_and(|p| p >= w.samples.len()) {
            return Err(HarnessError::input(path, lineno, "peak index outside waveform"));
        }
        out.push(w);
    }
    Ok(out)
}

fn parse_csv_record(line: &str) -> std::result::Result<Waveform, String> {
    let mut fields = line.split(',');
    let label = match fields.next().map(str::trim) {
        None | Some("") => None,
        Some(s) => Some(s.parse::<usize>().map_err(|e| format!("label '{s}': {e}"))?),
    };
    let samples = fields
        .map(|s| s.trim().parse::<f64>().map_err(|e| format!("sample '{s}': {e}")))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(Waveform { samples, peak: None, label })
}

pub fn write_waveforms_csv(waves: &[Waveform], path: &Path) -> Result<()> {
    let mut out = String::from("label,samples...\n");
    for w in waves {
        if let Some(l) = w.label {
            out.push_str(&l.to_string());
        }
        for s in &w.samples {
            out.push_str(&format!(",{s}"));
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| HarnessError::io(path, e))
}

/// Parameters of the synthetic spike-sorting benchmark.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub neurons: usize,
    pub spikes: usize,
    pub samples: usize,
    pub peak: usize,
    /// Standard deviation of additive per-sample noise.
    pub noise: f64,
    /// Standard deviation of the multiplicative amplitude jitter.
    pub jitter: f64,
    /// Regime length range: one or two neurons dominate each regime.
    pub regime: (usize, usize),
    /// Probability that a spike comes from outside the dominant neurons.
    pub background: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            neurons: 6,
            spikes: 10390,
            samples: 64,
            peak: 24,
            noise: 6.0,
            jitter: 0.05,
            regime: (200, 800),
            background: 0.1,
            seed: 1,
        }
    }
}

// (peak amplitude, peak width, undershoot depth, undershoot delay, undershoot width)
const TEMPLATE_SHAPES: [(f64, f64, f64, f64, f64); 8] = [
    (100.0, 2.0, 30.0, 8.0, 4.0),
    (160.0, 1.5, 60.0, 6.0, 3.0),
    (85.0, 3.5, 10.0, 10.0, 6.0),
    (130.0, 2.5, 75.0, 10.0, 5.0),
    (95.0, 1.3, 50.0, 4.0, 9.0),
    (120.0, 4.5, 25.0, 14.0, 4.0),
    (140.0, 3.0, 20.0, 12.0, 7.0),
    (110.0, 2.2, 90.0, 7.0, 3.5),
];

/// Noise-free template of neuron `j` (wrapping over the shape table).
pub fn template(j: usize, samples: usize, peak: usize) -> Vec<f64> {
    let (a, sigma, b, delay, tau) = TEMPLATE_SHAPES[j % TEMPLATE_SHAPES.len()];
    let gain = 1.0 + 0.15 * (j / TEMPLATE_SHAPES.len()) as f64;
    (0..samples)
        .map(|i| {
            let t = i as f64 - peak as f64;
            gain * (a * (-t * t / (2.0 * sigma * sigma)).exp()
                - b * (-(t - delay) * (t - delay) / (2.0 * tau * tau)).exp())
        })
        .collect()
}

/// Generates a labelled stream in which individual neurons or pairs dominate
/// extended stretches of time.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Vec<Waveform> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let templates: Vec<Vec<f64>> = (0..spec.neurons).map(|j| template(j, spec.samples, spec.peak)).collect();
    let noise = Normal::new(0.0, spec.noise.max(0.0)).expect("finite noise");
    let jitter = Normal::new(1.0, spec.jitter.max(0.0)).expect("finite jitter");
    let mut out = Vec::with_capacity(spec.spikes);
    while out.len() < spec.spikes {
        let len = rng.random_range(spec.regime.0..=spec.regime.1.max(spec.regime.0));
        let a = rng.random_range(0..spec.neurons);
        let b = if rng.random_bool(0.5) { rng.random_range(0..spec.neurons) } else { a };
        for _ in 0..len {
            if out.len() == spec.spikes {
                break;
            }
            let j = if rng.random_bool(spec.background) {
                rng.random_range(0..spec.neurons)
            } else if rng.random_bool(0.5) {
                a
            } else {
                b
            };
            let g = jitter.sample(&mut rng);
            let samples = templates[j].iter().map(|&v| g * v + noise.sample(&mut rng)).collect();
            out.push(Waveform { samples, peak: None, label: Some(j) });
        }
    }
    out
}

/// Framing, scaling and similarity coding with a fixed amplitude range.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveformEncoder {
    pub frame: FrameParams,
    pub row_hot: usize,
    pub col_hot: usize,
    pub min: f64,
    pub max: f64,
}

impl WaveformEncoder {
    /// Calibrates the amplitude range over the whole dataset.
    pub fn calibrate(waves: &[Waveform], frame: FrameParams, row_hot: usize, col_hot: usize) -> Result<Self> {
        let peaks: Vec<usize> = waves.iter().map(Waveform::peak_index).collect();
        let (min, max) = calibrate_range(waves.iter().zip(&peaks).map(|(w, &p)| (&w.samples[..], p)), &frame)?;
        Ok(WaveformEncoder { frame, row_hot, col_hot, min, max })
    }

    pub fn frame(&self, w: &Waveform) -> Result<Vec<u32>> {
        Ok(frame_waveform(&w.samples, w.peak_index(), &self.frame, self.min, self.max)?.values)
    }

    pub fn encode_levels(&self, levels: &[u32]) -> Result<SpikeVector> {
        Ok(encode_frame(levels, self.frame.precision, self.row_hot, self.col_hot)?)
    }

    pub fn encode(&self, w: &Waveform) -> Result<SpikeVector> {
        self.encode_levels(&self.frame(w)?)
    }

    pub fn input_len(&self) -> usize {
        self.frame.frame_size()
    }
}

/// Writes encoded patterns as CSV, one row-major bit string per line.
pub fn write_patterns_csv(patterns: &[SpikeVector], mut out: impl Write) -> std::io::Result<()> {
    for p in patterns {
        let bits: Vec<String> = p.to_bits().iter().map(u8::to_string).collect();
        writeln!(out, "{}", bits.join(","))?;
    }
    Ok(())
}
