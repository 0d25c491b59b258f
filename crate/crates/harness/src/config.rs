//! Experiment configuration: a plain `key=value` file plus overrides.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use dendrite_core::dendrite::{scaled, DEFAULT_SCALE};
use dendrite_core::encoders::{checkerboard_mask, Reduce};
use dendrite_core::{FrameParams, RfEncoding, SdpParams};

use crate::error::{HarnessError, Result};
use crate::waveform::SyntheticSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Cluster,
    Classify,
}

/// Macro-level change applied to the stream from `step` onward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Transform {
    #[default]
    None,
    Flip { step: usize },
    Transpose { step: usize },
}

impl Transform {
    pub fn active_at(&self, step: usize) -> bool {
        match *self {
            Transform::None => false,
            Transform::Flip { step: s } | Transform::Transpose { step: s } => step >= s,
        }
    }
}

/// Half-open step intervals during which learning is enabled.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schedule(pub Vec<(usize, Option<usize>)>);

impl Schedule {
    pub fn always() -> Self {
        Schedule(vec![(0, None)])
    }

    pub fn never() -> Self {
        Schedule(Vec::new())
    }

    pub fn learning_at(&self, step: usize) -> bool {
        self.0.iter().any(|&(a, b)| step >= a && b.is_none_or(|b| step < b))
    }

    /// `on`, `off`, or comma-separated `start..end` / `start..` intervals.
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "on" | "always" => return Ok(Schedule::always()),
            "off" | "never" => return Ok(Schedule::never()),
            _ => {}
        }
        let mut out = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (a, b) = part
                .split_once("..")
                .ok_or_else(|| HarnessError::config(format!("bad learning interval '{part}'")))?;
            let a = parse_usize("learning", a)?;
            let b = if b.trim().is_empty() { None } else { Some(parse_usize("learning", b)?) };
            if b.is_some_and(|b| b < a) {
                return Err(HarnessError::config(format!("empty learning interval '{part}'")));
            }
            out.push((a, b));
        }
        Ok(Schedule(out))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub mode: Mode,
    /// Waveform file; the synthetic benchmark is used when absent.
    pub waveforms: Option<PathBuf>,
    pub synthetic: SyntheticSpec,
    /// Number of times the waveform dataset is streamed.
    pub passes: usize,
    /// MNIST IDX directory; the bundled digit surrogate is used when absent.
    pub mnist_dir: Option<PathBuf>,
    pub surrogate_train: usize,
    /// Scale of the affine jitter applied to surrogate training draws.
    pub surrogate_jitter: f64,
    pub frame: FrameParams,
    pub row_hot: usize,
    pub col_hot: usize,
    pub rf: RfEncoding,
    pub gray_threshold: u8,
    pub params: SdpParams,
    pub segments: usize,
    pub labels: usize,
    pub block_size: usize,
    /// Evaluation window at the end of a classification stream.
    pub tail: Option<usize>,
    pub transform: Transform,
    pub learning: Schedule,
    pub seed: u64,
    /// Record weight convergence every this many clustering steps.
    pub metrics_every: usize,
    pub kmeans_seeds: usize,
    pub kmeans_target: f64,
    pub max_epochs: usize,
    /// Steps `[a, b)` whose vote tallies are recorded.
    pub tally_range: Option<(usize, usize)>,
}

pub const KNOWN_KEYS: &[&str] = &[
    "mode",
    "waveforms",
    "synthetic_neurons",
    "synthetic_spikes",
    "synthetic_noise",
    "synthetic_jitter",
    "synthetic_seed",
    "passes",
    "mnist_dir",
    "surrogate_train",
    "surrogate_jitter",
    "precision",
    "before",
    "after",
    "stride",
    "window",
    "reduce",
    "row_hot",
    "col_hot",
    "rf_size",
    "mask",
    "two_rail",
    "gray_threshold",
    "scale",
    "threshold",
    "capture",
    "backoff",
    "backoff_num",
    "backoff_den",
    "search",
    "search_num",
    "search_den",
    "w_max",
    "w_0",
    "segments",
    "labels",
    "block_size",
    "tail",
    "transform",
    "transform_step",
    "learning",
    "seed",
    "metrics_every",
    "kmeans_seeds",
    "kmeans_target",
    "max_epochs",
    "tally_range",
];

/// Parses `key=value` lines; `#` starts a comment.
pub fn parse_pairs(text: &str, origin: &Path) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| HarnessError::input(origin, i + 1, format!("expected key=value, got '{line}'")))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

pub fn parse_override(s: &str) -> Result<(String, String)> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| HarnessError::config(format!("override '{s}' is not key=value")))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

fn parse_usize(key: &str, v: &str) -> Result<usize> {
    v.trim()
        .parse()
        .map_err(|_| HarnessError::config(format!("{key}: '{v}' is not a non-negative integer")))
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    v.trim()
        .parse()
        .map_err(|_| HarnessError::config(format!("{key}: '{v}' is not a number")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.trim() {
        "1" | "true" | "yes" | "on" => Ok(true),
        "0" | "false" | "no" | "off" => Ok(false),
        _ => Err(HarnessError::config(format!("{key}: '{v}' is not a boolean"))),
    }
}

/// Parses `a/b`, an integer, or a decimal into an exact fraction.
pub fn parse_rational(key: &str, v: &str) -> Result<(u64, u64)> {
    let v = v.trim();
    let bad = || HarnessError::config(format!("{key}: '{v}' is not a non-negative fraction"));
    if let Some((n, d)) = v.split_once('/') {
        let n: u64 = n.trim().parse().map_err(|_| bad())?;
        let d: u64 = d.trim().parse().map_err(|_| bad())?;
        if d == 0 {
            return Err(bad());
        }
        return Ok((n, d));
    }
    match v.split_once('.') {
        None => Ok((v.parse().map_err(|_| bad())?, 1)),
        Some((int, frac)) => {
            if frac.len() > 12 || !frac.chars().all(|c| c.is_ascii_digit()) {
                return Err(bad());
            }
            let den = 10u64.pow(frac.len() as u32);
            let int: u64 = if int.is_empty() { 0 } else { int.parse().map_err(|_| bad())? };
            let frac: u64 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| bad())? };
            Ok((int * den + frac, den))
        }
    }
}

fn weight(key: &str, v: &str, scale: u32) -> Result<u32> {
    let (n, d) = parse_rational(key, v)?;
    scaled(n, d, scale).map_err(|e| HarnessError::config(format!("{key}: {e}")))
}

fn parse_mask(v: &str, rf_size: usize) -> Result<Vec<(usize, usize)>> {
    match v.trim() {
        "checkerboard" => Ok(checkerboard_mask(rf_size)),
        "full" => Ok((0..rf_size).flat_map(|r| (0..rf_size).map(move |c| (r, c))).collect()),
        list => list
            .split(';')
            .map(|pair| {
                let (r, c) = pair
                    .split_once(':')
                    .ok_or_else(|| HarnessError::config(format!("mask entry '{pair}' is not row:col")))?;
                Ok((parse_usize("mask", r)?, parse_usize("mask", c)?))
            })
            .collect(),
    }
}

impl ExperimentConfig {
    pub fn from_file(path: &Path, overrides: &[(String, String)]) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        let mut pairs = parse_pairs(&text, path)?;
        pairs.extend_from_slice(overrides);
        Self::from_pairs(&pairs)
    }

    /// Builds a config from ordered pairs; later keys override earlier ones.
    pub fn from_pairs(pairs: &[(String, String)]) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (k, v) in pairs {
            if !KNOWN_KEYS.contains(&k.as_str()) {
                return Err(HarnessError::config(format!("unknown key '{k}'")));
            }
            map.insert(k.clone(), v.clone());
        }
        let get = |k: &str| map.get(k).map(String::as_str);

        let mode = match get("mode").unwrap_or("cluster") {
            "cluster" => Mode::Cluster,
            "classify" => Mode::Classify,
            m => return Err(HarnessError::config(format!("mode must be cluster or classify, got '{m}'"))),
        };
        let classify = mode == Mode::Classify;

        let usize_or = |k: &str, d: usize| get(k).map_or(Ok(d), |v| parse_usize(k, v));
        let f64_or = |k: &str, d: f64| get(k).map_or(Ok(d), |v| parse_f64(k, v));

        let scale = usize_or("scale", DEFAULT_SCALE as usize)? as u32;
        if scale == 0 {
            return Err(HarnessError::config("scale must be positive"));
        }
        let w = |k: &str, default: &str| weight(k, get(k).unwrap_or(default), scale);
        let split_fraction = |k: &str, default: &str| -> Result<u32> {
            let (num, den) = (get(&format!("{k}_num")), get(&format!("{k}_den")));
            if get(k).is_some() && (num.is_some() || den.is_some()) {
                return Err(HarnessError::config(format!("give either {k} or {k}_num/{k}_den, not both")));
            }
            match (num, den) {
                (Some(n), Some(d)) => weight(k, &format!("{n}/{d}"), scale),
                (Some(n), None) => weight(k, n, scale),
                (None, Some(_)) => Err(HarnessError::config(format!("{k}_den given without {k}_num"))),
                (None, None) => w(k, default),
            }
        };

        let defaults = if classify { CLASSIFY_DEFAULTS } else { CLUSTER_DEFAULTS };
        let threshold = w("threshold", defaults.threshold)?;
        let params = SdpParams::new(
            w("capture", "1")?,
            split_fraction("backoff", defaults.backoff)?,
            split_fraction("search", defaults.search)?,
            w("w_max", defaults.w_max)?,
            w("w_0", defaults.w_0)?,
            u64::from(threshold),
            scale,
        )
        .map_err(|e| HarnessError::config(e.to_string()))?;

        let mut frame = FrameParams::new(
            usize_or("precision", 5)? as u32,
            usize_or("before", 6)?,
            usize_or("after", 6)?,
            usize_or("stride", 3)?,
            usize_or("window", 5)?,
        )
        .map_err(|e| HarnessError::config(e.to_string()))?;
        frame.reduce = match get("reduce").unwrap_or("mean") {
            "mean" => Reduce::Mean,
            "max" => Reduce::Max,
            r => return Err(HarnessError::config(format!("reduce must be mean or max, got '{r}'"))),
        };

        let rf_size = usize_or("rf_size", 5)?;
        let rf = RfEncoding {
            rf_size,
            mask: parse_mask(get("mask").unwrap_or("checkerboard"), rf_size)?,
            two_rail: get("two_rail").map_or(Ok(true), |v| parse_bool("two_rail", v))?,
            ..RfEncoding::mnist()
        };
        rf.validate().map_err(|e| HarnessError::config(e.to_string()))?;

        let transform_step = get("transform_step").map(|v| parse_usize("transform_step", v)).transpose()?;
        let transform = match (get("transform").unwrap_or("none"), transform_step) {
            ("none", _) => Transform::None,
            ("flip", Some(step)) if !classify => Transform::Flip { step },
            ("transpose", Some(step)) if classify => Transform::Transpose { step },
            ("flip" | "transpose", None) => return Err(HarnessError::config("transform needs transform_step")),
            (t, _) => {
                return Err(HarnessError::config(format!(
                    "transform '{t}' is not available in {} mode",
                    if classify { "classify" } else { "cluster" }
                )))
            }
        };

        let synth_default = SyntheticSpec::default();
        let synthetic = SyntheticSpec {
            neurons: usize_or("synthetic_neurons", synth_default.neurons)?,
            spikes: usize_or("synthetic_spikes", synth_default.spikes)?,
            noise: f64_or("synthetic_noise", synth_default.noise)?,
            jitter: f64_or("synthetic_jitter", synth_default.jitter)?,
            seed: usize_or("synthetic_seed", synth_default.seed as usize)? as u64,
            ..synth_default
        };
        if synthetic.neurons == 0 {
            return Err(HarnessError::config("synthetic_neurons must be at least 1"));
        }

        let tally_range = match get("tally_range") {
            None => None,
            Some(v) => {
                let (a, b) = v
                    .split_once("..")
                    .ok_or_else(|| HarnessError::config("tally_range must be start..end"))?;
                Some((parse_usize("tally_range", a)?, parse_usize("tally_range", b)?))
            }
        };

        let cfg = ExperimentConfig {
            mode,
            waveforms: get("waveforms").map(PathBuf::from),
            synthetic,
            passes: usize_or("passes", 1)?,
            mnist_dir: get("mnist_dir").map(PathBuf::from),
            surrogate_train: usize_or("surrogate_train", 20000)?,
            surrogate_jitter: f64_or("surrogate_jitter", 1.0)?,
            frame,
            row_hot: usize_or("row_hot", 1)?,
            col_hot: usize_or("col_hot", 3)?,
            rf,
            gray_threshold: u8::try_from(usize_or("gray_threshold", 128)?)
                .map_err(|_| HarnessError::config("gray_threshold must be at most 255"))?,
            params,
            segments: usize_or("segments", if classify { 16 } else { 6 })?,
            labels: usize_or("labels", 10)?,
            block_size: usize_or("block_size", 1000)?,
            tail: get("tail").map(|v| parse_usize("tail", v)).transpose()?,
            transform,
            learning: get("learning").map_or(Ok(Schedule::always()), Schedule::parse)?,
            seed: usize_or("seed", 0)? as u64,
            metrics_every: usize_or("metrics_every", 1)?,
            kmeans_seeds: usize_or("kmeans_seeds", 64)?,
            kmeans_target: f64_or("kmeans_target", 0.98)?,
            max_epochs: usize_or("max_epochs", dendrite_core::kmeans::DEFAULT_MAX_EPOCHS)?,
            tally_range,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        for (k, v) in [
            ("segments", self.segments),
            ("labels", self.labels),
            ("block_size", self.block_size),
            ("passes", self.passes),
            ("metrics_every", self.metrics_every),
        ] {
            if v == 0 {
                return Err(HarnessError::config(format!("{k} must be at least 1")));
            }
        }
        if !(self.surrogate_jitter >= 0.0 && self.surrogate_jitter <= 4.0) {
            return Err(HarnessError::config("surrogate_jitter must lie in [0, 4]"));
        }
        for (k, v) in [("row_hot", self.row_hot), ("col_hot", self.col_hot)] {
            if v % 2 == 0 {
                return Err(HarnessError::config(format!("{k} must be odd")));
            }
        }
        if let Some(p) = self.waveforms.as_ref().filter(|p| !p.exists()) {
            return Err(HarnessError::config(format!("waveform file {} does not exist", p.display())));
        }
        if let Some(p) = self.mnist_dir.as_ref().filter(|p| !p.is_dir()) {
            return Err(HarnessError::config(format!("MNIST directory {} does not exist", p.display())));
        }
        Ok(())
    }

    /// Synapse count of the configured clustering dendrite: frame size × clusters.
    pub fn cluster_num_weights(&self) -> usize {
        self.frame.frame_size() * self.segments
    }

    /// Synapse count of the configured classification network.
    pub fn classify_num_weights(&self) -> usize {
        self.rf.rf_count() * self.labels * self.segments * self.rf.context_len()
    }
}

struct ParamDefaults {
    threshold: &'static str,
    backoff: &'static str,
    search: &'static str,
    w_max: &'static str,
    w_0: &'static str,
}

const CLUSTER_DEFAULTS: ParamDefaults =
    ParamDefaults { threshold: "128", backoff: "9/16", search: "0", w_max: "12", w_0: "8" };

// Fresh segments sit exactly at threshold (9 active inputs × w_0) so they can
// capture new patterns; w_max and backoff come from surrogate sweeps.
const CLASSIFY_DEFAULTS: ParamDefaults =
    ParamDefaults { threshold: "72", backoff: "1", search: "0", w_max: "10", w_0: "8" };
