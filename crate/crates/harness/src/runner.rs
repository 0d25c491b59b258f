//! Streaming experiment loops and their on-disk outputs.

use std::fs;
use std::io::BufWriter;
use std::path::Path;

use dendrite_core::encoders::rf_extract;
use dendrite_core::kmeans::write_centroids_csv;
use dendrite_core::numeric::{avg_dist_dense, mean_centroids};
use dendrite_core::{build_network, kmeans_multi_seed, Centroid, Dendrite, MultiSeedResult, Network, PixelImage, SpikeVector};

use crate::adaptivity::{apply_adaptivity, Sample};
use crate::config::{ExperimentConfig, Mode};
use crate::digits::{surrogate_stream, ImageStream};
use crate::error::{HarnessError, Result};
use crate::idx::load_mnist_stream;
use crate::metrics::{BlockRecord, MetricsSeries, StepRecord, TallyRecord};
use crate::waveform::{generate_synthetic, load_waveforms, Waveform, WaveformEncoder};

pub struct ClusterRun {
    pub metrics: MetricsSeries,
    pub dendrite: Dendrite,
    /// Encodings of the final pass, as presented to the dendrite.
    pub patterns: Vec<SpikeVector>,
    /// Frozen-weight cluster of each final-pass pattern.
    pub assignments: Vec<usize>,
    pub centroids: Vec<Centroid>,
}

pub struct ClassifyRun {
    pub metrics: MetricsSeries,
    pub network: Network,
}

pub enum RunOutput {
    Cluster(ClusterRun),
    Classify(ClassifyRun),
}

impl RunOutput {
    pub fn metrics(&self) -> &MetricsSeries {
        match self {
            RunOutput::Cluster(r) => &r.metrics,
            RunOutput::Classify(r) => &r.metrics,
        }
    }
}

fn require_mode(cfg: &ExperimentConfig, mode: Mode) -> Result<()> {
    if cfg.mode != mode {
        return Err(HarnessError::config(format!("expected mode {mode:?}, config has {:?}", cfg.mode)));
    }
    Ok(())
}

pub fn load_cluster_data(cfg: &ExperimentConfig) -> Result<Vec<Waveform>> {
    match &cfg.waveforms {
        Some(path) => load_waveforms(path),
        None => Ok(generate_synthetic(&cfg.synthetic)),
    }
}

/// Framed levels for every waveform plus the calibrated encoder.
/// `None` for an empty dataset.
pub fn frame_dataset(cfg: &ExperimentConfig, waves: &[Waveform]) -> Result<Option<(WaveformEncoder, Vec<Vec<u32>>)>> {
    if waves.is_empty() {
        return Ok(None);
    }
    let enc = WaveformEncoder::calibrate(waves, cfg.frame, cfg.row_hot, cfg.col_hot)?;
    let levels = waves.iter().map(|w| enc.frame(w)).collect::<Result<Vec<_>>>()?;
    Ok(Some((enc, levels)))
}

/// Untransformed encodings of the clustering dataset.
pub fn cluster_patterns(cfg: &ExperimentConfig) -> Result<Vec<SpikeVector>> {
    let waves = load_cluster_data(cfg)?;
    match frame_dataset(cfg, &waves)? {
        None => Ok(Vec::new()),
        Some((enc, levels)) => levels.iter().map(|l| enc.encode_levels(l)).collect(),
    }
}

/// Frozen-weight assignment: the winning segment, or the highest raw
/// potential (lowest index on ties) when no segment reaches threshold.
pub fn frozen_assignments(d: &Dendrite, patterns: &[SpikeVector]) -> Result<(Vec<usize>, usize)> {
    let mut silent = 0;
    let mut out = Vec::with_capacity(patterns.len());
    for x in patterns {
        match d.winner(x)? {
            Some((j, _)) => out.push(j),
            None => {
                silent += 1;
                let v = d.potentials(x)?;
                let best = v.iter().enumerate().fold(0, |b, (j, &p)| if p > v[b] { j } else { b });
                out.push(best);
            }
        }
    }
    Ok((out, silent))
}

pub fn run_clustering(cfg: &ExperimentConfig) -> Result<ClusterRun> {
    require_mode(cfg, Mode::Cluster)?;
    let waves = load_cluster_data(cfg)?;
    let mut dendrite = Dendrite::new(cfg.frame.frame_size(), cfg.segments, cfg.params);
    let mut metrics = MetricsSeries::default();
    metrics.push_summary("num_weights", cfg.cluster_num_weights());

    let Some((enc, levels)) = frame_dataset(cfg, &waves)? else {
        metrics.push_summary("steps", 0);
        return Ok(ClusterRun { metrics, dendrite, patterns: Vec::new(), assignments: Vec::new(), centroids: Vec::new() });
    };

    let n = levels.len();
    let mut last_pass = Vec::with_capacity(n);
    let mut fired = 0usize;
    for step in 0..n * cfg.passes {
        let sample = Sample::Frame { levels: levels[step % n].clone(), precision: cfg.frame.precision };
        let Sample::Frame { levels: lv, .. } = apply_adaptivity(&cfg.transform, step, sample)? else {
            unreachable!("waveform transforms keep frames");
        };
        let x = enc.encode_levels(&lv)?;
        let z = dendrite.step(&x, true, cfg.learning.learning_at(step))?;
        fired += usize::from(z.cid.is_some());
        if step % cfg.metrics_every == 0 || step + 1 == n * cfg.passes {
            metrics.steps.push(StepRecord { step, wt_convergence: dendrite.convergence()?, fired: z.cid.is_some() });
        }
        if step >= n * (cfg.passes - 1) {
            last_pass.push(x);
        }
    }

    let (assignments, silent) = frozen_assignments(&dendrite, &last_pass)?;
    let centroids = mean_centroids(&last_pass, &assignments, cfg.segments)?;
    let avg = avg_dist_dense(&last_pass, &assignments, &centroids)?;
    let used = (0..cfg.segments).filter(|j| assignments.contains(j)).count();
    metrics.push_summary("steps", n * cfg.passes);
    metrics.push_summary("wt_convergence", dendrite.convergence()?);
    metrics.push_summary("avg_dist", avg);
    metrics.push_summary("fired_fraction", fired as f64 / (n * cfg.passes) as f64);
    metrics.push_summary("silent_patterns", silent);
    metrics.push_summary("clusters_used", used);
    Ok(ClusterRun { metrics, dendrite, patterns: last_pass, assignments, centroids })
}

/// Best-of-seeds k-means over the untransformed encodings; seeds are
/// `seed, seed + 1, ...`.
pub fn run_kmeans(cfg: &ExperimentConfig) -> Result<(MultiSeedResult, Vec<SpikeVector>)> {
    let patterns = cluster_patterns(cfg)?;
    let seeds: Vec<u64> = (0..cfg.kmeans_seeds as u64).map(|i| cfg.seed.wrapping_add(i)).collect();
    let res = kmeans_multi_seed(&patterns, cfg.segments, &seeds, cfg.kmeans_target, cfg.max_epochs)?;
    Ok((res, patterns))
}

pub fn load_classify_data(cfg: &ExperimentConfig) -> Result<ImageStream> {
    let mut stream = match &cfg.mnist_dir {
        Some(dir) => {
            let (images, labels, tail) = load_mnist_stream(dir)?;
            ImageStream { images, labels, tail }
        }
        None => surrogate_stream(cfg.surrogate_train, cfg.surrogate_jitter, cfg.seed)?,
    };
    if (stream.images.rows, stream.images.cols) != (cfg.rf.image_rows, cfg.rf.image_cols) {
        return Err(HarnessError::config(format!(
            "images are {}x{}, receptive-field layout expects {}x{}",
            stream.images.rows, stream.images.cols, cfg.rf.image_rows, cfg.rf.image_cols
        )));
    }
    if let Some(t) = cfg.tail {
        stream.tail = t;
    }
    stream.tail = stream.tail.min(stream.labels.len());
    Ok(stream)
}

/// Receptive-field contexts of input `step` after any transform.
pub fn encode_image(cfg: &ExperimentConfig, gray: &[u8], rows: usize, cols: usize, step: usize) -> Result<Vec<SpikeVector>> {
    let img = PixelImage::from_gray(rows, cols, gray, cfg.gray_threshold)?;
    let Sample::Image(img) = apply_adaptivity(&cfg.transform, step, Sample::Image(img))? else {
        unreachable!("image transforms keep images");
    };
    Ok(rf_extract(&img, &cfg.rf)?)
}

pub fn run_classification(cfg: &ExperimentConfig) -> Result<ClassifyRun> {
    require_mode(cfg, Mode::Classify)?;
    let stream = load_classify_data(cfg)?;
    run_classification_on(cfg, &stream)
}

pub fn run_classification_on(cfg: &ExperimentConfig, stream: &ImageStream) -> Result<ClassifyRun> {
    let mut network = build_network(cfg.rf.rf_count(), cfg.labels, cfg.segments, cfg.rf.context_len(), cfg.params)?;
    let mut metrics = MetricsSeries::default();
    let n = stream.labels.len();
    let (rows, cols) = (stream.images.rows, stream.images.cols);
    let tail_start = n - stream.tail;
    let mut tail_errors = 0usize;
    let mut tail_votes = 0u64;
    let mut block = BlockRecord { block: 0, start: 0, len: 0, errors: 0 };
    for step in 0..n {
        let label = usize::from(stream.labels[step]);
        let contexts = encode_image(cfg, stream.images.image(step), rows, cols, step)?;
        let (pred, tally) = network.supervise(&contexts, label, cfg.learning.learning_at(step))?;
        let wrong = pred != label;
        block.len += 1;
        block.errors += usize::from(wrong);
        if step >= tail_start {
            tail_errors += usize::from(wrong);
            tail_votes += tally.counts.iter().map(|&c| u64::from(c)).sum::<u64>();
        }
        if cfg.tally_range.is_some_and(|(a, b)| step >= a && step < b) {
            metrics.tallies.push(TallyRecord { step, label, predicted: pred, counts: tally.counts });
        }
        if block.len == cfg.block_size || step + 1 == n {
            metrics.blocks.push(block);
            block = BlockRecord { block: block.block + 1, start: step + 1, len: 0, errors: 0 };
        }
    }
    let total = metrics.total_errors();
    metrics.push_summary("inputs", n);
    metrics.push_summary("num_weights", network.synapse_count());
    metrics.push_summary("units", network.unit_count());
    metrics.push_summary("total_errors", total);
    metrics.push_summary("error_rate", if n == 0 { 0.0 } else { total as f64 / n as f64 });
    metrics.push_summary("tail_len", stream.tail);
    metrics.push_summary("tail_error", if stream.tail == 0 { 0.0 } else { tail_errors as f64 / stream.tail as f64 });
    let per_group = tail_votes as f64 / (stream.tail.max(1) * network.rf_count()) as f64;
    metrics.push_summary("tail_labels_per_group", per_group);
    metrics.push_summary("untouched_segment_units", untouched_units(&network));
    Ok(ClassifyRun { metrics, network })
}

/// Fraction of units with at least one segment still at its initial weights.
fn untouched_units(net: &Network) -> f64 {
    let w_0 = net.params().w_0;
    let untouched = net
        .groups
        .iter()
        .flat_map(|g| &g.units)
        .filter(|u| {
            let w = &u.dendrite.weights;
            (0..w.cols()).any(|j| w.column(j).iter().all(|&v| v == w_0))
        })
        .count();
    untouched as f64 / net.unit_count().max(1) as f64
}

pub fn run(cfg: &ExperimentConfig) -> Result<RunOutput> {
    match cfg.mode {
        Mode::Cluster => run_clustering(cfg).map(RunOutput::Cluster),
        Mode::Classify => run_classification(cfg).map(RunOutput::Classify),
    }
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|e| HarnessError::io(path, e))
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    Ok(BufWriter::new(fs::File::create(path).map_err(|e| HarnessError::io(path, e))?))
}

/// Writes `metrics.csv`, `summary.csv`, optional `tallies.csv` and the weight
/// checkpoint (`weights.bin`/`weights.csv`/`centroids.csv` for clustering,
/// `manifest.txt`/`units.bin` for classification).
pub fn write_outputs(out: &RunOutput, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let m = out.metrics();
    write(&dir.join("metrics.csv"), m.to_csv())?;
    write(&dir.join("summary.csv"), m.summary_csv())?;
    if !m.tallies.is_empty() {
        write(&dir.join("tallies.csv"), m.tallies_csv())?;
    }
    match out {
        RunOutput::Cluster(r) => {
            let w = &r.dendrite.weights;
            let p = dir.join("weights.bin");
            w.write_binary(create(&p)?).map_err(|e| HarnessError::io(&p, e))?;
            let p = dir.join("weights.csv");
            w.write_csv(create(&p)?).map_err(|e| HarnessError::io(&p, e))?;
            let p = dir.join("centroids.csv");
            write_centroids_csv(&r.centroids, create(&p)?).map_err(|e| HarnessError::io(&p, e))?;
        }
        RunOutput::Classify(r) => r.network.save(dir).map_err(|e| HarnessError::io(dir, e))?,
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ExperimentConfig;

    fn cfg(pairs: &[(&str, &str)]) -> ExperimentConfig {
        let p: Vec<(String, String)> = pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        ExperimentConfig::from_pairs(&p).unwrap()
    }

    #[test]
    fn empty_waveform_file_gives_empty_series() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.csv");
        fs::write(&path, "").unwrap();
        let r = run_clustering(&cfg(&[("waveforms", path.to_str().unwrap())])).unwrap();
        assert!(r.metrics.steps.is_empty());
        assert_eq!(r.metrics.summary_value("num_weights"), Some("2496"));
    }

    #[test]
    fn small_clustering_run_records_every_step() {
        let r = run_clustering(&cfg(&[("synthetic_spikes", "300")])).unwrap();
        assert_eq!(r.metrics.steps.len(), 300);
        assert!(r.metrics.steps.windows(2).all(|w| w[0].step < w[1].step));
        assert_eq!(r.patterns.len(), 300);
        assert!(r.metrics.summary_f64("avg_dist").unwrap() > 0.0);
    }

    #[test]
    fn mode_mismatch_is_rejected() {
        assert!(run_classification(&cfg(&[])).is_err());
    }

    #[test]
    fn blocks_account_for_every_error() {
        let c = cfg(&[("mode", "classify"), ("surrogate_train", "250"), ("block_size", "120"), ("segments", "2")]);
        let r = run_classification(&c).unwrap();
        let m = &r.metrics;
        let lens: Vec<usize> = m.blocks.iter().map(|b| b.len).collect();
        assert_eq!(lens, vec![120, 120, 120, 120, 70]);
        let sum: f64 = m.blocks.iter().map(|b| b.error_rate() * b.len as f64).sum();
        assert_eq!(sum.round() as usize, m.summary_value("total_errors").unwrap().parse::<usize>().unwrap());
    }
}
