//! Offline k-means over spike vectors: `sad` assignment, arithmetic-mean
//! centroids. Used as the quality reference for online clustering.

use rand::{seq::SliceRandom, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{check_len, Error, Result};
use crate::numeric::{avg_dist_dense, mean_centroids, sad_spikes, Centroid, SpikeVector};

pub const DEFAULT_MAX_EPOCHS: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct KmeansResult {
    pub centroids: Vec<Centroid>,
    /// `assignments[i]` is the cluster of pattern `i`.
    pub assignments: Vec<usize>,
    /// Fraction of patterns whose nearest centroid is their assigned one.
    pub convergence: f64,
    pub epochs: usize,
    pub avg_dist: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiSeedResult {
    pub best: KmeansResult,
    /// `(seed, avg_dist)` for every run, in input order.
    pub runs: Vec<(u64, f64)>,
}

struct Prepared {
    centroids: Vec<Centroid>,
    sums: Vec<f64>,
}

impl Prepared {
    fn new(centroids: Vec<Centroid>) -> Self {
        let sums = centroids.iter().map(Centroid::sum).collect();
        Prepared { centroids, sums }
    }

    fn nearest(&self, x: &SpikeVector) -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for (j, c) in self.centroids.iter().enumerate() {
            let d = sad_spikes(x, &c.values, self.sums[j]);
            if d < best.1 {
                best = (j, d);
            }
        }
        best
    }
}

/// Fraction of patterns whose nearest centroid (lowest index on ties) is the assigned one.
pub fn convergence(patterns: &[SpikeVector], assignments: &[usize], centroids: &[Centroid]) -> f64 {
    if patterns.is_empty() {
        return 1.0;
    }
    let prep = Prepared::new(centroids.to_vec());
    let hits = patterns
        .iter()
        .zip(assignments)
        .filter(|(x, &a)| prep.nearest(x).0 == a)
        .count();
    hits as f64 / patterns.len() as f64
}

fn initial_centroids(patterns: &[SpikeVector], k: usize, seed: u64) -> Vec<Centroid> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..patterns.len()).collect();
    order.shuffle(&mut rng);
    // Prefer patterns with distinct contents; fall back to distinct indices.
    let mut chosen: Vec<usize> = Vec::with_capacity(k);
    for &i in &order {
        if chosen.len() == k {
            break;
        }
        if chosen.iter().all(|&c| patterns[c] != patterns[i]) {
            chosen.push(i);
        }
    }
    for &i in &order {
        if chosen.len() == k {
            break;
        }
        if !chosen.contains(&i) {
            chosen.push(i);
        }
    }
    chosen.iter().map(|&i| Centroid::from(&patterns[i])).collect()
}

/// Lloyd-style k-means. Stops once `convergence >= target_convergence` or
/// after `max_epochs` epochs.
pub fn kmeans(
    patterns: &[SpikeVector],
    k: usize,
    seed: u64,
    target_convergence: f64,
    max_epochs: usize,
) -> Result<KmeansResult> {
    if k == 0 {
        return Err(Error::domain("k must be at least 1"));
    }
    if patterns.is_empty() {
        return Err(Error::domain("k-means over an empty pattern set"));
    }
    if k > patterns.len() {
        return Err(Error::domain(format!("k = {k} exceeds {} patterns", patterns.len())));
    }
    if !(target_convergence > 0.0 && target_convergence <= 1.0) {
        return Err(Error::domain("target convergence must lie in (0, 1]"));
    }
    let p = patterns[0].len();
    for x in patterns {
        check_len(p, x.len())?;
    }

    let mut prep = Prepared::new(initial_centroids(patterns, k, seed));
    let mut assignments = vec![0usize; patterns.len()];
    let mut epochs = 0;
    let mut conv = 0.0;
    while epochs < max_epochs.max(1) {
        epochs += 1;
        // 1) clusters from nearest centroids
        let mut dists = vec![0.0; patterns.len()];
        for (i, x) in patterns.iter().enumerate() {
            let (a, d) = prep.nearest(x);
            assignments[i] = a;
            dists[i] = d;
        }
        reseed_empty(patterns, &mut assignments, &mut dists, k);
        // 2) centroids for those clusters
        prep = Prepared::new(mean_centroids(patterns, &assignments, k)?);
        let hits = patterns
            .iter()
            .zip(&assignments)
            .filter(|(x, &a)| prep.nearest(x).0 == a)
            .count();
        conv = hits as f64 / patterns.len() as f64;
        if conv >= target_convergence {
            break;
        }
    }
    let avg_dist = avg_dist_dense(patterns, &assignments, &prep.centroids)?;
    Ok(KmeansResult { centroids: prep.centroids, assignments, convergence: conv, epochs, avg_dist, seed })
}

/// Empty clusters take the pattern farthest from its current centroid.
fn reseed_empty(patterns: &[SpikeVector], assignments: &mut [usize], dists: &mut [f64], k: usize) {
    let mut counts = vec![0usize; k];
    for &a in assignments.iter() {
        counts[a] += 1;
    }
    for cluster in 0..k {
        if counts[cluster] > 0 {
            continue;
        }
        let far = (0..patterns.len())
            .filter(|&i| counts[assignments[i]] > 1)
            .fold(None, |best: Option<usize>, i| match best {
                Some(b) if dists[b] >= dists[i] => Some(b),
                _ => Some(i),
            });
        if let Some(i) = far {
            counts[assignments[i]] -= 1;
            assignments[i] = cluster;
            counts[cluster] = 1;
            dists[i] = 0.0;
        }
    }
}

/// Runs [`kmeans`] once per seed and keeps the lowest average distance
/// (earliest seed on ties).
pub fn kmeans_multi_seed(
    patterns: &[SpikeVector],
    k: usize,
    seeds: &[u64],
    target_convergence: f64,
    max_epochs: usize,
) -> Result<MultiSeedResult> {
    if seeds.is_empty() {
        return Err(Error::domain("no seeds given"));
    }
    let results = seeds
        .par_iter()
        .map(|&s| kmeans(patterns, k, s, target_convergence, max_epochs))
        .collect::<Result<Vec<_>>>()?;
    let runs = results.iter().map(|r| (r.seed, r.avg_dist)).collect();
    let best = results
        .into_iter()
        .reduce(|a, b| if b.avg_dist < a.avg_dist { b } else { a })
        .expect("at least one seed");
    Ok(MultiSeedResult { best, runs })
}

/// Centroid CSV: one row per centroid, `cluster,v0,v1,...`.
pub fn write_centroids_csv<W: std::io::Write>(centroids: &[Centroid], mut out: W) -> std::io::Result<()> {
    for (j, c) in centroids.iter().enumerate() {
        let vals: Vec<String> = c.values.iter().map(|v| format!("{v:.6}")).collect();
        writeln!(out, "{j},{}", vals.join(","))?;
    }
    Ok(())
}
