//! Spike vectors, centroids and the rectilinear distance identities.
//!
//! A [`SpikeVector`] is stored sparsely as the sorted positions of its ones;
//! everything downstream (segment potentials, weight updates, k-means
//! assignment) only ever touches those positions.

use std::collections::BTreeMap;

use crate::error::{check_len, Error, Result};

/// Binary row vector modelling a spike volley.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SpikeVector {
    len: usize,
    active: Vec<usize>,
}

impl SpikeVector {
    pub fn zeros(len: usize) -> Self {
        SpikeVector { len, active: Vec::new() }
    }

    /// Builds a vector from 0/1 values. Any other value is a domain error.
    pub fn from_bits<T>(bits: &[T]) -> Result<Self>
    where
        T: Copy + Into<u64>,
    {
        let mut active = Vec::new();
        for (i, &b) in bits.iter().enumerate() {
            match b.into() {
                0 => {}
                1 => active.push(i),
                v => return Err(Error::domain(format!("bit {i} has value {v}, expected 0 or 1"))),
            }
        }
        Ok(SpikeVector { len: bits.len(), active })
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let active = bits.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect();
        SpikeVector { len: bits.len(), active }
    }

    /// Builds a vector of length `len` with ones at `indices` (any order, duplicates merged).
    pub fn from_indices(len: usize, indices: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut active: Vec<usize> = indices.into_iter().collect();
        active.sort_unstable();
        active.dedup();
        if let Some(&last) = active.last() {
            if last >= len {
                return Err(Error::domain(format!("spike index {last} out of range for length {len}")));
            }
        }
        Ok(SpikeVector { len, active })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Number of ones (`m`).
    pub fn spike_count(&self) -> usize {
        self.active.len()
    }

    /// Sorted positions of the ones.
    pub fn active(&self) -> &[usize] {
        &self.active
    }

    pub fn get(&self, i: usize) -> bool {
        self.active.binary_search(&i).is_ok()
    }

    pub fn to_bits(&self) -> Vec<u8> {
        let mut bits = vec![0u8; self.len];
        for &i in &self.active {
            bits[i] = 1;
        }
        bits
    }

    pub fn to_reals(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.len];
        for &i in &self.active {
            v[i] = 1.0;
        }
        v
    }

    /// Number of positions where both vectors spike.
    pub fn overlap(&self, other: &SpikeVector) -> usize {
        let (mut a, mut b) = (self.active.iter().peekable(), other.active.iter().peekable());
        let mut n = 0;
        while let (Some(&&x), Some(&&y)) = (a.peek(), b.peek()) {
            match x.cmp(&y) {
                std::cmp::Ordering::Less => {
                    a.next();
                }
                std::cmp::Ordering::Greater => {
                    b.next();
                }
                std::cmp::Ordering::Equal => {
                    n += 1;
                    a.next();
                    b.next();
                }
            }
        }
        n
    }
}

/// Real-valued component-wise mean of a cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct Centroid {
    pub values: Vec<f64>,
}

impl Centroid {
    pub fn new(values: Vec<f64>) -> Self {
        Centroid { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }
}

impl From<&SpikeVector> for Centroid {
    fn from(x: &SpikeVector) -> Self {
        Centroid::new(x.to_reals())
    }
}

/// Disjoint clusters over an indexed pattern set.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ClusterSet {
    pub assignments: BTreeMap<usize, usize>,
    pub centroids: Vec<Centroid>,
}

impl ClusterSet {
    /// Builds a cluster set from a dense assignment (pattern `i` → `assignment[i]`),
    /// computing arithmetic-mean centroids. Clusters with no members get a zero centroid.
    pub fn from_assignment(patterns: &[SpikeVector], assignment: &[usize], k: usize) -> Result<Self> {
        check_len(patterns.len(), assignment.len())?;
        let centroids = mean_centroids(patterns, assignment, k)?;
        Ok(ClusterSet {
            assignments: assignment.iter().copied().enumerate().collect(),
            centroids,
        })
    }

    pub fn members(&self, cluster: usize) -> impl Iterator<Item = usize> + '_ {
        self.assignments.iter().filter(move |(_, &c)| c == cluster).map(|(&p, _)| p)
    }
}

/// Potential of `x` against an integer weight column: the sum of the weights
/// at spiking positions.
pub fn dot(x: &SpikeVector, w: &[u32]) -> Result<u64> {
    check_len(x.len(), w.len())?;
    Ok(x.active.iter().map(|&i| u64::from(w[i])).sum())
}

/// Real-valued counterpart of [`dot`], used with centroids.
pub fn dot_real(x: &SpikeVector, c: &[f64]) -> Result<f64> {
    check_len(x.len(), c.len())?;
    Ok(x.active.iter().map(|&i| c[i]).sum())
}

/// Sum of absolute differences.
pub fn sad(a: &[f64], b: &[f64]) -> Result<f64> {
    check_len(a.len(), b.len())?;
    Ok(a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum())
}

/// `sad` between a spike vector and a vector with components in `[0, 1]`,
/// evaluated in `O(m)` as `Σc + m − 2·Σ_{x=1} c`. `c_sum` is `Σc`.
///
/// Exact whenever every component of `c` lies in `[0, 1]`, which holds for
/// centroids of spike vectors.
pub fn sad_spikes(x: &SpikeVector, c: &[f64], c_sum: f64) -> f64 {
    let hit: f64 = x.active.iter().map(|&i| c[i]).sum();
    c_sum + x.spike_count() as f64 - 2.0 * hit
}

pub fn centroid_of(patterns: &[SpikeVector]) -> Result<Centroid> {
    let first = patterns
        .first()
        .ok_or_else(|| Error::domain("centroid of an empty pattern list"))?;
    let mut sums = vec![0.0; first.len()];
    for x in patterns {
        check_len(first.len(), x.len())?;
        for &i in x.active() {
            sums[i] += 1.0;
        }
    }
    let n = patterns.len() as f64;
    sums.iter_mut().for_each(|s| *s /= n);
    Ok(Centroid::new(sums))
}

/// Arithmetic-mean centroid of each of `k` clusters. Empty clusters yield all zeros.
pub fn mean_centroids(patterns: &[SpikeVector], assignment: &[usize], k: usize) -> Result<Vec<Centroid>> {
    check_len(patterns.len(), assignment.len())?;
    let p = patterns.first().map_or(0, SpikeVector::len);
    let mut sums = vec![vec![0.0; p]; k];
    let mut counts = vec![0usize; k];
    for (x, &a) in patterns.iter().zip(assignment) {
        check_len(p, x.len())?;
        if a >= k {
            return Err(Error::domain(format!("cluster index {a} out of range for {k} clusters")));
        }
        counts[a] += 1;
        for &i in x.active() {
            sums[a][i] += 1.0;
        }
    }
    Ok(sums
        .into_iter()
        .zip(counts)
        .map(|(mut s, n)| {
            if n > 0 {
                s.iter_mut().for_each(|v| *v /= n as f64);
            }
            Centroid::new(s)
        })
        .collect())
}

/// Index of the centroid with minimum `sad` to `x`; ties go to the lowest index.
pub fn nearest_centroid(x: &SpikeVector, centroids: &[Centroid]) -> Result<usize> {
    if centroids.is_empty() {
        return Err(Error::domain("nearest centroid over an empty list"));
    }
    let xr = x.to_reals();
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.iter().enumerate() {
        let d = sad(&xr, &c.values)?;
        if d < best.1 {
            best = (j, d);
        }
    }
    Ok(best.0)
}

/// Mean `sad` between each pattern and the centroid of its cluster.
pub fn avg_dist(patterns: &[SpikeVector], assignments: &BTreeMap<usize, usize>, centroids: &[Centroid]) -> Result<f64> {
    if patterns.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for (i, x) in patterns.iter().enumerate() {
        let cid = *assignments
            .get(&i)
            .ok_or_else(|| Error::domain(format!("pattern {i} is not assigned to a cluster")))?;
        let c = centroids
            .get(cid)
            .ok_or_else(|| Error::domain(format!("pattern {i} assigned to missing cluster {cid}")))?;
        check_len(x.len(), c.len())?;
        total += sad(&x.to_reals(), &c.values)?;
    }
    Ok(total / patterns.len() as f64)
}

/// Dense-assignment form of [`avg_dist`].
pub fn avg_dist_dense(patterns: &[SpikeVector], assignment: &[usize], centroids: &[Centroid]) -> Result<f64> {
    check_len(patterns.len(), assignment.len())?;
    if patterns.is_empty() {
        return Ok(0.0);
    }
    let sums: Vec<f64> = centroids.iter().map(Centroid::sum).collect();
    let mut total = 0.0;
    for (x, &a) in patterns.iter().zip(assignment) {
        let c = centroids
            .get(a)
            .ok_or_else(|| Error::domain(format!("assignment to missing cluster {a}")))?;
        check_len(x.len(), c.len())?;
        total += sad_spikes(x, &c.values, sums[a]);
    }
    Ok(total / patterns.len() as f64)
}

/// `Σ w(w_max − w) / (w_max · num_weights)`, evaluated on the raw integers.
pub fn wt_convergence(weights: &[u32], w_max: u32) -> Result<f64> {
    if w_max == 0 {
        return Err(Error::domain("w_max must be positive"));
    }
    if weights.is_empty() {
        return Ok(0.0);
    }
    let mut acc: u128 = 0;
    for &w in weights {
        if w > w_max {
            return Err(Error::domain(format!("weight {w} exceeds w_max {w_max}")));
        }
        acc += u128::from(w) * u128::from(w_max - w);
    }
    Ok(acc as f64 / (f64::from(w_max) * weights.len() as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_constant_weight(rng: &mut impl Rng, len: usize, m: usize) -> SpikeVector {
        let idx = rand::seq::index::sample(rng, len, m);
        SpikeVector::from_indices(len, idx).unwrap()
    }

    #[test]
    fn dot_is_masked_sum() {
        let x = SpikeVector::from_bits(&[1u8, 1, 1, 1, 1, 1, 0, 0]).unwrap();
        assert_eq!(dot(&x, &[5; 8]).unwrap(), 30);
        assert_eq!(dot(&SpikeVector::zeros(4), &[3, 1, 4, 1]).unwrap(), 0);
        assert!(matches!(dot(&x, &[1; 7]), Err(Error::Dimension { .. })));
    }

    #[test]
    fn dot_matches_elementwise_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let bits: Vec<u8> = (0..16).map(|_| rng.random_range(0..=1)).collect();
            let w: Vec<u32> = (0..16).map(|_| rng.random_range(0..=12)).collect();
            let x = SpikeVector::from_bits(&bits).unwrap();
            let mut expected = 0u64;
            for i in 0..16 {
                expected += u64::from(bits[i]) * u64::from(w[i]);
            }
            assert_eq!(dot(&x, &w).unwrap(), expected);
        }
    }

    #[test]
    fn from_bits_rejects_non_binary() {
        assert!(SpikeVector::from_bits(&[0u8, 2]).is_err());
        assert!(SpikeVector::from_indices(3, [3]).is_err());
    }

    #[test]
    fn sad_basics() {
        let a = [0.5, 1.0, 0.0];
        assert_eq!(sad(&a, &a).unwrap(), 0.0);
        assert_eq!(sad(&a, &[0.0, 0.0, 1.0]).unwrap(), 2.5);
        assert!(sad(&a, &[0.0]).is_err());

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x: Vec<f64> = (0..10).map(|_| rng.random_range(-5.0..5.0)).collect();
        let y: Vec<f64> = (0..10).map(|_| rng.random_range(-5.0..5.0)).collect();
        let mut expected = 0.0;
        for i in 0..10 {
            expected += if x[i] > y[i] { x[i] - y[i] } else { y[i] - x[i] };
        }
        assert!((sad(&x, &y).unwrap() - expected).abs() < 1e-12);
        assert_eq!(sad(&x, &y).unwrap(), sad(&y, &x).unwrap());
    }

    #[test]
    fn centroid_examples() {
        let x = SpikeVector::from_bits(&[1u8, 0, 1]).unwrap();
        assert_eq!(centroid_of(&[x]).unwrap().values, vec![1.0, 0.0, 1.0]);
        let a = SpikeVector::from_bits(&[1u8, 0]).unwrap();
        let b = SpikeVector::from_bits(&[0u8, 1]).unwrap();
        assert_eq!(centroid_of(&[a, b]).unwrap().values, vec![0.5, 0.5]);
        assert!(centroid_of(&[]).is_err());
    }

    #[test]
    fn centroid_of_constant_weight_sums_to_m() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pats: Vec<_> = (0..30).map(|_| random_constant_weight(&mut rng, 40, 7)).collect();
        let c = centroid_of(&pats).unwrap();
        assert!((c.sum() - 7.0).abs() < 1e-9);
        for x in pats.iter().take(5) {
            let lhs = sad(&x.to_reals(), &c.values).unwrap();
            let rhs = 2.0 * (7.0 - dot_real(x, &c.values).unwrap());
            assert!((lhs - rhs).abs() < 1e-9);
        }
    }

    #[test]
    fn nearest_centroid_matches_exhaustive_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let centroids: Vec<Centroid> = (0..5)
            .map(|_| {
                let members: Vec<_> = (0..8).map(|_| random_constant_weight(&mut rng, 24, 6)).collect();
                centroid_of(&members).unwrap()
            })
            .collect();
        assert_eq!(nearest_centroid(&random_constant_weight(&mut rng, 24, 6), &centroids[..1]).unwrap(), 0);
        for _ in 0..20 {
            let x = random_constant_weight(&mut rng, 24, 6);
            let dists: Vec<f64> = centroids.iter().map(|c| sad(&x.to_reals(), &c.values).unwrap()).collect();
            let mut best = 0;
            for j in 1..dists.len() {
                if dists[j] < dists[best] {
                    best = j;
                }
            }
            assert_eq!(nearest_centroid(&x, &centroids).unwrap(), best);
        }
        assert!(nearest_centroid(&SpikeVector::zeros(3), &[]).is_err());
    }

    #[test]
    fn nearest_centroid_ties_take_lowest_index() {
        let x = SpikeVector::from_bits(&[1u8, 0]).unwrap();
        let c = Centroid::new(vec![0.5, 0.5]);
        assert_eq!(nearest_centroid(&x, &[c.clone(), c]).unwrap(), 0);
    }

    #[test]
    fn avg_dist_examples() {
        let x = SpikeVector::from_bits(&[1u8, 1, 0]).unwrap();
        let pats = vec![x.clone(), x.clone(), x];
        let cs = ClusterSet::from_assignment(&pats, &[0, 0, 0], 1).unwrap();
        assert_eq!(avg_dist(&pats, &cs.assignments, &cs.centroids).unwrap(), 0.0);

        // Eight 4-bit patterns in two clusters, checked against a hand loop.
        let raw: [[u8; 4]; 8] = [
            [1, 1, 0, 0],
            [1, 0, 1, 0],
            [1, 1, 0, 0],
            [0, 1, 1, 0],
            [0, 0, 1, 1],
            [0, 1, 0, 1],
            [0, 0, 1, 1],
            [1, 0, 0, 1],
        ];
        let pats: Vec<_> = raw.iter().map(|r| SpikeVector::from_bits(r).unwrap()).collect();
        let assign = [0, 0, 0, 0, 1, 1, 1, 1];
        let cs = ClusterSet::from_assignment(&pats, &assign, 2).unwrap();
        let mut cent = [[0.0f64; 4]; 2];
        for (r, &a) in raw.iter().zip(&assign) {
            for j in 0..4 {
                cent[a][j] += f64::from(r[j]) / 4.0;
            }
        }
        let mut total = 0.0;
        for (r, &a) in raw.iter().zip(&assign) {
            for j in 0..4 {
                total += (f64::from(r[j]) - cent[a][j]).abs();
            }
        }
        let expected = total / 8.0;
        assert!((avg_dist(&pats, &cs.assignments, &cs.centroids).unwrap() - expected).abs() < 1e-12);
        assert!((avg_dist_dense(&pats, &assign, &cs.centroids).unwrap() - expected).abs() < 1e-12);

        let mut partial = cs.assignments.clone();
        partial.remove(&3);
        assert!(avg_dist(&pats, &partial, &cs.centroids).is_err());
    }

    #[test]
    fn wt_convergence_examples() {
        assert_eq!(wt_convergence(&[0, 12, 12, 0], 12).unwrap(), 0.0);
        assert!(wt_convergence(&[13], 12).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let w: Vec<u32> = (0..16).map(|_| rng.random_range(0..=12)).collect();
        let mut num = 0.0;
        for &v in &w {
            num += f64::from(v) * (12.0 - f64::from(v));
        }
        let expected = num / (12.0 * 16.0);
        assert!((wt_convergence(&w, 12).unwrap() - expected).abs() < 1e-12);
        // Maximal at w_max / 2 everywhere: value w_max / 4.
        assert!((wt_convergence(&[6; 9], 12).unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn overlap_counts_shared_spikes() {
        let a = SpikeVector::from_indices(10, [1, 3, 5, 7]).unwrap();
        let b = SpikeVector::from_indices(10, [0, 3, 7, 9]).unwrap();
        assert_eq!(a.overlap(&b), 2);
        assert_eq!(a.overlap(&a), 4);
    }
}
