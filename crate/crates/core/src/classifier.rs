//! Supervised online classification with clustering-voter (CV) units.
//!
//! Every receptive field feeds a [`CvGroup`] holding one [`CvUnit`] per label.
//! A unit is a dendrite whose binarized output is a vote for its label. During
//! inference all units are enabled and the votes are tallied across groups;
//! during learning only the units of the supervised label are enabled and
//! updated.

use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::dendrite::{Dendrite, SdpParams, WeightMatrix};
use crate::error::{check_len, Error, Result};
use crate::numeric::SpikeVector;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CvUnit {
    pub label: usize,
    pub dendrite: Dendrite,
}

impl CvUnit {
    /// Vote for this unit's label: true iff some segment reaches threshold.
    pub fn vote(&self, context: &SpikeVector) -> Result<bool> {
        check_len(self.dendrite.inputs(), context.len())?;
        Ok(self.dendrite.fires_unchecked(context.active()))
    }
}

/// Binary vote of a CV unit for its label.
pub fn cv_infer(context: &SpikeVector, unit: &CvUnit) -> Result<bool> {
    unit.vote(context)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CvGroup {
    pub rf_index: usize,
    pub units: Vec<CvUnit>,
}

/// Votes per label summed over all groups, and the WTA winner.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VoteTally {
    pub counts: Vec<u32>,
    pub winner: usize,
}

impl VoteTally {
    fn from_counts(counts: Vec<u32>) -> Self {
        let mut winner = 0;
        for (l, &c) in counts.iter().enumerate() {
            if c > counts[winner] {
                winner = l;
            }
        }
        VoteTally { counts, winner }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Network {
    pub groups: Vec<CvGroup>,
    label_count: usize,
    segments: usize,
    inputs: usize,
    params: SdpParams,
}

/// Allocates `rf_count × label_count` fresh CV units with `segments` segments
/// over `inputs`-bit contexts.
pub fn build_network(
    rf_count: usize,
    label_count: usize,
    segments: usize,
    inputs: usize,
    params: SdpParams,
) -> Result<Network> {
    if rf_count == 0 || label_count == 0 || segments == 0 || inputs == 0 {
        return Err(Error::domain("network dimensions must all be at least 1"));
    }
    params.validate()?;
    let groups = (0..rf_count)
        .map(|rf_index| CvGroup {
            rf_index,
            units: (0..label_count)
                .map(|label| CvUnit { label, dendrite: Dendrite::new(inputs, segments, params) })
                .collect(),
        })
        .collect();
    Ok(Network { groups, label_count, segments, inputs, params })
}

impl Network {
    pub fn rf_count(&self) -> usize {
        self.groups.len()
    }

    pub fn label_count(&self) -> usize {
        self.label_count
    }

    pub fn segments(&self) -> usize {
        self.segments
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn params(&self) -> &SdpParams {
        &self.params
    }

    pub fn unit_count(&self) -> usize {
        self.rf_count() * self.label_count
    }

    /// Total synapse count: `rf_count × labels × segments × inputs`.
    pub fn synapse_count(&self) -> usize {
        self.unit_count() * self.segments * self.inputs
    }

    pub fn unit(&self, rf: usize, label: usize) -> &CvUnit {
        &self.groups[rf].units[label]
    }

    fn check_contexts(&self, contexts: &[SpikeVector]) -> Result<()> {
        check_len(self.rf_count(), contexts.len())?;
        for c in contexts {
            check_len(self.inputs, c.len())?;
        }
        Ok(())
    }

    /// Per-group vote vectors (one bool per label).
    pub fn votes(&self, contexts: &[SpikeVector]) -> Result<Vec<Vec<bool>>> {
        self.check_contexts(contexts)?;
        Ok(self
            .groups
            .par_iter()
            .zip(contexts.par_iter())
            .map(|(g, ctx)| g.units.iter().map(|u| u.dendrite.fires_unchecked(ctx.active())).collect())
            .collect())
    }

    /// Inference with every label line active.
    pub fn classify(&self, contexts: &[SpikeVector]) -> Result<(usize, VoteTally)> {
        let votes = self.votes(contexts)?;
        let mut counts = vec![0u32; self.label_count];
        for g in &votes {
            for (c, &v) in counts.iter_mut().zip(g) {
                *c += u32::from(v);
            }
        }
        let tally = VoteTally::from_counts(counts);
        Ok((tally.winner, tally))
    }

    /// Predicts, then (if `learn`) updates only the units for `label`.
    /// Returns the prediction made before any update.
    pub fn supervise(&mut self, contexts: &[SpikeVector], label: usize, learn: bool) -> Result<(usize, VoteTally)> {
        if label >= self.label_count {
            return Err(Error::domain(format!("label {label} outside 0..{}", self.label_count)));
        }
        let prediction = self.classify(contexts)?;
        if learn {
            self.learn(contexts, label)?;
        }
        Ok(prediction)
    }

    /// Update step alone: each group's unit for `label` runs inference with
    /// its label line high and applies the weight update.
    pub fn learn(&mut self, contexts: &[SpikeVector], label: usize) -> Result<()> {
        if label >= self.label_count {
            return Err(Error::domain(format!("label {label} outside 0..{}", self.label_count)));
        }
        self.check_contexts(contexts)?;
        self.groups
            .par_iter_mut()
            .zip(contexts.par_iter())
            .try_for_each(|(g, ctx)| g.units[label].dendrite.step(ctx, true, true).map(|_| ()))
    }

    /// Applies the update for one group only; used to check order independence.
    pub fn learn_group(&mut self, rf: usize, context: &SpikeVector, label: usize) -> Result<()> {
        let unit = self
            .groups
            .get_mut(rf)
            .and_then(|g| g.units.get_mut(label))
            .ok_or_else(|| Error::domain(format!("no unit for rf {rf} label {label}")))?;
        unit.dendrite.step(context, true, true).map(|_| ())
    }

    /// Writes `manifest.txt` and `units.bin` (all unit weight matrices,
    /// group-major then label order) into `dir`.
    pub fn save(&self, dir: &Path) -> std::io::Result<()> {
        fs::create_dir_all(dir)?;
        let p = &self.params;
        let manifest = format!(
            "rf_count={}\nlabels={}\nsegments={}\ninputs={}\ncapture={}\nbackoff={}\nsearch={}\nw_max={}\nw_0={}\nthreshold={}\nscale_denominator={}\n",
            self.rf_count(),
            self.label_count,
            self.segments,
            self.inputs,
            p.capture,
            p.backoff,
            p.search,
            p.w_max,
            p.w_0,
            p.threshold,
            p.scale_denominator
        );
        fs::write(dir.join("manifest.txt"), manifest)?;
        let mut out = BufWriter::new(fs::File::create(dir.join("units.bin"))?);
        for g in &self.groups {
            for u in &g.units {
                u.dendrite.weights.write_binary(&mut out)?;
            }
        }
        out.flush()
    }

    pub fn load(dir: &Path) -> Result<Network> {
        let text = fs::read_to_string(dir.join("manifest.txt")).map_err(|e| Error::domain(format!("manifest: {e}")))?;
        let mut kv = std::collections::HashMap::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::domain(format!("bad manifest line '{line}'")))?;
            let v: u64 = v.trim().parse().map_err(|_| Error::domain(format!("bad manifest value '{line}'")))?;
            kv.insert(k.trim().to_string(), v);
        }
        let get = |k: &str| kv.get(k).copied().ok_or_else(|| Error::domain(format!("manifest lacks {k}")));
        let small = |k: &str| get(k).and_then(|v| u32::try_from(v).map_err(|_| Error::domain(format!("{k} overflows"))));
        let params = SdpParams::new(
            small("capture")?,
            small("backoff")?,
            small("search")?,
            small("w_max")?,
            small("w_0")?,
            get("threshold")?,
            small("scale_denominator")?,
        )?;
        let mut net = build_network(
            get("rf_count")? as usize,
            get("labels")? as usize,
            get("segments")? as usize,
            get("inputs")? as usize,
            params,
        )?;
        let file = fs::File::open(dir.join("units.bin")).map_err(|e| Error::domain(format!("units.bin: {e}")))?;
        let mut input = BufReader::new(file);
        for g in &mut net.groups {
            for u in &mut g.units {
                let w = WeightMatrix::read_binary(&mut input)?;
                check_len(u.dendrite.inputs(), w.rows())?;
                check_len(u.dendrite.segments(), w.cols())?;
                u.dendrite.weights = w;
            }
        }
        Ok(net)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoders::{rf_extract, two_rail, PixelImage, RfEncoding};

    fn params(threshold: u64) -> SdpParams {
        SdpParams::new(1, 1, 0, 12, 8, threshold, 1).unwrap()
    }

    #[test]
    fn mnist_shape_and_cost() {
        let p = params(60);
        let net = build_network(576, 10, 16, 18, p).unwrap();
        assert_eq!(net.unit_count(), 5760);
        assert_eq!(net.synapse_count(), 576 * 10 * 16 * 18);
        let n8 = build_network(576, 10, 8, 18, p).unwrap().synapse_count();
        let n24 = build_network(576, 10, 24, 18, p).unwrap().synapse_count();
        assert_eq!(n24 - net.synapse_count(), net.synapse_count() - n8);
        let tiny = build_network(1, 1, 1, 4, p).unwrap();
        assert_eq!(tiny.unit(0, 0).dendrite.weights.cols(), 1);
        assert!(build_network(0, 10, 16, 18, p).is_err());
    }

    #[test]
    fn fresh_unit_votes_by_initial_potential() {
        let ctx = two_rail(&[true, false, true, false, false, true, true, true, false]);
        let net = build_network(1, 1, 4, 18, params(72)).unwrap();
        assert!(cv_infer(&ctx, net.unit(0, 0)).unwrap());
        let deaf = build_network(1, 1, 4, 18, params(73)).unwrap();
        assert!(!cv_infer(&ctx, deaf.unit(0, 0)).unwrap());
        assert!(cv_infer(&SpikeVector::zeros(17), net.unit(0, 0)).is_err());
    }

    #[test]
    fn single_voter_wins() {
        let mut net = build_network(1, 3, 2, 4, params(20)).unwrap();
        let ctx = SpikeVector::from_indices(4, [0, 1, 2]).unwrap();
        // Weights 8 everywhere: potential 24 ≥ 20, all three vote; silence labels 0 and 1.
        for l in 0..2 {
            for j in 0..2 {
                for i in 0..4 {
                    net.groups[0].units[l].dendrite.weights.set(i, j, 0);
                }
            }
        }
        let (pred, tally) = net.classify(&[ctx]).unwrap();
        assert_eq!(pred, 2);
        assert_eq!(tally.counts, vec![0, 0, 1]);
    }

    #[test]
    fn supervise_predicts_before_learning_and_isolates_labels() {
        let enc = RfEncoding { image_rows: 6, image_cols: 6, rf_size: 5, ..RfEncoding::mnist() };
        let mut img = PixelImage::blank(6, 6);
        img.set(2, 2, true);
        img.set(4, 0, true);
        let ctx = rf_extract(&img, &enc).unwrap();
        let mut net = build_network(enc.rf_count(), 4, 3, 18, params(60)).unwrap();
        let frozen = net.clone();
        let (p_off, t_off) = frozen.clone().supervise(&ctx, 2, false).unwrap();
        let (p_on, t_on) = net.supervise(&ctx, 2, true).unwrap();
        assert_eq!((p_off, &t_off), (p_on, &t_on));
        for (g, fg) in net.groups.iter().zip(&frozen.groups) {
            for (u, fu) in g.units.iter().zip(&fg.units) {
                if u.label == 2 {
                    assert_ne!(u, fu);
                } else {
                    assert_eq!(u, fu);
                }
            }
        }
        assert!(net.supervise(&ctx, 4, true).is_err());
    }

    #[test]
    fn group_update_order_is_irrelevant() {
        let enc = RfEncoding { image_rows: 8, image_cols: 8, rf_size: 5, ..RfEncoding::mnist() };
        let mut img = PixelImage::blank(8, 8);
        for (r, c) in [(0, 0), (2, 4), (4, 6), (6, 2), (7, 7)] {
            img.set(r, c, true);
        }
        let ctx = rf_extract(&img, &enc).unwrap();
        let mut a = build_network(enc.rf_count(), 2, 3, 18, params(50)).unwrap();
        let mut b = a.clone();
        a.learn(&ctx, 1).unwrap();
        for rf in (0..enc.rf_count()).rev() {
            b.learn_group(rf, &ctx[rf], 1).unwrap();
        }
        assert_eq!(a, b);
    }

    #[test]
    fn checkpoint_round_trip() {
        let dir = std::env::temp_dir().join(format!("cv-ckpt-{}", std::process::id()));
        let mut net = build_network(3, 2, 2, 18, params(50)).unwrap();
        let ctx: Vec<_> = (0..3).map(|i| two_rail(&[i % 2 == 0; 9])).collect();
        net.learn(&ctx, 1).unwrap();
        net.save(&dir).unwrap();
        assert_eq!(Network::load(&dir).unwrap(), net);
        fs::remove_dir_all(&dir).unwrap();
    }
}
