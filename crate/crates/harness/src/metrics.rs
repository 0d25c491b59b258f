//! Metric series and their CSV form.

use std::fmt::Write as _;

/// Weight convergence after a clustering step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub wt_convergence: f64,
    /// Whether the dendrite produced a winner for this input.
    pub fired: bool,
}

/// Misclassifications over one block of consecutive inputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockRecord {
    pub block: usize,
    pub start: usize,
    /// Inputs in the block; only the last block may be short.
    pub len: usize,
    pub errors: usize,
}

impl BlockRecord {
    pub fn error_rate(&self) -> f64 {
        self.errors as f64 / self.len as f64
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TallyRecord {
    pub step: usize,
    pub label: usize,
    pub predicted: usize,
    pub counts: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricsSeries {
    pub steps: Vec<StepRecord>,
    pub blocks: Vec<BlockRecord>,
    pub tallies: Vec<TallyRecord>,
    /// Named scalar results (num_weights, avg_dist, tail_error, ...).
    pub summary: Vec<(String, String)>,
}

impl MetricsSeries {
    pub fn push_summary(&mut self, key: &str, value: impl ToString) {
        self.summary.push((key.to_string(), value.to_string()));
    }

    pub fn summary_value(&self, key: &str) -> Option<&str> {
        self.summary.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn summary_f64(&self, key: &str) -> Option<f64> {
        self.summary_value(key).and_then(|v| v.parse().ok())
    }

    pub fn total_errors(&self) -> usize {
        self.blocks.iter().map(|b| b.errors).sum()
    }

    /// The step series for clustering runs, the block series otherwise.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        if self.blocks.is_empty() {
            out.push_str("step,wt_convergence,fired\n");
            for r in &self.steps {
                let _ = writeln!(out, "{},{},{}", r.step, r.wt_convergence, u8::from(r.fired));
            }
        } else {
            out.push_str("block,start,len,errors,error_rate\n");
            for b in &self.blocks {
                let _ = writeln!(out, "{},{},{},{},{}", b.block, b.start, b.len, b.errors, b.error_rate());
            }
        }
        out
    }

    pub fn summary_csv(&self) -> String {
        let mut out = String::from("key,value\n");
        for (k, v) in &self.summary {
            let _ = writeln!(out, "{k},{v}");
        }
        out
    }

    pub fn tallies_csv(&self) -> String {
        let mut out = String::from("step,label,predicted,counts\n");
        for t in &self.tallies {
            let counts: Vec<String> = t.counts.iter().map(u32::to_string).collect();
            let _ = writeln!(out, "{},{},{},{}", t.step, t.label, t.predicted, counts.join(" "));
        }
        out
    }
}

/// Trailing moving average over `window` records (shorter at the start).
pub fn smooth(values: &[f64], window: usize) -> Vec<f64> {
    let window = window.max(1);
    let mut out = Vec::with_capacity(values.len());
    let mut sum = 0.0;
    for (i, &v) in values.iter().enumerate() {
        sum += v;
        if i >= window {
            sum -= values[i - window];
        }
        out.push(sum / (i + 1).min(window) as f64);
    }
    out
}

/// Steps after `trigger` until the smoothed convergence, having risen after
/// the trigger, first falls back within `factor` times its value just before
/// the trigger. `None` when it never does.
pub fn reconvergence_steps(series: &[f64], trigger: usize, window: usize, factor: f64) -> Option<usize> {
    if trigger == 0 || trigger >= series.len() {
        return None;
    }
    let s = smooth(series, window);
    let band = factor * s[trigger - 1];
    let peak = trigger + s[trigger..].iter().enumerate().fold(0, |best, (i, &v)| if v > s[trigger + best] { i } else { best });
    (peak..s.len()).find(|&i| s[i] <= band).map(|i| i - trigger)
}

/// Inputs after `trigger` until a block's error rate is within `factor`
/// times the mean of the `trailing` blocks that end at the trigger.
pub fn block_recovery(blocks: &[BlockRecord], trigger: usize, trailing: usize, factor: f64) -> Option<usize> {
    let before: Vec<f64> = blocks.iter().filter(|b| b.start + b.len <= trigger).map(BlockRecord::error_rate).collect();
    if before.len() < trailing || trailing == 0 {
        return None;
    }
    let mean = before[before.len() - trailing..].iter().sum::<f64>() / trailing as f64;
    let after: Vec<&BlockRecord> = blocks.iter().filter(|b| b.start >= trigger).collect();
    // Skip the immediate disruption: look for recovery after the worst block.
    let worst = after
        .iter()
        .enumerate()
        .fold(0, |best, (i, b)| if b.error_rate() > after[best].error_rate() { i } else { best });
    after[worst..]
        .iter()
        .find(|b| b.error_rate() <= factor * mean)
        .map(|b| b.start + b.len - trigger)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smoothing_window() {
        assert_eq!(smooth(&[2.0, 4.0, 6.0, 8.0], 2), vec![2.0, 3.0, 5.0, 7.0]);
        assert_eq!(smooth(&[1.0, 3.0], 10), vec![1.0, 2.0]);
    }

    #[test]
    fn reconvergence_after_a_bump() {
        let mut s = vec![0.1; 100];
        s.extend(vec![1.0; 20]);
        s.extend((0..50).map(|i| 1.0 - i as f64 * 0.02));
        s.extend(vec![0.15; 30]);
        let r = reconvergence_steps(&s, 100, 1, 2.0).unwrap();
        assert_eq!(r, 60);
        assert!(s[100 + r] <= 0.2 + 1e-12);
        assert!(s[100 + r - 1] > 0.2);
        assert_eq!(reconvergence_steps(&vec![0.1; 50].into_iter().chain(vec![1.0; 50]).collect::<Vec<_>>(), 50, 1, 2.0), None);
    }

    fn blocks(rates: &[usize]) -> Vec<BlockRecord> {
        rates
            .iter()
            .enumerate()
            .map(|(i, &e)| BlockRecord { block: i, start: i * 100, len: 100, errors: e })
            .collect()
    }

    #[test]
    fn block_recovery_measures_from_trigger() {
        let b = blocks(&[50, 10, 10, 10, 60, 40, 20, 14, 10]);
        assert_eq!(block_recovery(&b, 400, 3, 1.5), Some(400));
        assert_eq!(block_recovery(&b, 400, 5, 1.5), None);
        let never = blocks(&[10, 10, 60, 60]);
        assert_eq!(block_recovery(&never, 200, 2, 1.5), None);
    }

    #[test]
    fn csv_shapes() {
        let mut m = MetricsSeries::default();
        m.steps.push(StepRecord { step: 0, wt_convergence: 0.5, fired: true });
        m.push_summary("num_weights", 2496);
        assert_eq!(m.to_csv(), "step,wt_convergence,fired\n0,0.5,1\n");
        assert_eq!(m.summary_f64("num_weights"), Some(2496.0));
        m.blocks = blocks(&[3, 1]);
        assert_eq!(m.total_errors(), 4);
        assert!(m.to_csv().starts_with("block,start,len,errors,error_rate\n0,0,100,3,0.03\n"));
    }
}
