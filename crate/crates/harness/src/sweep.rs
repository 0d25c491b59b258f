//! Grid sweeps over configuration keys.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::config::{parse_pairs, ExperimentConfig, Mode};
use crate::error::{HarnessError, Result};
use crate::runner::run;

/// One swept key and its candidate values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Axis {
    pub key: String,
    pub values: Vec<String>,
}

/// Parses `key=v1,v2,...`.
pub fn parse_axis(s: &str) -> Result<Axis> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| HarnessError::config(format!("grid axis '{s}' is not key=v1,v2,...")))?;
    let values: Vec<String> = v.split(',').map(|x| x.trim().to_string()).filter(|x| !x.is_empty()).collect();
    if values.is_empty() {
        return Err(HarnessError::config(format!("grid axis '{}' has no values", k.trim())));
    }
    Ok(Axis { key: k.trim().to_string(), values })
}

/// Grid file: one `key=v1,v2,...` axis per line.
pub fn load_grid(path: &Path) -> Result<Vec<Axis>> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    parse_pairs(&text, path)?
        .into_iter()
        .map(|(k, v)| parse_axis(&format!("{k}={v}")))
        .collect()
}

/// Cartesian product in row-major order (last axis varies fastest).
pub fn grid_points(axes: &[Axis]) -> Vec<Vec<(String, String)>> {
    axes.iter().fold(vec![Vec::new()], |acc, axis| {
        acc.into_iter()
            .flat_map(|prefix| {
                axis.values.iter().map(move |v| {
                    let mut p = prefix.clone();
                    p.push((axis.key.clone(), v.clone()));
                    p
                })
            })
            .collect()
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    /// Position in the unsorted grid.
    pub index: usize,
    pub point: Vec<(String, String)>,
    pub outcome: std::result::Result<Vec<(String, String)>, String>,
}

impl SweepRow {
    pub fn primary(&self, key: &str) -> Option<f64> {
        self.outcome
            .as_ref()
            .ok()
            .and_then(|s| s.iter().find(|(k, _)| k == key))
            .and_then(|(_, v)| v.parse().ok())
    }
}

/// The metric a sweep is ranked by: `avg_dist` for clustering, `tail_error`
/// for classification. Lower is better.
pub fn primary_metric(mode: Mode) -> &'static str {
    match mode {
        Mode::Cluster => "avg_dist",
        Mode::Classify => "tail_error",
    }
}

/// Runs every grid point on top of `base`. Failed points become rows with
/// an error message. Rows are sorted by the primary metric (failures last,
/// grid order on ties).
pub fn sweep(base: &[(String, String)], axes: &[Axis]) -> Result<(Vec<SweepRow>, &'static str)> {
    let base_cfg = ExperimentConfig::from_pairs(base)?;
    let metric = primary_metric(base_cfg.mode);
    let points = grid_points(axes);
    let mut rows: Vec<SweepRow> = points
        .into_par_iter()
        .enumerate()
        .map(|(index, point)| {
            let mut pairs = base.to_vec();
            pairs.extend(point.iter().cloned());
            let outcome = ExperimentConfig::from_pairs(&pairs)
                .and_then(|cfg| {
                    if cfg.mode != base_cfg.mode {
                        return Err(HarnessError::config("a sweep cannot change mode"));
                    }
                    run(&cfg)
                })
                .map(|out| out.metrics().summary.clone())
                .map_err(|e| e.to_string());
            SweepRow { index, point, outcome }
        })
        .collect();
    rows.sort_by(|a, b| match (a.primary(metric), b.primary(metric)) {
        (Some(x), Some(y)) => x.total_cmp(&y).then(a.index.cmp(&b.index)),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => a.index.cmp(&b.index),
    });
    Ok((rows, metric))
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// `sweep.csv`: grid keys, then status, then the union of summary keys.
pub fn sweep_csv(axes: &[Axis], rows: &[SweepRow]) -> String {
    let mut metric_keys: Vec<String> = Vec::new();
    for r in rows {
        if let Ok(s) = &r.outcome {
            for (k, _) in s {
                if !metric_keys.contains(k) {
                    metric_keys.push(k.clone());
                }
            }
        }
    }
    let mut out = String::new();
    let mut header: Vec<String> = axes.iter().map(|a| a.key.clone()).collect();
    header.push("status".into());
    header.extend(metric_keys.iter().cloned());
    out.push_str(&header.join(","));
    out.push('\n');
    for r in rows {
        let mut fields: Vec<String> = r.point.iter().map(|(_, v)| csv_field(v)).collect();
        match &r.outcome {
            Ok(summary) => {
                fields.push("ok".into());
                for k in &metric_keys {
                    fields.push(summary.iter().find(|(sk, _)| sk == k).map_or(String::new(), |(_, v)| csv_field(v)));
                }
            }
            Err(e) => {
                fields.push(csv_field(&format!("error: {e}")));
                fields.extend(metric_keys.iter().map(|_| String::new()));
            }
        }
        let _ = writeln!(out, "{}", fields.join(","));
    }
    out
}
