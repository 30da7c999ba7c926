//! Runtime scaling measurements.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::pointdata::PointCloud;

use super::SegmentationStats;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchmarkRow {
    pub n: usize,
    pub m: usize,
    pub preprocess_secs: f64,
    pub sort_secs: f64,
    pub loop_secs: f64,
    pub total_secs: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct BenchmarkTable {
    pub rows: Vec<BenchmarkRow>,
}

impl BenchmarkTable {
    /// Log-log slope of total runtime against input size.
    pub fn total_slope(&self) -> Result<f64> {
        loglog_slope(self.rows.iter().map(|r| (r.n as f64, r.total_secs)))
    }

    pub fn loop_slope(&self) -> Result<f64> {
        loglog_slope(self.rows.iter().map(|r| (r.n as f64, r.loop_secs)))
    }
}

/// Runs `segmenter` on each cloud and records its stage timings. The best of
/// `repeats` runs is kept for every size.
pub fn benchmark_runtime<F>(clouds: &[PointCloud], repeats: usize, mut segmenter: F) -> Result<BenchmarkTable>
where
    F: FnMut(&PointCloud) -> Result<SegmentationStats>,
{
    let mut rows = Vec::with_capacity(clouds.len());
    for cloud in clouds {
        let mut best: Option<SegmentationStats> = None;
        for _ in 0..repeats.max(1) {
            let s = segmenter(cloud)?;
            if best.as_ref().is_none_or(|b| s.total_secs() < b.total_secs()) {
                best = Some(s);
            }
        }
        let s = best.expect("at least one repeat");
        rows.push(BenchmarkRow {
            n: cloud.len(),
            m: s.m,
            preprocess_secs: s.preprocess_secs,
            sort_secs: s.sort_secs,
            loop_secs: s.loop_secs,
            total_secs: s.total_secs(),
        });
    }
    Ok(BenchmarkTable { rows })
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(samples: impl IntoIterator<Item = (f64, f64)>) -> Result<f64> {
    let pts: Vec<(f64, f64)> = samples
        .into_iter()
        .map(|(x, y)| {
            if x > 0.0 && y > 0.0 {
                Ok((x.ln(), y.ln()))
            } else {
                Err(Error::validation(format!("log-log fit needs positive samples, got ({x}, {y})")))
            }
        })
        .collect::<Result<_>>()?;
    if pts.len() < 2 {
        return Err(Error::validation("log-log fit needs at least two samples"));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::validation("log-log fit needs distinct sizes"));
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Ok(sxy / sxx)
}
