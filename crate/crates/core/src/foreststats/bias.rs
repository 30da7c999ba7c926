use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::orchestrator::{run_distributed, MemorySource, RunOptions};
use crate::pointdata::{partition_with_grid, PointCloud};
use crate::segmentation::{segment, SegmentationParams};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares of `y` on `x`.
pub fn fit_line(x: &[f64], y: &[f64]) -> Result<LineFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::validation("a line fit needs at least two paired samples"));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return Err(Error::validation("x values must not all be equal"));
    }
    let slope = sxy / sxx;
    // A flat response is fitted exactly.
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) };
    Ok(LineFit { slope, intercept: my - slope * mx, r_squared })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BiasPoint {
    pub grid: u32,
    pub shared_edge_km: f64,
    pub detected: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BiasExperimentResult {
    pub points: Vec<BiasPoint>,
    pub fit: LineFit,
}

/// Total shared edge length of a `k x k` partition of a square block.
pub fn shared_edge_km(k: u32, block_side_m: f64) -> f64 {
    2.0 * (k.max(1) - 1) as f64 * block_side_m / 1000.0
}

/// Counts detected trees on `k x k` partitions of the square block with
/// south-west corner `origin`, then regresses count on shared edge length.
/// `k = 1` is the sequential run.
pub fn bias_experiment(
    block: &PointCloud,
    origin: (f64, f64),
    block_side: f64,
    grids: &[u32],
    params: &SegmentationParams,
    opts: &RunOptions,
) -> Result<BiasExperimentResult> {
    if grids.len() < 2 {
        return Err(Error::validation("the bias experiment needs at least two partition patterns"));
    }
    let mut points = Vec::with_capacity(grids.len());
    for &k in grids {
        if k == 0 {
            return Err(Error::validation("partition grid must be at least 1 x 1"));
        }
        let detected = if k == 1 {
            segment(block, params)?.crowns.len() as u64
        } else {
            let side = block_side / k as f64;
            let (map, tiles) = partition_with_grid(block, origin, k, k, side, params.cell_size)?;
            let run = run_distributed(&map, Arc::new(MemorySource::new(tiles)), params, opts)?;
            run.crowns.len() as u64
        };
        points.push(BiasPoint { grid: k, shared_edge_km: shared_edge_km(k, block_side), detected });
    }
    let x: Vec<f64> = points.iter().map(|p| p.shared_edge_km).collect();
    let y: Vec<f64> = points.iter().map(|p| p.detected as f64).collect();
    let fit = fit_line(&x, &y)?;
    Ok(BiasExperimentResult { points, fit })
}

/// Removes the expected false positives along `edge_km` of shared edges.
pub fn adjust_count(grand_total: u64, edge_km: f64, slope_per_km: f64) -> Result<u64> {
    if !(edge_km >= 0.0 && slope_per_km >= 0.0) {
        return Err(Error::validation("edge length and slope must be non-negative"));
    }
    let fp = (slope_per_km * edge_km).round() as u64;
    Ok(grand_total.saturating_sub(fp))
}
