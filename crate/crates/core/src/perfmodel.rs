//! Closed-form performance model of the master/slave tile farm.
//!
//! A run processes `N` points in tiles of `n` points; a tree has `t` points.
//! The slave's overhead per tile is its edge data, `sqrt(n t)` points that
//! travel to the master and back. `r` is the segmentation cost per point
//! over the one-way communication cost per point. With `p` processors (one
//! of them the master) the model predicts
//!
//! ```text
//! e_s = r n / (r n + r sqrt(n t) + sqrt(n t))
//! w_s = (p - 2) / 2 * n
//! P   = (N - w_s) / N
//! S_p = 1 - P + P (p - 1) e_s
//! ```
//!
//! and the master keeps up while `p - 1` stays below
//! `(r n + r sqrt(n t) + sqrt(n t)) / sqrt(n t)`.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ModelInputs {
    pub total_points: f64,
    pub tile_points: f64,
    pub tree_points: f64,
    pub processors: u32,
    pub coeff_ratio: f64,
}

impl ModelInputs {
    /// `n >= 100 t`, `N / n > p >= 2`, `r > 0`, everything finite.
    pub fn validate(&self) -> Result<()> {
        let Self { total_points: big_n, tile_points: n, tree_points: t, processors: p, coeff_ratio: r } = *self;
        for (name, v) in [("total points", big_n), ("tile points", n), ("tree points", t), ("coefficient ratio", r)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::validation(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if n < 100.0 * t {
            return Err(Error::validation(format!("tile points {n} must be at least 100 x tree points {t}")));
        }
        if p < 2 {
            return Err(Error::validation(format!("need at least 2 processors, got {p}")));
        }
        if big_n / n <= p as f64 {
            return Err(Error::validation(format!("tile count {} must exceed processor count {p}", big_n / n)));
        }
        Ok(())
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::validation(format!("{name} must be positive and finite, got {v}")))
    }
}

pub fn boundary_points_per_edge(n: f64, t: f64) -> Result<f64> {
    positive("tile points", n)?;
    positive("tree points", t)?;
    Ok((n * t).sqrt())
}

/// `e_s` from its three ingredients, without the whole-run invariants.
pub fn efficiency(n: f64, t: f64, r: f64) -> Result<f64> {
    positive("coefficient ratio", r)?;
    let b = boundary_points_per_edge(n, t)?;
    Ok(r * n / (r * n + r * b + b))
}

pub fn slave_efficiency(inputs: &ModelInputs) -> Result<f64> {
    inputs.validate()?;
    efficiency(inputs.tile_points, inputs.tree_points, inputs.coeff_ratio)
}

/// Points that cannot be overlapped: the staggered start of `p - 1` slaves.
pub fn serial_workload(n: f64, p: u32) -> Result<f64> {
    check_processors(p)?;
    Ok((p as f64 - 2.0) / 2.0 * n)
}

/// The defining sum `sum_{i=2}^{p-1} (i - 1) / (p - 1) * n`.
pub fn serial_workload_sum(n: f64, p: u32) -> Result<f64> {
    check_processors(p)?;
    let slaves = (p - 1) as f64;
    Ok((2..p).map(|i| (i - 1) as f64 / slaves * n).sum())
}

fn check_processors(p: u32) -> Result<()> {
    if p < 2 {
        return Err(Error::validation(format!("need at least 2 processors, got {p}")));
    }
    Ok(())
}

pub fn parallel_fraction(big_n: f64, n: f64, p: u32) -> Result<f64> {
    positive("total points", big_n)?;
    positive("tile points", n)?;
    if big_n < n {
        return Err(Error::validation(format!("total points {big_n} below tile points {n}")));
    }
    let frac = (big_n - serial_workload(n, p)?) / big_n;
    if frac <= 0.0 {
        return Err(Error::ModelDomain(format!(
            "parallel fraction {frac} is not positive: {p} processors for {} tiles",
            big_n / n
        )));
    }
    Ok(frac)
}

pub fn speedup(inputs: &ModelInputs) -> Result<f64> {
    let e = slave_efficiency(inputs)?;
    let frac = parallel_fraction(inputs.total_points, inputs.tile_points, inputs.processors)?;
    Ok(1.0 - frac + frac * (inputs.processors - 1) as f64 * e)
}

/// Upper bound on `p - 1` for a responsive master.
pub fn max_slaves(n: f64, t: f64, r: f64) -> Result<u64> {
    positive("coefficient ratio", r)?;
    let b = boundary_points_per_edge(n, t)?;
    Ok(((r * n + r * b + b) / b).floor() as u64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CurveRow {
    pub load_tiles: u32,
    pub processors: u32,
    pub efficiency: f64,
    pub parallel_fraction: f64,
    pub speedup: f64,
    pub max_slaves: u64,
}

/// Speedup against processor count for several loads, in tiles of `n` points.
pub fn speedup_curves(loads: &[u32], processors: &[u32], n: f64, t: f64, r: f64) -> Result<Vec<CurveRow>> {
    let bound = max_slaves(n, t, r)?;
    let mut rows = Vec::with_capacity(loads.len() * processors.len());
    for &load in loads {
        for &p in processors {
            let inputs = ModelInputs {
                total_points: load as f64 * n,
                tile_points: n,
                tree_points: t,
                processors: p,
                coeff_ratio: r,
            };
            rows.push(CurveRow {
                load_tiles: load,
                processors: p,
                efficiency: slave_efficiency(&inputs)?,
                parallel_fraction: parallel_fraction(inputs.total_points, n, p)?,
                speedup: speedup(&inputs)?,
                max_slaves: bound,
            });
        }
    }
    Ok(rows)
}

pub fn write_curves_csv<W: Write>(rows: &[CurveRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference(p: u32) -> ModelInputs {
        ModelInputs { total_points: 801.0 * 5e6, tile_points: 5e6, tree_points: 1350.0, processors: p, coeff_ratio: 150.0 }
    }

    #[test]
    fn edge_points() {
        assert!((boundary_points_per_edge(5e6, 1350.0).unwrap() - 82_158.383).abs() < 1e-3);
        assert_eq!(boundary_points_per_edge(7.0, 7.0).unwrap(), 7.0);
        assert_eq!(boundary_points_per_edge(4.0, 1.0).unwrap(), 2.0);
        assert!(boundary_points_per_edge(0.0, 1.0).is_err());
    }

    #[test]
    fn efficiency_examples() {
        assert!((slave_efficiency(&reference(192)).unwrap() - 0.9837).abs() < 1e-4);
        assert!((efficiency(5e6, 1e-12, 150.0).unwrap() - 1.0).abs() < 1e-9);
        // Long hand: sqrt(1e9) = 31622.7766; 1e8 / (1e8 + 3162277.66 + 31622.7766)
        let e = efficiency(1e6, 1000.0, 100.0).unwrap();
        assert!((e - 1e8 / (1e8 + 3_162_277.660_168 + 31_622.776_602)).abs() < 1e-12);
        assert!((e - 0.969_049_5).abs() < 1e-7);
    }

    #[test]
    fn serial_workload_examples() {
        assert_eq!(serial_workload(5e6, 2).unwrap(), 0.0);
        assert_eq!(serial_workload(5e6, 192).unwrap(), 4.75e8);
        assert!(serial_workload(5e6, 1).is_err());
    }

    #[test]
    fn parallel_fraction_examples() {
        assert_eq!(parallel_fraction(5e7, 5e6, 2).unwrap(), 1.0);
        assert!((parallel_fraction(801.0 * 5e6, 5e6, 192).unwrap() - 706.0 / 801.0).abs() < 1e-12);
        assert!((parallel_fraction(10.0, 1.0, 12).unwrap() - 0.5).abs() < 1e-12);
        assert!(matches!(parallel_fraction(10.0, 1.0, 22), Err(Error::ModelDomain(_))));
    }

    #[test]
    fn speedup_examples() {
        assert!((speedup(&reference(192)).unwrap() - 165.70).abs() < 0.05);
        let two = reference(2);
        assert!((speedup(&two).unwrap() - slave_efficiency(&two).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn max_slaves_examples() {
        assert_eq!(max_slaves(5e6, 1350.0, 150.0).unwrap(), 9_279);
        assert_eq!(max_slaves(5e6, 1350.0, 1e-12).unwrap(), 1);
        assert_eq!(max_slaves(500.0, 500.0, 7.0).unwrap(), 15);
    }

    #[test]
    fn invariants_rejected() {
        let mut i = reference(192);
        i.tree_points = 1e5;
        assert!(matches!(speedup(&i), Err(Error::Validation(_))));
        let mut i = reference(900);
        assert!(speedup(&i).is_err());
        i.processors = 1;
        assert!(speedup(&i).is_err());
    }

    #[test]
    fn curves_monotone_and_csv() {
        let ps: Vec<u32> = (1..=12).map(|k| 16 * k).collect();
        let rows = speedup_curves(&[200, 400, 600, 801], &ps, 5e6, 1350.0, 150.0).unwrap();
        assert_eq!(rows.len(), 48);
        for load in rows.chunks(12) {
            assert!(load.windows(2).all(|w| w[1].speedup > w[0].speedup));
        }
        let mut buf = Vec::new();
        write_curves_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("load_tiles,processors,efficiency,parallel_fraction,speedup,max_slaves\n"));
        assert_eq!(text.lines().count(), 49);
    }
}
