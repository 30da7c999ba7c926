//! Forest-level statistics on segmentation output: the false-positive trend
//! along tile edges, crown-class extrapolation with t bounds, and a
//! two-component normal mixture of tree heights.

mod bias;
mod crownclass;
mod histogram;
mod mixture;
mod tdist;

use std::io::Write;

use serde::Serialize;

use crate::error::Result;

pub use bias::{adjust_count, bias_experiment, fit_line, shared_edge_km, BiasExperimentResult, BiasPoint, LineFit};
pub use crownclass::{crown_class_estimate, ClassRow, ClassSample, CrownClassTable};
pub use histogram::{height_histogram, local_maxima, HistogramBin, HISTOGRAM_MIN_HEIGHT};
pub use mixture::{fit_mixture, single_normal_log_likelihood, Component, MixtureFit};
pub use tdist::{incomplete_beta, students_t_cdf, students_t_quantile};

/// Writes `rows` as CSV with a header row.
pub fn write_csv<W: Write, T: Serialize>(rows: impl IntoIterator<Item = T>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
