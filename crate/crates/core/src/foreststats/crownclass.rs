use serde::Serialize;

use super::tdist::students_t_quantile;
use crate::error::{Error, Result};

/// Per-plot fractions of one crown class (existing trees over detected total).
#[derive(Clone, Debug, PartialEq)]
pub struct ClassSample {
    pub class: String,
    pub fractions: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassRow {
    pub class: String,
    pub mean_fraction: f64,
    pub sd: f64,
    /// 95% t half-width as a percentage of the mean.
    pub half_width_pct: f64,
    pub estimate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CrownClassTable {
    pub rows: Vec<ClassRow>,
    pub all: ClassRow,
    pub plots: usize,
    pub degrees_of_freedom: usize,
}

impl CrownClassTable {
    /// Class rows followed by the all-class row.
    pub fn iter(&self) -> impl Iterator<Item = &ClassRow> {
        self.rows.iter().chain(std::iter::once(&self.all))
    }
}

fn summarize(s: &ClassSample, t: f64, grand_total: f64) -> Result<ClassRow> {
    let n = s.fractions.len() as f64;
    if s.fractions.iter().any(|f| !(f.is_finite() && *f >= 0.0)) {
        return Err(Error::validation(format!("class {}: fractions must be finite and non-negative", s.class)));
    }
    let mean = s.fractions.iter().sum::<f64>() / n;
    let var = s.fractions.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let sd = var.sqrt();
    let half_width_pct = if mean > 0.0 { 100.0 * t * sd / n.sqrt() / mean } else { 0.0 };
    Ok(ClassRow { class: s.class.clone(), mean_fraction: mean, sd, half_width_pct, estimate: grand_total * mean })
}

/// Mean fraction, 95% t bound and extrapolated count for each class. The
/// all-class row is its own sample, not the sum of the class rows.
pub fn crown_class_estimate(classes: &[ClassSample], all: &ClassSample, grand_total: f64) -> Result<CrownClassTable> {
    let plots = all.fractions.len();
    if plots < 2 {
        return Err(Error::DegreesOfFreedom(format!("need at least 2 plots, got {plots}")));
    }
    if let Some(bad) = classes.iter().find(|c| c.fractions.len() != plots) {
        return Err(Error::validation(format!(
            "class {} has {} plots, expected {plots}",
            bad.class,
            bad.fractions.len()
        )));
    }
    if !(grand_total.is_finite() && grand_total >= 0.0) {
        return Err(Error::validation("grand total must be non-negative"));
    }
    let df = plots - 1;
    let t = students_t_quantile(0.975, df as f64)?;
    let rows = classes.iter().map(|c| summarize(c, t, grand_total)).collect::<Result<Vec<_>>>()?;
    Ok(CrownClassTable { rows, all: summarize(all, t, grand_total)?, plots, degrees_of_freedom: df })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(name: &str, f: &[f64]) -> ClassSample {
        ClassSample { class: name.into(), fractions: f.to_vec() }
    }

    #[test]
    fn constant_fractions_have_zero_width() {
        let t = crown_class_estimate(&[sample("a", &[0.2; 5])], &sample("all", &[1.0; 5]), 1000.0).unwrap();
        assert_eq!(t.rows[0].half_width_pct, 0.0);
        assert!((t.rows[0].estimate - 200.0).abs() < 1e-9);
        assert_eq!(t.degrees_of_freedom, 4);
    }

    #[test]
    fn two_plot_bound() {
        // Mean 0.5, sd sqrt(0.02), t(0.975, 1) = 12.7062.
        let t = crown_class_estimate(&[], &sample("all", &[0.4, 0.6]), 10.0).unwrap();
        let expect = 100.0 * 12.706_205 * 0.02f64.sqrt() / 2f64.sqrt() / 0.5;
        assert!((t.all.half_width_pct - expect).abs() < 1e-3);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            crown_class_estimate(&[], &sample("all", &[1.0]), 1.0),
            Err(Error::DegreesOfFreedom(_))
        ));
        assert!(crown_class_estimate(&[sample("a", &[0.1])], &sample("all", &[1.0, 1.0]), 1.0).is_err());
        assert!(crown_class_estimate(&[sample("a", &[-0.1, 0.1])], &sample("all", &[1.0, 1.0]), 1.0).is_err());
    }
}
