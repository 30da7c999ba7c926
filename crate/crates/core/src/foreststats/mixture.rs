use serde::Serialize;

use crate::error::{Error, Result};

const MAX_ITERATIONS: usize = 500;
const TOLERANCE: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Component {
    pub weight: f64,
    pub mean: f64,
    pub sd: f64,
}

impl Component {
    fn ln_density(&self, x: f64) -> f64 {
        let z = (x - self.mean) / self.sd;
        self.weight.ln() - 0.5 * z * z - self.sd.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MixtureFit {
    /// Descending mean.
    pub components: [Component; 2],
    pub log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Log-likelihood before each M-step.
    #[serde(skip)]
    pub trace: Vec<f64>,
}

fn log_sum_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    (m, (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n).sqrt())
}

/// Log-likelihood of a single normal fitted by maximum likelihood.
pub fn single_normal_log_likelihood(xs: &[f64]) -> f64 {
    let (m, sd) = mean_sd(xs);
    let c = Component { weight: 1.0, mean: m, sd };
    xs.iter().map(|&x| c.ln_density(x)).sum()
}

/// Two-component univariate normal mixture by expectation-maximization.
///
/// Starts from the two halves of the sorted sample and stops when an
/// iteration gains less than 1e-8 in log-likelihood, or after 500.
pub fn fit_mixture(heights: &[f64]) -> Result<MixtureFit> {
    if heights.len() < 10 {
        return Err(Error::validation(format!("need at least 10 heights, got {}", heights.len())));
    }
    if heights.iter().any(|h| !h.is_finite()) {
        return Err(Error::validation("heights must be finite"));
    }
    let mut sorted = heights.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (_, spread) = mean_sd(&sorted);
    let floor = 1e-6 * spread;
    if spread == 0.0 {
        return Err(Error::SingularComponent("all heights are equal".into()));
    }
    let half = sorted.len() / 2;
    let init = |xs: &[f64], weight: f64| {
        let (mean, sd) = mean_sd(xs);
        Component { weight, mean, sd: sd.max(floor) }
    };
    let w0 = half as f64 / sorted.len() as f64;
    let mut comps = [init(&sorted[..half], w0), init(&sorted[half..], 1.0 - w0)];

    let n = heights.len();
    let mut resp = vec![0.0; n];
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        // E-step: responsibility of component 0, and the current likelihood.
        let mut ll = 0.0;
        for (r, &x) in resp.iter_mut().zip(heights) {
            let (a, b) = (comps[0].ln_density(x), comps[1].ln_density(x));
            let total = log_sum_exp(a, b);
            *r = (a - total).exp();
            ll += total;
        }
        if let Some(&prev) = trace.last() {
            if ll - prev < TOLERANCE {
                trace.push(ll);
                converged = true;
                break;
            }
        }
        trace.push(ll);
        iterations += 1;

        // M-step.
        for (k, comp) in comps.iter_mut().enumerate() {
            let w = |r: f64| if k == 0 { r } else { 1.0 - r };
            let nk: f64 = resp.iter().map(|&r| w(r)).sum();
            if nk <= f64::EPSILON * n as f64 {
                return Err(Error::SingularComponent(format!("component {k} lost all its weight")));
            }
            let mean = resp.iter().zip(heights).map(|(&r, &x)| w(r) * x).sum::<f64>() / nk;
            let var = resp.iter().zip(heights).map(|(&r, &x)| w(r) * (x - mean).powi(2)).sum::<f64>() / nk;
            if var.sqrt() < floor {
                return Err(Error::SingularComponent(format!("component {k} collapsed onto one value")));
            }
            *comp = Component { weight: nk / n as f64, mean, sd: var.sqrt() };
        }
    }
    if comps[1].mean > comps[0].mean {
        comps.swap(0, 1);
    }
    let log_likelihood = *trace.last().expect("at least one E-step");
    Ok(MixtureFit { components: comps, log_likelihood, iterations, converged, trace })
}
