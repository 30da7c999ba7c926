use serde::Serialize;

use crate::error::{Error, Result};

/// Heights below this are not trees for the purposes of the histogram.
pub const HISTOGRAM_MIN_HEIGHT: f64 = 5.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HistogramBin {
    pub lower: f64,
    pub upper: f64,
    pub count: u64,
}

/// Counts heights of at least 5 m in bins `[k w, (k + 1) w)`, covering the
/// occupied range without gaps.
pub fn height_histogram(heights: impl IntoIterator<Item = f64>, bin_width: f64) -> Result<Vec<HistogramBin>> {
    if !(bin_width.is_finite() && bin_width > 0.0) {
        return Err(Error::validation(format!("bin width must be positive, got {bin_width}")));
    }
    let idx: Vec<i64> = heights
        .into_iter()
        .filter(|h| h.is_finite() && *h >= HISTOGRAM_MIN_HEIGHT)
        .map(|h| (h / bin_width).floor() as i64)
        .collect();
    let (Some(&lo), Some(&hi)) = (idx.iter().min(), idx.iter().max()) else {
        return Ok(Vec::new());
    };
    let mut bins: Vec<HistogramBin> = (lo..=hi)
        .map(|k| HistogramBin { lower: k as f64 * bin_width, upper: (k + 1) as f64 * bin_width, count: 0 })
        .collect();
    for k in idx {
        bins[(k - lo) as usize].count += 1;
    }
    Ok(bins)
}

/// Bins that are higher than both neighbours (ties to the left count as lower).
pub fn local_maxima(bins: &[HistogramBin]) -> Vec<usize> {
    (0..bins.len())
        .filter(|&i| {
            let c = bins[i].count;
            let left = if i == 0 { 0 } else { bins[i - 1].count };
            let right = bins.get(i + 1).map_or(0, |b| b.count);
            c > left && c >= right && c > 0
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_and_single() {
        assert!(height_histogram(Vec::new(), 1.0).unwrap().is_empty());
        assert!(height_histogram(vec![3.0, 4.9], 1.0).unwrap().is_empty());
        let h = height_histogram(vec![12.3], 1.0).unwrap();
        assert_eq!(h, vec![HistogramBin { lower: 12.0, upper: 13.0, count: 1 }]);
        assert!(height_histogram(vec![1.0], 0.0).is_err());
    }

    #[test]
    fn gaps_are_filled() {
        let h = height_histogram(vec![5.5, 9.1, 9.9], 2.0).unwrap();
        assert_eq!(h.iter().map(|b| b.count).collect::<Vec<_>>(), vec![1, 0, 2]);
        assert_eq!(local_maxima(&h), vec![0, 2]);
    }
}
