//! Order statistics for trial aggregates.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quantiles {
    pub count: usize,
    pub min: f64,
    pub median: f64,
    pub p95: f64,
    pub max: f64,
    pub mean: f64,
}

impl Quantiles {
    /// `None` for an empty sample. NaNs sort last.
    pub fn of(mut xs: Vec<f64>) -> Option<Self> {
        if xs.is_empty() {
            return None;
        }
        xs.sort_by(f64::total_cmp);
        Some(Quantiles {
            count: xs.len(),
            min: xs[0],
            median: quantile(&xs, 0.5),
            p95: quantile(&xs, 0.95),
            max: xs[xs.len() - 1],
            mean: xs.iter().sum::<f64>() / xs.len() as f64,
        })
    }
}

/// Linear interpolation between order statistics at position `q·(n − 1)`
/// of a sorted sample.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of an empty sample");
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolated_quantiles() {
        let xs: Vec<f64> = (1..=101).map(f64::from).collect();
        let q = Quantiles::of(xs).unwrap();
        assert_eq!((q.min, q.median, q.p95, q.max, q.mean), (1.0, 51.0, 96.0, 101.0, 51.0));
        assert_eq!(quantile(&[1.0, 2.0], 0.5), 1.5);
        assert_eq!(Quantiles::of(vec![3.0, 1.0, 2.0]).unwrap().median, 2.0);
        assert!(Quantiles::of(Vec::new()).is_none());
    }
}
