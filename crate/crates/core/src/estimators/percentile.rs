use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Resampled draws of `λ'θ̃* − λ'θ̂`, kept sorted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PercentileQuery {
    draws: Vec<f64>,
}

impl PercentileQuery {
    pub fn new(mut draws: Vec<f64>) -> Result<Self> {
        if draws.is_empty() {
            return Err(Error::Empty("resampled draws"));
        }
        if draws.iter().any(|v| v.is_nan()) {
            return Err(Error::InvalidSpec("resampled draws contain NaN".into()));
        }
        draws.sort_by(f64::total_cmp);
        Ok(Self { draws })
    }

    pub fn draws(&self) -> &[f64] {
        &self.draws
    }
}

/// `inf{q : #{draws ≤ q}/B ≥ t}` on sorted draws.
pub fn quantile_inf(sorted: &[f64], t: f64) -> Result<f64> {
    if sorted.is_empty() {
        return Err(Error::Empty("draws"));
    }
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::Domain(format!("quantile level must lie in (0, 1), got {t}")));
    }
    let b = sorted.len();
    let frac = |k: usize| k as f64 / b as f64;
    // Start from ⌈tB⌉ and settle on the smallest k with k/B ≥ t, which
    // guards against rounding in t·B.
    let mut k = ((t * b as f64).ceil() as usize).clamp(1, b);
    while k > 1 && frac(k - 1) >= t {
        k -= 1;
    }
    while k < b && frac(k) < t {
        k += 1;
    }
    Ok(sorted[k - 1])
}

pub fn percentile_quantile(pq: &PercentileQuery, t: f64) -> Result<f64> {
    quantile_inf(&pq.draws, t)
}

/// `[point − q*(1−α/2), point − q*(α/2)]`.
pub fn percentile_interval(point: f64, pq: &PercentileQuery, alpha: f64) -> Result<(f64, f64)> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("α must lie in (0, 1), got {alpha}")));
    }
    let hi_q = percentile_quantile(pq, 1.0 - alpha / 2.0)?;
    let lo_q = percentile_quantile(pq, alpha / 2.0)?;
    Ok((point - hi_q, point - lo_q))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pq(v: &[f64]) -> PercentileQuery {
        PercentileQuery::new(v.to_vec()).unwrap()
    }

    #[test]
    fn quantile_examples() {
        assert_eq!(percentile_quantile(&pq(&[1.0, 2.0, 3.0, 4.0]), 0.5).unwrap(), 2.0);
        assert_eq!(percentile_quantile(&pq(&[5.0]), 0.01).unwrap(), 5.0);
        assert_eq!(percentile_quantile(&pq(&[5.0]), 0.99).unwrap(), 5.0);
        assert_eq!(percentile_quantile(&pq(&[1.0, 1.0, 1.0, 9.0]), 0.75).unwrap(), 1.0);
        assert!(PercentileQuery::new(vec![]).is_err());
        assert!(percentile_quantile(&pq(&[1.0]), 1.0).is_err());
    }

    #[test]
    fn interval_examples() {
        assert_eq!(percentile_interval(0.0, &pq(&[-1.0, 1.0]), 0.5).unwrap(), (-1.0, 1.0));
        assert_eq!(percentile_interval(2.0, &pq(&[0.5; 7]), 0.1).unwrap(), (1.5, 1.5));
        let draws: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(percentile_interval(0.0, &pq(&draws), 0.05).unwrap(), (-98.0, -3.0));
    }
}
