//! Point estimates with confidence intervals, and the Kolmogorov-Smirnov distance.

use crate::error::{Error, Result};
use crate::harness::engine::TrialRecord;

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct MetricEstimate {
    pub value: f64,
    pub std_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub trials: usize,
}

impl MetricEstimate {
    /// Whether the 95% intervals of `self` and `other` are disjoint with
    /// `self` above.
    pub fn above(&self, other: &MetricEstimate) -> bool {
        self.ci_low > other.ci_high
    }

    pub fn overlaps(&self, other: &MetricEstimate) -> bool {
        self.ci_low <= other.ci_high && other.ci_low <= self.ci_high
    }
}

/// Fraction of trials with `C_s ≤ R_s`, with a Wilson score interval.
pub fn estimate_sop(records: &[TrialRecord], r_s: f64) -> Result<MetricEstimate> {
    if records.is_empty() {
        return Err(Error::Numeric("SOP estimate needs at least one trial".into()));
    }
    let n = records.len();
    let hits = records.iter().filter(|r| r.c_s <= r_s).count();
    Ok(proportion(hits, n))
}

/// Wilson score interval for `hits` successes out of `n`.
pub fn proportion(hits: usize, n: usize) -> MetricEstimate {
    let nf = n as f64;
    let p = hits as f64 / nf;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / nf;
    let centre = (p + z2 / (2.0 * nf)) / denom;
    let half = Z95 * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    MetricEstimate {
        value: p,
        std_error: (p * (1.0 - p) / nf).sqrt(),
        ci_low: (centre - half).max(0.0).min(p),
        ci_high: (centre + half).min(1.0).max(p),
        trials: n,
    }
}

/// Sample mean of `C_s` with a normal-approximation interval.
pub fn estimate_asc(records: &[TrialRecord]) -> Result<MetricEstimate> {
    let values: Vec<f64> = records.iter().map(|r| r.c_s).collect();
    estimate_mean(&values)
}

pub fn estimate_mean(values: &[f64]) -> Result<MetricEstimate> {
    let n = values.len();
    if n < 2 {
        return Err(Error::Numeric(format!("mean estimate needs at least two samples, got {n}")));
    }
    let nf = n as f64;
    let mean = values.iter().sum::<f64>() / nf;
    let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    let se = (var / nf).sqrt();
    Ok(MetricEstimate {
        value: mean,
        std_error: se,
        ci_low: mean - Z95 * se,
        ci_high: mean + Z95 * se,
        trials: n,
    })
}

/// Unbiased sample variance.
pub fn sample_variance(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
}

/// `sup_x |F_n(x) - F(x)|` for the empirical CDF of `samples`.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<f64> {
    if samples.len() < 100 {
        return Err(Error::Numeric(format!("KS statistic needs at least 100 samples, got {}", samples.len())));
    }
    if samples.iter().any(|x| x.is_nan()) {
        return Err(Error::Numeric("KS statistic of NaN samples".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        // ties: the ECDF jumps over the whole run at once
        let x = sorted[i];
        let mut j = i;
        while j < sorted.len() && sorted[j] == x {
            j += 1;
        }
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max(j as f64 / n - f);
        i = j;
    }
    Ok(d.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::trial_rng;
    use approx::assert_relative_eq;
    use rand::Rng;

    fn rec(c_s: f64) -> TrialRecord {
        TrialRecord { g_b: 0.0, g_e: 0.0, gamma_b: 0.0, gamma_e: 0.0, c_s }
    }

    #[test]
    fn sop_all_and_none() {
        let all: Vec<_> = (0..50).map(|_| rec(0.0)).collect();
        let e = estimate_sop(&all, 1.0).unwrap();
        assert_eq!(e.value, 1.0);
        assert!(e.ci_high == 1.0 && e.ci_low < 1.0);
        let none: Vec<_> = (0..1000).map(|_| rec(5.0)).collect();
        let e = estimate_sop(&none, 1.0).unwrap();
        assert_eq!(e.value, 0.0);
        assert_eq!(e.ci_low, 0.0);
        assert!(e.ci_high < 0.004);
        assert!(estimate_sop(&[], 1.0).is_err());
    }

    #[test]
    fn wilson_reference_value() {
        // 10 of 100: Wilson interval (0.05523, 0.17437)
        let e = proportion(10, 100);
        assert!((e.ci_low - 0.055_229).abs() < 1e-5, "{e:?}");
        assert!((e.ci_high - 0.174_366).abs() < 1e-5, "{e:?}");
    }

    #[test]
    fn asc_constant_and_degenerate() {
        let recs: Vec<_> = (0..10).map(|_| rec(0.75)).collect();
        let e = estimate_asc(&recs).unwrap();
        assert_eq!(e.value, 0.75);
        assert_eq!(e.std_error, 0.0);
        let recs: Vec<_> = (0..10).map(|_| rec(crate::secrecy::secrecy_capacity(3.0, 0.0))).collect();
        assert_relative_eq!(estimate_asc(&recs).unwrap().value, 2.0, max_relative = 1e-15);
        assert!(estimate_asc(&recs[..1]).is_err());
    }

    #[test]
    fn ks_degenerate_samples() {
        let c = 0.3f64;
        let samples = vec![c; 200];
        let cdf = |x: f64| -(-x).exp_m1();
        let f = cdf(c);
        assert_relative_eq!(ks_statistic(&samples, cdf).unwrap(), f.max(1.0 - f), max_relative = 1e-15);
        assert!(ks_statistic(&samples[..50], cdf).is_err());
    }

    #[test]
    fn ks_self_consistent_sample() {
        let mut rng = trial_rng(17, 0);
        let samples: Vec<f64> = (0..100_000).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
        let d = ks_statistic(&samples, |x| -(-x).exp_m1()).unwrap();
        assert!(d <= 0.01, "d = {d}");
    }

    #[test]
    fn interval_relations() {
        let a = proportion(10, 1000);
        let b = proportion(100, 1000);
        assert!(b.above(&a) && !a.overlaps(&b));
        assert!(a.ci_low <= a.value && a.value <= a.ci_high);
    }
}
