//! Multi-resolution, multi-replica studies and their statistics.

pub mod acceptance;
pub mod studies;

use crate::error::{Error, Result};
use crate::noise::{keyed_u64, stream};
use serde::Serialize;

/// Least-squares fit of `log(error)` against `log(h)`.
#[derive(Debug, Clone, Serialize)]
pub struct RateFit {
    pub hs: Vec<f64>,
    pub errors: Vec<f64>,
    /// Fitted slope: the empirical convergence order.
    pub exponent: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Fits the convergence order. Needs at least two levels, strictly
/// decreasing `hs`, strictly positive errors.
pub fn fit_rate(hs: &[f64], errors: &[f64]) -> Result<RateFit> {
    if hs.len() != errors.len() || hs.len() < 2 {
        return Err(Error::ConfigInvalid(
            "rate fit needs matching hs/errors with >= 2 levels".into(),
        ));
    }
    if hs.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::ConfigInvalid("hs must be strictly decreasing".into()));
    }
    if errors.iter().any(|&e| e <= 0.0) {
        return Err(Error::NonPositiveError);
    }
    let lx: Vec<f64> = hs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = errors.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ly.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Ok(RateFit {
        hs: hs.to_vec(),
        errors: errors.to_vec(),
        exponent: slope,
        intercept,
        r2,
    })
}

/// Bootstrap confidence interval (percentile, 1000 resamples) for a fitted
/// exponent, resampling replicas. `per_replica[h][replica]` holds one error
/// per replica and level; the statistic refit per resample is the slope of
/// the p-th-moment means.
pub fn bootstrap_exponent_ci(
    hs: &[f64],
    per_replica: &[Vec<f64>],
    p: f64,
    resamples: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    let replicas = per_replica
        .first()
        .map(Vec::len)
        .ok_or_else(|| Error::ConfigInvalid("no levels".into()))?;
    if per_replica.iter().any(|v| v.len() != replicas) || replicas == 0 {
        return Err(Error::ConfigInvalid("ragged replica table".into()));
    }
    let mut slopes = Vec::with_capacity(resamples);
    for b in 0..resamples {
        let mut means = Vec::with_capacity(hs.len());
        for level in per_replica {
            let mut acc = 0.0;
            for i in 0..replicas {
                let pick =
                    keyed_u64(seed, stream::BOOTSTRAP, b as u64, i as u64) as usize % replicas;
                acc += level[pick].powf(p);
            }
            means.push((acc / replicas as f64).powf(1.0 / p));
        }
        if means.iter().all(|&m| m > 0.0) {
            slopes.push(fit_rate(hs, &means)?.exponent);
        }
    }
    if slopes.is_empty() {
        return Err(Error::NonPositiveError);
    }
    slopes.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let lo = slopes[(0.025 * (slopes.len() - 1) as f64).round() as usize];
    let hi = slopes[(0.975 * (slopes.len() - 1) as f64).round() as usize];
    Ok((lo, hi))
}

/// Percentile bootstrap CI for a sample mean.
pub fn bootstrap_mean_ci(samples: &[f64], resamples: usize, seed: u64) -> (f64, f64) {
    let n = samples.len();
    let mut means = Vec::with_capacity(resamples);
    for b in 0..resamples {
        let mut acc = 0.0;
        for i in 0..n {
            let pick = keyed_u64(seed, stream::BOOTSTRAP, b as u64, i as u64) as usize % n;
            acc += samples[pick];
        }
        means.push(acc / n as f64);
    }
    means.sort_by(|a, b| a.partial_cmp(b).unwrap());
    (
        means[(0.025 * (resamples - 1) as f64).round() as usize],
        means[(0.975 * (resamples - 1) as f64).round() as usize],
    )
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law_recovered() {
        let hs = [0.1, 0.05, 0.025, 0.0125];
        let errors: Vec<f64> = hs.iter().map(|h| 3.7 * h * h).collect();
        let fit = fit_rate(&hs, &errors).unwrap();
        assert!((fit.exponent - 2.0).abs() < 1e-12);
        assert!((fit.r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_point_log_ratio() {
        let fit = fit_rate(&[0.1, 0.05], &[0.1, 0.025]).unwrap();
        assert!((fit.exponent - 2.0).abs() < 1e-12);
    }

    #[test]
    fn noisy_half_order_within_band() {
        // synthetic data: C h^0.5 (1 + eps), |eps| <= 0.1
        let hs: Vec<f64> = (0..6).map(|i| 0.1 / 2f64.powi(i)).collect();
        let errors: Vec<f64> = hs
            .iter()
            .enumerate()
            .map(|(i, h)| h.sqrt() * (1.0 + 0.1 * if i % 2 == 0 { 1.0 } else { -1.0 }))
            .collect();
        let fit = fit_rate(&hs, &errors).unwrap();
        assert!(fit.exponent > 0.4 && fit.exponent < 0.6, "{}", fit.exponent);
    }

    #[test]
    fn nonpositive_errors_rejected() {
        assert!(matches!(
            fit_rate(&[0.1, 0.05], &[0.1, 0.0]),
            Err(Error::NonPositiveError)
        ));
    }

    #[test]
    fn bootstrap_ci_brackets_true_slope() {
        let hs = [0.1, 0.05, 0.025];
        // replica errors scattered around C h
        let per_replica: Vec<Vec<f64>> = hs
            .iter()
            .map(|h| {
                (0..40)
                    .map(|i| h * (1.0 + 0.05 * ((i as f64 * 2.399).sin())))
                    .collect()
            })
            .collect();
        let (lo, hi) = bootstrap_exponent_ci(&hs, &per_replica, 2.0, 500, 7).unwrap();
        assert!(lo <= 1.0 && 1.0 <= hi, "CI [{lo}, {hi}]");
        assert!(hi - lo < 0.2);
    }
}
