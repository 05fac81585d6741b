//! Seeded space-time white noise on a master grid.
//!
//! Every Gaussian in the engine is a pure function of
//! `(seed, stream, a, b)` through a counter-based generator, so any
//! sub-rectangle of the sheet can be produced without materializing the rest,
//! parallel replicas are deterministic, and coarser grids aggregate the same
//! sheet instead of re-sampling.
//!
//! Aggregation uses a canonical binary-tree summation (cells split first,
//! then time slabs), which makes chained coarsenings bit-identical to direct
//! ones: every aligned sub-block is a subtree of the parent reduction.

use crate::error::{Error, Result};
use crate::semigroup::DiscreteSemigroup;
use std::ops::Range;

/// Stream tags keep the independent uses of the generator disjoint.
pub mod stream {
    /// White-noise sheet integrals.
    pub const SHEET: u64 = 1;
    /// Spectral Ornstein-Uhlenbeck mode updates.
    pub const MODE_OU: u64 = 2;
    /// Bootstrap resampling.
    pub const BOOTSTRAP: u64 = 3;
    /// Miscellaneous test draws.
    pub const GENERIC: u64 = 4;
}

#[inline]
fn splitmix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const PHI: u64 = 0x9E37_79B9_7F4A_7C15;

/// Keyed counter-based generator: uniform 64-bit word for `(seed, stream, a, b)`.
#[inline]
pub fn keyed_u64(seed: u64, stream: u64, a: u64, b: u64) -> u64 {
    let mut z = splitmix(seed ^ PHI.wrapping_mul(stream.wrapping_add(1)));
    z = splitmix(z ^ PHI.wrapping_mul(a.wrapping_add(0x243F_6A88_85A3_08D3)));
    z = splitmix(z ^ PHI.wrapping_mul(b.wrapping_add(0x1319_8A2E_0370_7344)));
    z
}

/// Standard normal draw for `(seed, stream, a, b)`: the keyed word becomes a
/// 53-bit uniform in (0,1), mapped through the normal quantile.
#[inline]
pub fn keyed_gauss(seed: u64, stream: u64, a: u64, b: u64) -> f64 {
    let word = keyed_u64(seed, stream, a, b);
    let u = ((word >> 11) as f64 + 1.0) / 9_007_199_254_740_993.0; // 2^53 + 1
    standard_normal_quantile(u)
}

/// Inverse standard normal CDF (Acklam's rational approximation,
/// |relative error| < 1.2e-9). The central branch is transcendental-free,
/// which matters: sheet generation evaluates this hundreds of millions of
/// times per study.
pub fn standard_normal_quantile(p: f64) -> f64 {
    debug_assert!(p > 0.0 && p < 1.0);
    const A: [f64; 6] = [
        -3.969683028665376e1,
        2.209460984245205e2,
        -2.759285104469687e2,
        1.383_577_518_672_69e2,
        -3.066479806614716e1,
        2.506628277459239e0,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e1,
        1.615858368580409e2,
        -1.556989798598866e2,
        6.680131188771972e1,
        -1.328068155288572e1,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-3,
        -3.223964580411365e-1,
        -2.400758277161838e0,
        -2.549732539343734e0,
        4.374664141464968e0,
        2.938163982698783e0,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-3,
        3.224671290700398e-1,
        2.445134137142996e0,
        3.754408661907416e0,
    ];
    const P_LOW: f64 = 0.02425;
    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    }
}

/// Master description of one realization of the Brownian sheet.
#[derive(Debug, Clone)]
pub struct NoisePlan {
    pub seed: u64,
    /// Finest spatial resolution; a power of two so every admissible coarse
    /// grid divides it.
    pub master_n: usize,
    /// Finest time step.
    pub dt_master: f64,
}

impl NoisePlan {
    pub fn new(seed: u64, master_n: usize, dt_master: f64) -> Result<Self> {
        if !master_n.is_power_of_two() {
            return Err(Error::ConfigInvalid(format!(
                "master_n = {master_n} must be a power of two"
            )));
        }
        if !(dt_master > 0.0) {
            return Err(Error::ConfigInvalid("dt_master must be positive".into()));
        }
        Ok(NoisePlan {
            seed,
            master_n,
            dt_master,
        })
    }

    pub fn h_master(&self) -> f64 {
        1.0 / self.master_n as f64
    }

    /// White-noise integral over master cell `i` x time slab `n`,
    /// `~ Normal(0, h_master * dt_master)`.
    #[inline]
    pub fn cell_integral(&self, replica: u64, cell: usize, slab: u64) -> f64 {
        debug_assert!(cell < self.master_n);
        let key_a = (replica << 32) | cell as u64;
        (self.h_master() * self.dt_master).sqrt()
            * keyed_gauss(self.seed, stream::SHEET, key_a, slab)
    }

    /// Canonical tree sum of `cell_integral` over a rectangle of the sheet:
    /// cells are halved first, then slabs. Any aligned decomposition along
    /// these splits reproduces the same bits.
    pub fn block_sum(&self, replica: u64, cells: Range<usize>, slabs: Range<u64>) -> f64 {
        debug_assert!(!cells.is_empty() && slabs.start < slabs.end);
        if cells.len() > 1 {
            let mid = cells.start + cells.len() / 2;
            self.block_sum(replica, cells.start..mid, slabs.clone())
                + self.block_sum(replica, mid..cells.end, slabs)
        } else if slabs.end - slabs.start > 1 {
            let mid = slabs.start + (slabs.end - slabs.start) / 2;
            self.block_sum(replica, cells.clone(), slabs.start..mid)
                + self.block_sum(replica, cells, mid..slabs.end)
        } else {
            self.cell_integral(replica, cells.start, slabs.start)
        }
    }

    /// Brownian increments for a coarser grid sharing this sheet.
    pub fn increments_for_grid(&self, n_coarse: usize, dt_coarse: f64) -> Result<GridIncrements> {
        if n_coarse == 0 || !self.master_n.is_multiple_of(n_coarse) {
            return Err(Error::IncompatibleRefinement(format!(
                "n_coarse = {n_coarse} does not divide master_n = {}",
                self.master_n
            )));
        }
        let ratio = dt_coarse / self.dt_master;
        let slabs_per_step = ratio.round() as u64;
        if slabs_per_step == 0 || (ratio - slabs_per_step as f64).abs() > 1e-9 * ratio.abs() {
            return Err(Error::IncompatibleRefinement(format!(
                "dt_coarse = {dt_coarse:e} is not an integer multiple of dt_master = {:e}",
                self.dt_master
            )));
        }
        Ok(GridIncrements {
            plan: self.clone(),
            n_coarse,
            cells_per_node: self.master_n / n_coarse,
            slabs_per_step,
            inv_sqrt_h: (n_coarse as f64).sqrt(),
        })
    }
}

/// View of the master sheet as Brownian increments on a coarser space-time
/// grid: `dB_i = (1/sqrt(h_coarse)) * sum of contained cell integrals`,
/// with `Var(dB_i) = dt_coarse`.
#[derive(Debug, Clone)]
pub struct GridIncrements {
    plan: NoisePlan,
    pub n_coarse: usize,
    pub cells_per_node: usize,
    pub slabs_per_step: u64,
    inv_sqrt_h: f64,
}

impl GridIncrements {
    pub fn dt(&self) -> f64 {
        self.slabs_per_step as f64 * self.plan.dt_master
    }

    /// `dB_i` for node `i` at step `step`.
    pub fn brownian_increment(&self, replica: u64, node: usize, step: u64) -> f64 {
        let c0 = node * self.cells_per_node;
        let s0 = step * self.slabs_per_step;
        self.inv_sqrt_h
            * self
                .plan
                .block_sum(replica, c0..c0 + self.cells_per_node, s0..s0 + self.slabs_per_step)
    }

    /// Fills `out[i] = dB_i` for one step.
    pub fn fill_step(&self, replica: u64, step: u64, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.n_coarse);
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = self.brownian_increment(replica, i, step);
        }
    }
}

/// The noise-driven part of the mild solution, evolved exactly per spectral
/// mode: each coefficient follows an Ornstein-Uhlenbeck update
/// `a_k(t + dt) = e^{-lambda_k dt} a_k(t) + eta_k` with the
/// stationary-consistent variance `|v_k|^2 (1 - e^{-2 lambda_k dt}) / (2 lambda_k)`.
///
/// This path has no time-discretization bias; integrator experiments consume
/// the increment stream instead.
#[derive(Debug, Clone)]
pub struct SpectralConvolution {
    semigroup: DiscreteSemigroup,
    seed: u64,
    replica: u64,
    /// Mode coefficients `a_k`, entry `k-1`.
    pub coeffs: Vec<f64>,
    /// Current time.
    pub t: f64,
    steps_taken: u64,
}

impl SpectralConvolution {
    /// Field started from zero at `t = 0`.
    pub fn new(semigroup: DiscreteSemigroup, seed: u64, replica: u64) -> Self {
        let modes = semigroup.n - 1;
        SpectralConvolution {
            semigroup,
            seed,
            replica,
            coeffs: vec![0.0; modes],
            t: 0.0,
            steps_taken: 0,
        }
    }

    /// Exact propagation by `dt > 0`.
    pub fn advance(&mut self, dt: f64) {
        debug_assert!(dt > 0.0);
        let key_a = self.replica;
        for (idx, a) in self.coeffs.iter_mut().enumerate() {
            let lam = self.semigroup.lambdas[idx];
            let g = self.semigroup.mode_norm_sq[idx];
            let decay = (-lam * dt).exp();
            let var = g * (1.0 - decay * decay) / (2.0 * lam);
            let key_b = self.steps_taken * (self.semigroup.n as u64) + idx as u64;
            *a = decay * *a
                + var.sqrt() * keyed_gauss(self.seed, stream::MODE_OU, key_a, key_b);
        }
        self.t += dt;
        self.steps_taken += 1;
    }

    /// Field value `B(x, t)` at the current time.
    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(idx, &a)| a * self.semigroup.eigenfunction(idx + 1, x))
            .sum()
    }

    /// Closed-form variance of `B(x, t)`:
    /// `sum_k v_k(x)^2 |v_k|^2 (1 - e^{-2 t lambda_k}) / (2 lambda_k)`.
    pub fn variance_at(&self, x: f64, t: f64) -> f64 {
        (1..self.semigroup.n)
            .map(|k| {
                let lam = self.semigroup.lambdas[k - 1];
                let v = self.semigroup.eigenfunction(k, x);
                v * v * self.semigroup.mode_norm_sq[k - 1] * (1.0 - (-2.0 * t * lam).exp())
                    / (2.0 * lam)
            })
            .sum()
    }
}

/// Distributional checks used by the noise-check study and the acceptance
/// suite.
pub mod diagnostics {
    /// Abramowitz-Stegun 7.1.26 erf approximation, |error| < 1.5e-7.
    pub fn erf(x: f64) -> f64 {
        let sign = if x < 0.0 { -1.0 } else { 1.0 };
        let x = x.abs();
        let t = 1.0 / (1.0 + 0.327_591_1 * x);
        let poly = t
            * (0.254_829_592
                + t * (-0.284_496_736 + t * (1.421_413_741 + t * (-1.453_152_027 + t * 1.061_405_429))));
        sign * (1.0 - poly * (-x * x).exp())
    }

    pub fn normal_cdf(x: f64) -> f64 {
        0.5 * (1.0 + erf(x / std::f64::consts::SQRT_2))
    }

    /// Kolmogorov-Smirnov statistic against the standard normal.
    pub fn ks_statistic_normal(samples: &mut [f64]) -> f64 {
        samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = samples.len() as f64;
        let mut d = 0.0f64;
        for (i, &x) in samples.iter().enumerate() {
            let cdf = normal_cdf(x);
            let hi = (i + 1) as f64 / n - cdf;
            let lo = cdf - i as f64 / n;
            d = d.max(hi.max(lo));
        }
        d
    }

    /// Asymptotic critical value at level 1%: `1.628 / sqrt(n)`.
    pub fn ks_critical_1pct(n: usize) -> f64 {
        1.628 / (n as f64).sqrt()
    }

    /// Pearson correlation of two equal-length samples.
    pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len() as f64;
        let ma = a.iter().sum::<f64>() / n;
        let mb = b.iter().sum::<f64>() / n;
        let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
        let va: f64 = a.iter().map(|x| (x - ma) * (x - ma)).sum();
        let vb: f64 = b.iter().map(|y| (y - mb) * (y - mb)).sum();
        cov / (va * vb).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{build_weights, WeightKernel};
    use crate::operator::LongRangeOperator;

    fn plan() -> NoisePlan {
        NoisePlan::new(42, 64, 1.0 / 1024.0).unwrap()
    }

    #[test]
    fn reproducible_across_calls() {
        let p = plan();
        for cell in [0usize, 13, 63] {
            for slab in [0u64, 7, 100_000] {
                assert_eq!(
                    p.cell_integral(3, cell, slab).to_bits(),
                    p.cell_integral(3, cell, slab).to_bits()
                );
            }
        }
    }

    #[test]
    fn distinct_keys_decorrelated() {
        let p = plan();
        let a: Vec<f64> = (0..20_000).map(|s| p.cell_integral(0, 5, s)).collect();
        let b: Vec<f64> = (0..20_000).map(|s| p.cell_integral(0, 6, s)).collect();
        assert!(diagnostics::correlation(&a, &b).abs() < 0.02);
    }

    #[test]
    fn spatial_coarsening_is_exact_additivity() {
        let p = plan();
        // coarse cell integral equals the sum of its two fine halves, bitwise
        let total = p.block_sum(1, 0..8, 0..4);
        let left = p.block_sum(1, 0..4, 0..4);
        let right = p.block_sum(1, 4..8, 0..4);
        assert_eq!(total.to_bits(), (left + right).to_bits());
    }

    #[test]
    fn chained_coarsening_bit_identical() {
        let p = plan();
        // master -> 4 -> 2 -> 1 spatial chain over a fixed slab window
        let slabs = 0u64..8;
        let one_step = p.block_sum(0, 0..64, slabs.clone());
        let quarters: Vec<f64> = (0..4).map(|q| p.block_sum(0, q * 16..(q + 1) * 16, slabs.clone())).collect();
        let halves = [quarters[0] + quarters[1], quarters[2] + quarters[3]];
        let chained = halves[0] + halves[1];
        assert_eq!(one_step.to_bits(), chained.to_bits());
        // temporal chain within a single cell
        let direct = p.block_sum(0, 3..4, 0..16);
        let parts: Vec<f64> = (0..4).map(|q| p.block_sum(0, 3..4, q * 4..(q + 1) * 4)).collect();
        let chained_t = (parts[0] + parts[1]) + (parts[2] + parts[3]);
        assert_eq!(direct.to_bits(), chained_t.to_bits());
    }

    #[test]
    fn identity_passthrough_at_master_resolution() {
        let p = plan();
        let inc = p.increments_for_grid(64, p.dt_master).unwrap();
        for (cell, slab) in [(0usize, 0u64), (17, 5), (63, 999)] {
            let direct = p.cell_integral(2, cell, slab) * (64f64).sqrt();
            assert_eq!(
                inc.brownian_increment(2, cell, slab).to_bits(),
                direct.to_bits()
            );
        }
    }

    #[test]
    fn incompatible_refinements_rejected() {
        let p = plan();
        assert!(matches!(
            p.increments_for_grid(3, p.dt_master),
            Err(Error::IncompatibleRefinement(_))
        ));
        assert!(matches!(
            p.increments_for_grid(32, p.dt_master * 2.5),
            Err(Error::IncompatibleRefinement(_))
        ));
    }

    #[test]
    fn increment_variance_matches_dt() {
        // Monte Carlo oracle: empirical variance within 2% of dt_coarse
        let p = plan();
        let inc = p.increments_for_grid(16, 4.0 * p.dt_master).unwrap();
        let n = 100_000u64;
        let mut sum = 0.0;
        let mut sq = 0.0;
        for r in 0..n {
            let v = inc.brownian_increment(r, 3, 7);
            sum += v;
            sq += v * v;
        }
        let mean = sum / n as f64;
        let var = sq / n as f64 - mean * mean;
        let dt = inc.dt();
        assert!(
            (var - dt).abs() / dt < 0.02,
            "empirical {var:e} vs dt {dt:e}"
        );
    }

    #[test]
    fn standardized_increments_pass_ks() {
        let p = plan();
        let inc = p.increments_for_grid(32, 2.0 * p.dt_master).unwrap();
        let scale = 1.0 / inc.dt().sqrt();
        let mut samples: Vec<f64> = (0..100_000u64)
            .map(|r| inc.brownian_increment(r, r as usize % 32, r % 64) * scale)
            .collect();
        let d = diagnostics::ks_statistic_normal(&mut samples);
        assert!(
            d < diagnostics::ks_critical_1pct(samples.len()),
            "KS statistic {d}"
        );
    }

    #[test]
    fn convolution_mean_and_variance() {
        let w = build_weights(&WeightKernel::Indicator, 2, 0.25).unwrap();
        let op = LongRangeOperator::new(w, 32, 1.0).unwrap();
        let sg = DiscreteSemigroup::from_operator(&op);
        let t = 0.5;
        let x = 0.5;
        let paths = 10_000u64;
        let mut sum = 0.0;
        let mut sq = 0.0;
        for r in 0..paths {
            let mut conv = SpectralConvolution::new(sg.clone(), 7, r);
            // two exact steps, no discretization bias
            conv.advance(0.3);
            conv.advance(0.2);
            let v = conv.eval(x);
            sum += v;
            sq += v * v;
        }
        let mean = sum / paths as f64;
        let var = sq / paths as f64 - mean * mean;
        let theory = SpectralConvolution::new(sg, 7, 0).variance_at(x, t);
        let sd = (theory / paths as f64).sqrt() * std::f64::consts::SQRT_2;
        assert!(mean.abs() < 3.0 * (theory / paths as f64).sqrt(), "mean {mean}");
        assert!(
            (var - theory).abs() < 0.03 * theory + 3.0 * sd,
            "var {var} vs {theory}"
        );
    }

    proptest::proptest! {
        #[test]
        fn block_sums_always_split_exactly(
            c0 in 0usize..32, width_pow in 0u32..5, s0 in 0u64..64, span_pow in 0u32..5,
        ) {
            let p = plan();
            let w = 1usize << width_pow;
            let s = 1u64 << span_pow;
            let cells = c0..(c0 + w).min(64);
            let slabs = s0..s0 + s;
            let total = p.block_sum(0, cells.clone(), slabs.clone());
            if cells.len() > 1 {
                let mid = cells.start + cells.len() / 2;
                let sum = p.block_sum(0, cells.start..mid, slabs.clone())
                    + p.block_sum(0, mid..cells.end, slabs);
                proptest::prop_assert_eq!(total.to_bits(), sum.to_bits());
            }
        }
    }
}
