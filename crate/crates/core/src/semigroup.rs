//! Discrete and continuous heat kernels as spectral sums.
//!
//! The discrete kernel is `g_t(x,y) = sum_{k=1}^{N-1} e^{-t lambda_k}
//! v_k(x) v_k(y)` with `v_k` the piecewise-linear interpolant of the nodal
//! values `sqrt(2) sin(pi k m h)` (the k = N mode vanishes identically).
//! The interpolants are exactly L2-orthogonal; their squared norms are
//! `(2 + cos(pi k h)) / 3`, recorded per mode and used wherever a spectral
//! sum collapses through an L2 inner product. The kernel itself keeps the
//! bare `sqrt(2)` nodal values so nodal evaluations coincide with the matrix
//! exponential of the sine-basis generator.

use crate::error::{Error, Result};
use crate::operator::LongRangeOperator;
use std::f64::consts::PI;

const SQRT2: f64 = std::f64::consts::SQRT_2;

#[derive(Debug, Clone)]
pub struct DiscreteSemigroup {
    pub n: usize,
    pub h: f64,
    pub gamma: f64,
    /// Paper-indexed eigenvalues for modes `k = 1..N-1` (entry `k-1`).
    pub lambdas: Vec<f64>,
    /// Exact squared L2 norms of the piecewise-linear modes,
    /// `(2 + cos(pi k h)) / 3`.
    pub mode_norm_sq: Vec<f64>,
}

/// The four L2 functionals of the discrete kernel at one `(t, x)`.
#[derive(Debug, Clone, Copy)]
pub struct L2Functionals {
    /// `int_0^1 g_t(x,y)^2 dy`
    pub space: f64,
    /// `int_0^1 int_0^1 g_t(x,y)^2 dy dx`
    pub full: f64,
    /// `int_0^t int_0^1 g_s(x,y)^2 dy ds`
    pub space_time: f64,
    /// `int_0^t int_0^1 int_0^1 g_s(x,y)^2 dy dx ds`
    pub full_time: f64,
}

impl DiscreteSemigroup {
    pub fn from_operator(op: &LongRangeOperator) -> Self {
        let n = op.n;
        let h = op.h;
        let lambdas: Vec<f64> = (1..n).map(|k| op.eigenvalue_paper(k)).collect();
        let mode_norm_sq: Vec<f64> = (1..n)
            .map(|k| (2.0 + (PI * k as f64 * h).cos()) / 3.0)
            .collect();
        DiscreteSemigroup {
            n,
            h,
            gamma: op.gamma,
            lambdas,
            mode_norm_sq,
        }
    }

    /// Piecewise-linear mode `k` at `x` in `[0,1]`.
    pub fn eigenfunction(&self, k: usize, x: f64) -> f64 {
        debug_assert!(k >= 1 && k < self.n);
        let pos = (x.clamp(0.0, 1.0)) / self.h;
        let cell = (pos as usize).min(self.n - 1);
        let frac = pos - cell as f64;
        let a = SQRT2 * (PI * (k * cell) as f64 * self.h).sin();
        let b = SQRT2 * (PI * (k * (cell + 1)) as f64 * self.h).sin();
        a + (b - a) * frac
    }

    /// `g_t(x, y)`.
    pub fn eval(&self, t: f64, x: f64, y: f64) -> f64 {
        debug_assert!(t > 0.0);
        let mut acc = 0.0;
        for k in 1..self.n {
            let w = (-t * self.lambdas[k - 1]).exp();
            if w == 0.0 {
                continue;
            }
            acc += w * self.eigenfunction(k, x) * self.eigenfunction(k, y);
        }
        acc
    }

    fn mode_weight(&self, k: usize, x: f64) -> f64 {
        let v = self.eigenfunction(k, x);
        v * v
    }

    /// Closed-form L2 functionals; the double sums collapse through the
    /// exact orthogonality of the piecewise-linear modes.
    pub fn l2_functionals(&self, t: f64, x: f64) -> Result<L2Functionals> {
        let mut out = L2Functionals {
            space: 0.0,
            full: 0.0,
            space_time: 0.0,
            full_time: 0.0,
        };
        for k in 1..self.n {
            let lam = self.lambdas[k - 1];
            if lam <= 0.0 {
                return Err(Error::SingularMode { index: k });
            }
            let g = self.mode_norm_sq[k - 1];
            let vx2 = self.mode_weight(k, x);
            let decay = (-2.0 * t * lam).exp();
            let time_int = (1.0 - decay) / (2.0 * lam);
            out.space += vx2 * g * decay;
            out.full += g * g * decay;
            out.space_time += vx2 * g * time_int;
            out.full_time += g * g * time_int;
        }
        Ok(out)
    }

    /// `int_0^t int_0^1 |g_{t-s}(x,.) - g_{t-s}(x',.)|^2 dy ds`.
    pub fn kernel_space_increment(&self, t: f64, x: f64, xp: f64) -> f64 {
        let mut acc = 0.0;
        for k in 1..self.n {
            let lam = self.lambdas[k - 1];
            let dv = self.eigenfunction(k, x) - self.eigenfunction(k, xp);
            if dv == 0.0 {
                continue;
            }
            acc += dv * dv * self.mode_norm_sq[k - 1] * (1.0 - (-2.0 * t * lam).exp())
                / (2.0 * lam);
        }
        acc
    }

    /// `int_0^t int_0^1 |g_{t-s}(x,.) - g_{t'-s}(x,.)|^2 dy ds` with the
    /// integral running over the earlier window `[0, min(t,t')]`.
    pub fn kernel_time_increment(&self, t: f64, tp: f64, x: f64) -> f64 {
        let t_lo = t.min(tp);
        let dt = (t - tp).abs();
        let mut acc = 0.0;
        for k in 1..self.n {
            let lam = self.lambdas[k - 1];
            let vx2 = self.mode_weight(k, x);
            let jump = 1.0 - (-lam * dt).exp();
            acc += vx2
                * self.mode_norm_sq[k - 1]
                * jump
                * jump
                * (1.0 - (-2.0 * t_lo * lam).exp())
                / (2.0 * lam);
        }
        acc
    }

    /// Kernel values on the nodal grid, `G[i][j] = g_t(x_i, x_j)`.
    pub fn nodal_matrix(&self, t: f64) -> Vec<Vec<f64>> {
        let mut g = vec![vec![0.0; self.n]; self.n];
        let modes: Vec<(f64, Vec<f64>)> = (1..self.n)
            .map(|k| {
                let w = (-t * self.lambdas[k - 1]).exp();
                let v: Vec<f64> = (0..self.n)
                    .map(|m| SQRT2 * (PI * (k * m) as f64 * self.h).sin())
                    .collect();
                (w, v)
            })
            .collect();
        for (w, v) in &modes {
            if *w == 0.0 {
                continue;
            }
            for i in 0..self.n {
                let wvi = w * v[i];
                for j in 0..self.n {
                    g[i][j] += wvi * v[j];
                }
            }
        }
        g
    }
}

/// Sine expansion of the continuum heat kernel, truncated so the series
/// tail stays below 1e-12 for the requested time.
#[derive(Debug, Clone)]
pub struct ContinuousHeatKernel {
    pub gamma: f64,
}

/// Series evaluation is refused below this time; the expansion converges
/// too slowly there, and every comparison in the artifact works at
/// `t >= t0 > 0` anyway.
pub const MIN_KERNEL_TIME: f64 = 1e-4;

const TAIL_TOLERANCE: f64 = 1e-12;

impl ContinuousHeatKernel {
    pub fn new(gamma: f64) -> Self {
        ContinuousHeatKernel { gamma }
    }

    /// Smallest mode cap whose tail bound `sum_{k>K} 2 e^{-gamma pi^2 k^2 t}`
    /// is below 1e-12.
    pub fn modes_for(&self, t: f64) -> Result<usize> {
        if t < MIN_KERNEL_TIME {
            return Err(Error::TimeBelowCutoff {
                t,
                min: MIN_KERNEL_TIME,
            });
        }
        let a = self.gamma * PI * PI * t;
        let mut k = 1usize;
        loop {
            // tail <= 2 e^{-a (k+1)^2} / (1 - e^{-a (2k+3)})
            let head = 2.0 * (-a * ((k + 1) * (k + 1)) as f64).exp();
            let ratio = 1.0 - (-a * (2 * k + 3) as f64).exp();
            if head / ratio < TAIL_TOLERANCE {
                return Ok(k);
            }
            k += 1;
        }
    }

    pub fn eval(&self, t: f64, x: f64, y: f64) -> Result<f64> {
        let kmax = self.modes_for(t)?;
        let mut acc = 0.0;
        for k in 1..=kmax {
            let w = (-self.gamma * PI * PI * (k * k) as f64 * t).exp();
            acc += 2.0 * w * (PI * k as f64 * x).sin() * (PI * k as f64 * y).sin();
        }
        Ok(acc)
    }
}

/// Sup of `|g^h - g|` over the grid `{ts} x {xs} x {ys}`.
pub fn kernel_distance(
    disc: &DiscreteSemigroup,
    cont: &ContinuousHeatKernel,
    ts: &[f64],
    xs: &[f64],
    ys: &[f64],
) -> Result<f64> {
    let mut sup = 0.0f64;
    for &t in ts {
        let kmax_cont = cont.modes_for(t)?;
        // accumulate both spectral sums mode by mode on the grid
        let mut diff = vec![vec![0.0f64; ys.len()]; xs.len()];
        let kmax = (disc.n - 1).max(kmax_cont);
        for k in 1..=kmax {
            let (wd, vd_x, vd_y): (f64, Vec<f64>, Vec<f64>) = if k < disc.n {
                let w = (-t * disc.lambdas[k - 1]).exp();
                (
                    w,
                    xs.iter().map(|&x| disc.eigenfunction(k, x)).collect(),
                    ys.iter().map(|&y| disc.eigenfunction(k, y)).collect(),
                )
            } else {
                (0.0, Vec::new(), Vec::new())
            };
            let wc = if k <= kmax_cont {
                (-cont.gamma * PI * PI * (k * k) as f64 * t).exp()
            } else {
                0.0
            };
            for (i, &x) in xs.iter().enumerate() {
                let cx = SQRT2 * (PI * k as f64 * x).sin();
                for (j, &y) in ys.iter().enumerate() {
                    let mut term = 0.0;
                    if wd != 0.0 {
                        term += wd * vd_x[i] * vd_y[j];
                    }
                    if wc != 0.0 {
                        term -= wc * cx * SQRT2 * (PI * k as f64 * y).sin();
                    }
                    diff[i][j] += term;
                }
            }
        }
        for row in &diff {
            for &d in row {
                sup = sup.max(d.abs());
            }
        }
    }
    Ok(sup)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{build_weights, WeightKernel};
    use crate::operator::LongRangeOperator;
    use crate::oracles::{dense_sine_generator, expm, simpson};

    fn semigroup(n: usize, r: usize, gamma: f64) -> DiscreteSemigroup {
        let w = build_weights(&WeightKernel::Indicator, r, 0.25).unwrap();
        let op = LongRangeOperator::new(w, n, gamma).unwrap();
        DiscreteSemigroup::from_operator(&op)
    }

    #[test]
    fn mode_norms_match_quadrature() {
        let g = semigroup(16, 2, 1.0);
        for k in [1usize, 3, 7, 15] {
            let quad = simpson(|x| g.eigenfunction(k, x).powi(2), 0.0, 1.0, 16 * 64);
            assert!(
                (quad - g.mode_norm_sq[k - 1]).abs() < 1e-9,
                "k={k}: {quad} vs {}",
                g.mode_norm_sq[k - 1]
            );
        }
    }

    #[test]
    fn modes_are_l2_orthogonal() {
        let g = semigroup(16, 2, 1.0);
        for k in 1..8usize {
            for l in (k + 1)..8usize {
                let quad = simpson(
                    |x| g.eigenfunction(k, x) * g.eigenfunction(l, x),
                    0.0,
                    1.0,
                    16 * 64,
                );
                assert!(quad.abs() < 1e-9, "k={k} l={l}: {quad}");
            }
        }
    }

    #[test]
    fn kernel_is_symmetric() {
        let g = semigroup(16, 3, 0.7);
        for (x, y) in [(0.13, 0.77), (0.5, 0.03), (0.9, 0.31)] {
            let a = g.eval(0.2, x, y);
            let b = g.eval(0.2, y, x);
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }

    #[test]
    fn diagonal_decays_in_time() {
        let g = semigroup(32, 3, 1.0);
        let x = 0.4375;
        let mut prev = f64::INFINITY;
        for i in 1..40 {
            let t = 0.01 * i as f64;
            let v = g.eval(t, x, x);
            assert!(v <= prev + 1e-12);
            prev = v;
        }
        // spectral gap drives the kernel to zero
        assert!(g.eval(50.0, x, x).abs() < 1e-12);
    }

    #[test]
    fn nodal_values_match_matrix_exponential_oracle() {
        // g_t at nodes equals e^{t L} delta_j / h for the sine-basis
        // generator L (N=8, R=1, t=0.1, x=y=0.5).
        let w = build_weights(&WeightKernel::Indicator, 1, 0.25).unwrap();
        let op = LongRangeOperator::new(w, 8, 1.0).unwrap();
        let g = DiscreteSemigroup::from_operator(&op);
        let gen = dense_sine_generator(&op);
        let prop = expm(&gen.scaled(0.1));
        // delta at node j = 4 (x = 0.5), scaled by 1/h
        let j = 4usize;
        for i in 1..8usize {
            let oracle = prop.at(i - 1, j - 1) / op.h;
            let direct = g.eval(0.1, i as f64 * op.h, 0.5);
            assert!(
                (oracle - direct).abs() < 1e-8,
                "node {i}: {oracle} vs {direct}"
            );
        }
    }

    #[test]
    fn chapman_kolmogorov_on_nodes() {
        let g = semigroup(16, 2, 1.0);
        let (s, t) = (0.05, 0.12);
        let gs = g.nodal_matrix(s);
        let gt = g.nodal_matrix(t);
        let gst = g.nodal_matrix(s + t);
        for i in 0..16 {
            for j in 0..16 {
                let conv: f64 = (0..16).map(|m| gs[i][m] * gt[m][j] * g.h).sum();
                assert!(
                    (conv - gst[i][j]).abs() < 1e-8,
                    "({i},{j}): {conv} vs {}",
                    gst[i][j]
                );
            }
        }
    }

    #[test]
    fn l2_functionals_match_quadrature() {
        let g = semigroup(32, 2, 1.0);
        let t = 0.2;
        let x = 0.37;
        let f = g.l2_functionals(t, x).unwrap();
        let quad_space = simpson(|y| g.eval(t, x, y).powi(2), 0.0, 1.0, 32 * 8);
        assert!(
            ((f.space - quad_space) / quad_space).abs() < 1e-3,
            "space: {} vs {quad_space}",
            f.space
        );
        let quad_full = simpson(
            |x| simpson(|y| g.eval(t, x, y).powi(2), 0.0, 1.0, 32 * 4),
            0.0,
            1.0,
            32 * 4,
        );
        assert!(
            ((f.full - quad_full) / quad_full).abs() < 1e-3,
            "full: {} vs {quad_full}",
            f.full
        );
        let quad_st = simpson(
            |s| simpson(|y| g.eval(s.max(1e-9), x, y).powi(2), 0.0, 1.0, 32 * 4),
            1e-9,
            t,
            400,
        );
        assert!(
            ((f.space_time - quad_st) / quad_st).abs() < 2e-3,
            "space_time: {} vs {quad_st}",
            f.space_time
        );
    }

    #[test]
    fn functionals_positive_increasing_and_bounded() {
        let g = semigroup(32, 2, 1.0);
        let x = 0.52;
        let mut prev_st = 0.0;
        let mut prev_ft = 0.0;
        for &t in &[0.05, 0.2, 1.0, 5.0] {
            let f = g.l2_functionals(t, x).unwrap();
            assert!(f.space > 0.0 && f.full > 0.0);
            assert!(f.space_time >= prev_st);
            assert!(f.full_time >= prev_ft);
            // proof envelopes
            let envelope = PI.sqrt() / (2.0 * SQRT2 * (g.gamma * t).sqrt()) + 2.0;
            assert!(f.space <= envelope, "t={t}: {} vs {envelope}", f.space);
            let envelope_st = 3.0 / (8.0 * g.gamma) * (8.0 * g.gamma * t).sqrt().min(1.0);
            assert!(f.space_time <= envelope_st, "t={t}: {} vs {envelope_st}", f.space_time);
            prev_st = f.space_time;
            prev_ft = f.full_time;
        }
    }

    #[test]
    fn increments_vanish_at_zero_separation() {
        let g = semigroup(16, 2, 1.0);
        assert_eq!(g.kernel_space_increment(0.3, 0.4, 0.4), 0.0);
        assert!(g.kernel_time_increment(0.3, 0.3, 0.4) == 0.0);
    }

    #[test]
    fn increment_scaling_exponents() {
        let g = semigroup(64, 3, 1.0);
        let t = 0.5;
        // space: squared increment ~ |x - x'|, fitted on dyadic separations
        let x0 = 0.31;
        let seps: Vec<f64> = (0..5).map(|i| 0.002 * 2f64.powi(i)).collect();
        let vals: Vec<f64> = seps
            .iter()
            .map(|&d| g.kernel_space_increment(t, x0, x0 + d))
            .collect();
        let slope = crate::oracles::log_log_slope(&seps, &vals);
        assert!(slope >= 0.85, "space exponent {slope}");
        // time: squared increment ~ sqrt|t - t'|
        let dts: Vec<f64> = (0..5).map(|i| 1e-3 * 2f64.powi(i)).collect();
        let tvals: Vec<f64> = dts
            .iter()
            .map(|&d| g.kernel_time_increment(t, t + d, 0.47))
            .collect();
        let tslope = crate::oracles::log_log_slope(&dts, &tvals);
        assert!(tslope >= 0.4 && tslope <= 0.65, "time exponent {tslope}");
    }

    #[test]
    fn continuous_kernel_truncation_and_cutoff() {
        let cont = ContinuousHeatKernel::new(1.0);
        assert!(matches!(
            cont.eval(5e-5, 0.5, 0.5),
            Err(Error::TimeBelowCutoff { .. })
        ));
        // doubling the mode cap must not move the value at the 1e-12 scale
        let kmax = cont.modes_for(0.01).unwrap();
        let v1 = cont.eval(0.01, 0.3, 0.6).unwrap();
        let mut v2 = 0.0;
        for k in 1..=(2 * kmax) {
            v2 += 2.0
                * (-(PI * PI) * (k * k) as f64 * 0.01).exp()
                * (PI * k as f64 * 0.3).sin()
                * (PI * k as f64 * 0.6).sin();
        }
        assert!((v1 - v2).abs() < 1e-11);
    }

    #[test]
    fn kernel_distance_decreases_with_t0_and_in_h() {
        let cont = ContinuousHeatKernel::new(1.0);
        let xs: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
        let mut prev = f64::INFINITY;
        for e in [4usize, 5, 6] {
            let n = 1 << e;
            let op = LongRangeOperator::from_grid(&WeightKernel::Indicator, n, 0.25, 1.0).unwrap();
            let disc = DiscreteSemigroup::from_operator(&op);
            let d = kernel_distance(&disc, &cont, &[0.1], &xs, &xs).unwrap();
            assert!(d < prev, "h=2^-{e}: {d} !< {prev}");
            prev = d;
        }
        // larger t0 gives smaller distance (heat smoothing)
        let op = LongRangeOperator::from_grid(&WeightKernel::Indicator, 32, 0.25, 1.0).unwrap();
        let disc = DiscreteSemigroup::from_operator(&op);
        let d1 = kernel_distance(&disc, &cont, &[0.1], &xs, &xs).unwrap();
        let d2 = kernel_distance(&disc, &cont, &[0.4], &xs, &xs).unwrap();
        assert!(d2 <= d1);
    }
}
