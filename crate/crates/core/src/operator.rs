//! The long-range central difference operator as a symmetric circulant.
//!
//! `gamma A u_i = (gamma / (R^3 h^2)) sum_{j=-R}^{R} J_R(|j|) (u_{i+j} - u_i)`
//! on the periodic lattice of N nodes. Two spectral conventions coexist:
//!
//! * "paper" indexing: `lambda_k = (4 gamma / (h^2 R^3)) sum_j J_R(j)
//!   sin^2((pi/2) k h j)` for `k = 0..=N`, associated with the sine family
//!   `sin(pi k m h)`. Odd-k sine vectors are not lattice-periodic, so these
//!   are the eigenvalues of the stencil under odd (reflecting) extension, not
//!   of the circulant.
//! * DFT indexing: `mu_k = (4 gamma / (h^2 R^3)) sum_j J_R(j) sin^2(pi k h j)`
//!   for `k = 0..N`, the true circulant spectrum. The two meet at
//!   `lambda_{2k} = mu_k`.

use crate::error::{Error, Result};
use crate::fft::{apply_real_multiplier, Complex};
use crate::kernel::{build_weights, radius_for, DiscreteWeights, WeightKernel};
use std::f64::consts::PI;

#[derive(Debug, Clone)]
pub struct LongRangeOperator {
    pub weights: DiscreteWeights,
    /// Number of lattice nodes.
    pub n: usize,
    /// Grid spacing, `1/N`.
    pub h: f64,
    /// Diffusion constant.
    pub gamma: f64,
    /// `gamma / (R^3 h^2)`, the prefactor of the stencil.
    pub scale: f64,
}

impl LongRangeOperator {
    pub fn new(weights: DiscreteWeights, n: usize, gamma: f64) -> Result<Self> {
        if n < 4 {
            return Err(Error::ConfigInvalid(format!("lattice size {n} < 4")));
        }
        if gamma <= 0.0 {
            return Err(Error::ConfigInvalid(format!("gamma = {gamma} must be > 0")));
        }
        if weights.radius >= n / 2 {
            return Err(Error::RadiusTooLarge {
                radius: weights.radius,
                half_n: n / 2,
            });
        }
        let h = 1.0 / n as f64;
        let scale = gamma / ((weights.radius as f64).powi(3) * h * h);
        Ok(LongRangeOperator {
            weights,
            n,
            h,
            gamma,
            scale,
        })
    }

    /// Builds the operator for grid size `n` with radius `R = ceil(h^{-zeta})`.
    pub fn from_grid(kernel: &WeightKernel, n: usize, zeta: f64, gamma: f64) -> Result<Self> {
        let h = 1.0 / n as f64;
        let radius = radius_for(h, zeta)?;
        let weights = build_weights(kernel, radius, zeta)?;
        Self::new(weights, n, gamma)
    }

    /// `gamma A u` by direct O(NR) convolution with exact circular indexing.
    pub fn apply(&self, u: &[f64]) -> Result<Vec<f64>> {
        if u.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: u.len(),
            });
        }
        let mut out = vec![0.0; self.n];
        self.apply_into(u, &mut out);
        Ok(out)
    }

    /// Allocation-free variant for integrator hot loops.
    pub fn apply_into(&self, u: &[f64], out: &mut [f64]) {
        let n = self.n;
        let r = self.weights.radius;
        for i in 0..n {
            let ui = u[i];
            let mut acc = 0.0;
            for (jm1, &w) in self.weights.values.iter().enumerate() {
                let j = jm1 + 1;
                let up = u[(i + j) % n];
                let um = u[(i + n - (j % n)) % n];
                acc += w * ((up - ui) + (um - ui));
            }
            debug_assert!(r < n);
            out[i] = self.scale * acc;
        }
    }

    /// `gamma A u` through the DFT eigenbasis. Agrees with [`apply`] to
    /// rounding; kept as an independent route and for performance comparison.
    pub fn apply_spectral(&self, u: &[f64]) -> Result<Vec<f64>> {
        if u.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: u.len(),
            });
        }
        let mult: Vec<f64> = (0..self.n).map(|k| -self.eigenvalue_circulant(k)).collect();
        let mut scratch: Vec<Complex> = Vec::with_capacity(self.n);
        Ok(apply_real_multiplier(u, &mult, &mut scratch))
    }

    /// Paper-indexed eigenvalue `lambda_k`, `0 <= k <= N`.
    pub fn eigenvalue_paper(&self, k: usize) -> f64 {
        debug_assert!(k <= self.n);
        self.sine_symbol(0.5 * PI * k as f64 * self.h)
    }

    /// DFT-indexed eigenvalue `mu_k` of `-gamma A`, `0 <= k < N`.
    pub fn eigenvalue_circulant(&self, k: usize) -> f64 {
        debug_assert!(k < self.n);
        self.sine_symbol(PI * k as f64 * self.h)
    }

    fn sine_symbol(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for (jm1, &w) in self.weights.values.iter().enumerate() {
            let s = (x * (jm1 + 1) as f64).sin();
            acc += w * s * s;
        }
        4.0 * self.scale * acc
    }

    /// `lambda_k - lambda_k^h` against the continuum eigenvalue
    /// `lambda_k = gamma pi^2 k^2`. Nonnegative for all k.
    pub fn eigenvalue_gap_to_continuum(&self, k: usize) -> f64 {
        self.gamma * PI * PI * (k * k) as f64 - self.eigenvalue_paper(k)
    }

    /// `sum_{k=1}^{N} 1 / lambda_k` in paper indexing.
    pub fn inverse_trace_bound(&self) -> Result<f64> {
        let mut acc = 0.0;
        for k in 1..=self.n {
            let lam = self.eigenvalue_paper(k);
            if lam <= 0.0 {
                return Err(Error::SingularMode { index: k });
            }
            acc += 1.0 / lam;
        }
        Ok(acc)
    }

    /// Largest circulant eigenvalue of `-gamma A`; sets the explicit-step
    /// stability bound `dt <= 2 / mu_max`.
    pub fn max_circulant_eigenvalue(&self) -> f64 {
        (0..self.n)
            .map(|k| self.eigenvalue_circulant(k))
            .fold(0.0, f64::max)
    }

    /// Sup-norm consistency error `max_i |A f(y_i) - f''(y_i)|`, with the
    /// stencil applied at unit diffusion.
    pub fn consistency_error(&self, f: impl Fn(f64) -> f64, d2f: impl Fn(f64) -> f64) -> f64 {
        let nodal: Vec<f64> = (0..self.n).map(|m| f(m as f64 * self.h)).collect();
        let mut applied = vec![0.0; self.n];
        self.apply_into(&nodal, &mut applied);
        let inv_gamma = 1.0 / self.gamma;
        (0..self.n)
            .map(|m| (applied[m] * inv_gamma - d2f(m as f64 * self.h)).abs())
            .fold(0.0, f64::max)
    }

    pub fn spectrum(&self) -> SpectrumView {
        SpectrumView {
            paper_eigs: (0..=self.n).map(|k| self.eigenvalue_paper(k)).collect(),
            circulant_eigs: (0..self.n).map(|k| self.eigenvalue_circulant(k)).collect(),
            n: self.n,
            h: self.h,
            gamma: self.gamma,
        }
    }
}

/// Both spectra of one operator, plus the sine eigenvector samples.
#[derive(Debug, Clone)]
pub struct SpectrumView {
    /// `lambda_k` for `k = 0..=N` (paper indexing).
    pub paper_eigs: Vec<f64>,
    /// `mu_k` for `k = 0..N` (DFT indexing).
    pub circulant_eigs: Vec<f64>,
    pub n: usize,
    pub h: f64,
    pub gamma: f64,
}

impl SpectrumView {
    /// m-th entry of the paper-indexed eigenvector, `sin(pi k m h)`.
    pub fn eigvec_sample(&self, k: usize, m: usize) -> f64 {
        (PI * k as f64 * m as f64 * self.h).sin()
    }

    /// Largest paper index for which the lower bound `4 gamma k^2` is
    /// provable (`k <= N/R`; the sine-squared bound needs `k h j <= 1`).
    pub fn lower_bound_valid_up_to(&self, radius: usize) -> usize {
        self.n / radius
    }
}
