//! Minimal radix-2 FFT used to diagonalize the symmetric circulant stencil.
//!
//! Simulation grids are powers of two by construction (every admissible grid
//! divides the master noise grid), so an iterative Cooley-Tukey transform is
//! all that is needed. A naive O(N^2) DFT covers the few non-power-of-two
//! diagnostic paths.

use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Complex {
    pub re: f64,
    pub im: f64,
}

impl Complex {
    pub const ZERO: Complex = Complex { re: 0.0, im: 0.0 };

    pub fn new(re: f64, im: f64) -> Self {
        Complex { re, im }
    }

    fn mul(self, other: Complex) -> Complex {
        Complex {
            re: self.re * other.re - self.im * other.im,
            im: self.re * other.im + self.im * other.re,
        }
    }

    fn add(self, other: Complex) -> Complex {
        Complex {
            re: self.re + other.re,
            im: self.im + other.im,
        }
    }

    fn sub(self, other: Complex) -> Complex {
        Complex {
            re: self.re - other.re,
            im: self.im - other.im,
        }
    }
}

/// In-place forward FFT (`X_k = sum_m x_m e^{-2 pi i k m / N}`).
/// Panics if the length is not a power of two.
pub fn fft_in_place(data: &mut [Complex]) {
    transform(data, -1.0);
}

/// In-place inverse FFT including the 1/N factor.
pub fn ifft_in_place(data: &mut [Complex]) {
    transform(data, 1.0);
    let n = data.len() as f64;
    for v in data.iter_mut() {
        v.re /= n;
        v.im /= n;
    }
}

/// Cached forward twiddles `e^{-2 pi i j / n}` for `j < n/2`, shared per size.
fn twiddles(n: usize) -> std::sync::Arc<Vec<Complex>> {
    use std::collections::HashMap;
    use std::sync::{Arc, Mutex, OnceLock};
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Vec<Complex>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap();
    guard
        .entry(n)
        .or_insert_with(|| {
            Arc::new(
                (0..n / 2)
                    .map(|j| {
                        let theta = -2.0 * PI * j as f64 / n as f64;
                        Complex::new(theta.cos(), theta.sin())
                    })
                    .collect(),
            )
        })
        .clone()
}

fn transform(data: &mut [Complex], sign: f64) {
    let n = data.len();
    assert!(n.is_power_of_two(), "FFT length must be a power of two");
    if n < 2 {
        return;
    }
    // bit reversal permutation
    let bits = n.trailing_zeros();
    for i in 0..n {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if j > i {
            data.swap(i, j);
        }
    }
    let table = twiddles(n);
    let mut len = 2;
    while len <= n {
        let half = len / 2;
        let stride = n / len;
        for chunk in data.chunks_mut(len) {
            for i in 0..half {
                let mut w = table[i * stride];
                if sign > 0.0 {
                    w.im = -w.im;
                }
                let a = chunk[i];
                let b = chunk[i + half].mul(w);
                chunk[i] = a.add(b);
                chunk[i + half] = a.sub(b);
            }
        }
        len <<= 1;
    }
}

/// Naive DFT, any length. Reference path for tests and non-power-of-two grids.
pub fn dft_naive(input: &[Complex], inverse: bool) -> Vec<Complex> {
    let n = input.len();
    let sign = if inverse { 1.0 } else { -1.0 };
    let mut out = vec![Complex::ZERO; n];
    for (k, o) in out.iter_mut().enumerate() {
        let mut acc = Complex::ZERO;
        for (m, &x) in input.iter().enumerate() {
            let theta = sign * 2.0 * PI * (k * m % n) as f64 / n as f64;
            acc = acc.add(x.mul(Complex::new(theta.cos(), theta.sin())));
        }
        if inverse {
            acc.re /= n as f64;
            acc.im /= n as f64;
        }
        *o = acc;
    }
    out
}

/// Applies a real spectral multiplier to a real vector: `out = F^{-1} diag(m) F u`.
/// `multipliers[k]` acts on DFT mode `k`; the result is real because the
/// multiplier is even-symmetric for our circulants (`m[k] = m[N-k]`).
pub fn apply_real_multiplier(u: &[f64], multipliers: &[f64], scratch: &mut Vec<Complex>) -> Vec<f64> {
    let mut out = vec![0.0; u.len()];
    apply_real_multiplier_into(u, multipliers, scratch, &mut out);
    out
}

/// Allocation-free variant for integrator hot loops.
pub fn apply_real_multiplier_into(
    u: &[f64],
    multipliers: &[f64],
    scratch: &mut Vec<Complex>,
    out: &mut [f64],
) {
    let n = u.len();
    debug_assert_eq!(multipliers.len(), n);
    debug_assert_eq!(out.len(), n);
    scratch.clear();
    scratch.extend(u.iter().map(|&x| Complex::new(x, 0.0)));
    if n.is_power_of_two() {
        fft_in_place(scratch);
        for (v, &m) in scratch.iter_mut().zip(multipliers) {
            v.re *= m;
            v.im *= m;
        }
        ifft_in_place(scratch);
        for (o, c) in out.iter_mut().zip(scratch.iter()) {
            *o = c.re;
        }
    } else {
        let hat = dft_naive(scratch, false);
        let scaled: Vec<Complex> = hat
            .iter()
            .zip(multipliers)
            .map(|(c, &m)| Complex::new(c.re * m, c.im * m))
            .collect();
        for (o, c) in out.iter_mut().zip(dft_naive(&scaled, true)) {
            *o = c.re;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn roundtrip(n: usize) {
        let mut data: Vec<Complex> = (0..n)
            .map(|i| Complex::new((i as f64 * 0.7).sin(), (i as f64 * 1.3).cos()))
            .collect();
        let orig = data.clone();
        fft_in_place(&mut data);
        ifft_in_place(&mut data);
        for (a, b) in data.iter().zip(&orig) {
            assert!((a.re - b.re).abs() < 1e-12);
            assert!((a.im - b.im).abs() < 1e-12);
        }
    }

    #[test]
    fn fft_roundtrip_various_sizes() {
        for n in [2, 8, 64, 512] {
            roundtrip(n);
        }
    }

    #[test]
    fn fft_matches_naive_dft() {
        let n = 16;
        let input: Vec<Complex> = (0..n)
            .map(|i| Complex::new((i as f64).sin(), 0.25 * i as f64))
            .collect();
        let mut fast = input.clone();
        fft_in_place(&mut fast);
        let slow = dft_naive(&input, false);
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a.re - b.re).abs() < 1e-10);
            assert!((a.im - b.im).abs() < 1e-10);
        }
    }
}
