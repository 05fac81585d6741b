//! Independent reference implementations used by the verification suite.
//!
//! Everything here deliberately avoids the production code paths it checks:
//! dense matrices are assembled entry by entry from the weight table, the
//! matrix exponential uses scaling-and-squaring, and integrals are done by
//! composite quadrature.

use crate::operator::LongRangeOperator;

/// Dense row-major square matrix, test-scale only.
#[derive(Debug, Clone)]
pub struct DenseMatrix {
    pub n: usize,
    pub data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        DenseMatrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }

    pub fn matvec(&self, u: &[f64]) -> Vec<f64> {
        assert_eq!(u.len(), self.n);
        let mut out = vec![0.0; self.n];
        for i in 0..self.n {
            let mut acc = 0.0;
            for j in 0..self.n {
                acc += self.at(i, j) * u[j];
            }
            out[i] = acc;
        }
        out
    }

    pub fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = DenseMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.at(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    *out.at_mut(i, j) += a * other.at(k, j);
                }
            }
        }
        out
    }

    pub fn identity(n: usize) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(n);
        for i in 0..n {
            *m.at_mut(i, i) = 1.0;
        }
        m
    }

    fn max_abs_row_sum(&self) -> f64 {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.at(i, j).abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn scaled(&self, s: f64) -> DenseMatrix {
        DenseMatrix {
            n: self.n,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }
}

/// Full N x N circulant of `gamma A`, assembled from the weight table.
pub fn dense_circulant(op: &LongRangeOperator) -> DenseMatrix {
    let n = op.n;
    let mut m = DenseMatrix::zeros(n);
    for i in 0..n {
        for (jm1, &w) in op.weights.values.iter().enumerate() {
            let j = jm1 + 1;
            *m.at_mut(i, (i + j) % n) += op.scale * w;
            *m.at_mut(i, (i + n - (j % n)) % n) += op.scale * w;
        }
        *m.at_mut(i, i) -= op.scale * op.weights.diag;
    }
    m
}

/// The stencil of `gamma A` on the interior nodes `1..N` under odd
/// (sign-reflecting) extension at the ring's cut, i.e. the generator whose
/// eigenpairs are exactly the sine vectors with the paper-indexed `lambda_k`.
pub fn dense_sine_generator(op: &LongRangeOperator) -> DenseMatrix {
    let n = op.n;
    let dim = n - 1; // interior nodes 1..=N-1
    let mut m = DenseMatrix::zeros(dim);
    let add = |m: &mut DenseMatrix, row: usize, node: i64, coeff: f64| {
        // odd extension: u(0) = u(N) = 0, u(-m) = -u(m), u(N+m) = -u(N-m)
        let (idx, sign) = if node <= 0 {
            (-node, -1.0)
        } else if node >= n as i64 {
            (2 * n as i64 - node, -1.0)
        } else {
            (node, 1.0)
        };
        if idx >= 1 && idx <= dim as i64 {
            *m.at_mut(row, (idx - 1) as usize) += sign * coeff;
        }
    };
    for i in 1..=dim {
        let row = i - 1;
        for (jm1, &w) in op.weights.values.iter().enumerate() {
            let j = (jm1 + 1) as i64;
            add(&mut m, row, i as i64 + j, op.scale * w);
            add(&mut m, row, i as i64 - j, op.scale * w);
        }
        *m.at_mut(row, row) -= op.scale * op.weights.diag;
    }
    m
}

/// `e^M` by scaling and squaring with a Taylor core.
pub fn expm(m: &DenseMatrix) -> DenseMatrix {
    let norm = m.max_abs_row_sum();
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scaled = m.scaled(0.5f64.powi(squarings as i32));
    let mut result = DenseMatrix::identity(m.n);
    let mut term = DenseMatrix::identity(m.n);
    for k in 1..=30 {
        term = term.matmul(&scaled).scaled(1.0 / k as f64);
        let mag = term.max_abs_row_sum();
        for (r, t) in result.data.iter_mut().zip(&term.data) {
            *r += t;
        }
        if mag < 1e-18 {
            break;
        }
    }
    for _ in 0..squarings {
        result = result.matmul(&result);
    }
    result
}

/// Composite Simpson rule over `[a, b]` with `2m` panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, half_panels: usize) -> f64 {
    let n = 2 * half_panels;
    let dx = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * dx);
    }
    acc * dx / 3.0
}

/// Least-squares slope of `ln(y)` against `ln(x)`; reference for rate fits.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let cov: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    cov / var
}
