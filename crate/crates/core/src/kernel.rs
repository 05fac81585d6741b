//! Interaction kernels and their normalized lattice samples.
//!
//! A kernel profile `J: [0,1] -> R+` is sampled at `j/R` for `j = 1..R` and
//! rescaled by the constant `c` that enforces the discrete second-moment
//! condition `(c/R^3) * sum_j J(j/R) j^2 = 1`, which calibrates the wide
//! stencil to the Laplacian. The constant is folded into the stored values so
//! downstream code never re-applies it.

use crate::error::{Error, Result};

/// Interaction profile on `[0,1]`.
#[derive(Debug, Clone)]
pub enum WeightKernel {
    /// `J(x) = 1` on `[0,1]`.
    Indicator,
    /// `J(x) = exp(-x)`.
    Exponential,
    /// Tabulated profile `(x, J(x))` with ascending `x` in `[0,1]`,
    /// linearly interpolated at the sample points.
    Custom(Vec<(f64, f64)>),
}

impl WeightKernel {
    pub fn evaluate(&self, x: f64) -> f64 {
        match self {
            WeightKernel::Indicator => 1.0,
            WeightKernel::Exponential => (-x).exp(),
            WeightKernel::Custom(table) => interpolate(table, x),
        }
    }

    /// Loads a tabulated kernel from two-column text (`x  J(x)` per line,
    /// `#` comments allowed). `x` must be ascending in `[0,1]`, `J >= 0`.
    pub fn from_table_str(text: &str) -> Result<Self> {
        let mut table = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut it = line.split_whitespace();
            let (x, j) = match (it.next(), it.next()) {
                (Some(a), Some(b)) => (a, b),
                _ => {
                    return Err(Error::ConfigInvalid(format!(
                        "kernel table line {}: expected two columns",
                        lineno + 1
                    )))
                }
            };
            let x: f64 = x.parse().map_err(|_| {
                Error::ConfigInvalid(format!("kernel table line {}: bad x value", lineno + 1))
            })?;
            let j: f64 = j.parse().map_err(|_| {
                Error::ConfigInvalid(format!("kernel table line {}: bad J value", lineno + 1))
            })?;
            if !(0.0..=1.0).contains(&x) || !j.is_finite() || j < 0.0 {
                return Err(Error::ConfigInvalid(format!(
                    "kernel table line {}: need x in [0,1] and J >= 0",
                    lineno + 1
                )));
            }
            if let Some(&(prev, _)) = table.last() {
                if x <= prev {
                    return Err(Error::ConfigInvalid(format!(
                        "kernel table line {}: x must be strictly ascending",
                        lineno + 1
                    )));
                }
            }
            table.push((x, j));
        }
        if table.len() < 2 {
            return Err(Error::ConfigInvalid(
                "kernel table needs at least two rows".into(),
            ));
        }
        Ok(WeightKernel::Custom(table))
    }

    pub fn label(&self) -> &'static str {
        match self {
            WeightKernel::Indicator => "indicator",
            WeightKernel::Exponential => "exponential",
            WeightKernel::Custom(_) => "custom",
        }
    }
}

fn interpolate(table: &[(f64, f64)], x: f64) -> f64 {
    if x <= table[0].0 {
        return table[0].1;
    }
    if x >= table[table.len() - 1].0 {
        return table[table.len() - 1].1;
    }
    let idx = table.partition_point(|&(xi, _)| xi <= x);
    let (x0, y0) = table[idx - 1];
    let (x1, y1) = table[idx];
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

/// Normalized lattice samples of a kernel: `values[j-1] = c * J(j/R)` with
/// `c = R^3 / sum_j J(j/R) j^2`, so `(1/R^3) sum_j values[j-1] j^2 = 1`.
#[derive(Debug, Clone)]
pub struct DiscreteWeights {
    pub radius: usize,
    /// `c * J(j/R)` for `j = 1..=R`.
    pub values: Vec<f64>,
    /// Normalization constant, kept for reporting; already folded into `values`.
    pub c: f64,
    /// Scaling exponent used to derive the radius (metadata).
    pub zeta: f64,
    /// Weight at the reference site: `2 * sum_j values[j-1]`.
    pub diag: f64,
}

impl DiscreteWeights {
    /// Discrete second moment `(1/R^3) sum_j values[j] j^2`; equals 1 by
    /// construction up to rounding.
    pub fn second_moment(&self) -> f64 {
        let r3 = (self.radius as f64).powi(3);
        self.values
            .iter()
            .enumerate()
            .map(|(i, v)| v * ((i + 1) as f64).powi(2))
            .sum::<f64>()
            / r3
    }

    /// Discrete fourth moment `(1/R^3) sum_j values[j] j^4`. Grows like
    /// `h^{-2 zeta}` when `R = ceil(h^{-zeta})` and drives the consistency
    /// error prediction.
    pub fn fourth_moment(&self) -> f64 {
        let r3 = (self.radius as f64).powi(3);
        self.values
            .iter()
            .enumerate()
            .map(|(i, v)| v * ((i + 1) as f64).powi(4))
            .sum::<f64>()
            / r3
    }
}

/// Samples `kernel` at `j/R`, `j = 1..=R`, and normalizes so the discrete
/// second moment is exactly 1.
pub fn build_weights(kernel: &WeightKernel, radius: usize, zeta: f64) -> Result<DiscreteWeights> {
    if radius == 0 {
        return Err(Error::ConfigInvalid("radius must be >= 1".into()));
    }
    if !(0.0..0.5).contains(&zeta) {
        return Err(Error::ConfigInvalid(format!(
            "zeta = {zeta} outside [0, 1/2)"
        )));
    }
    let r = radius as f64;
    let raw: Vec<f64> = (1..=radius).map(|j| kernel.evaluate(j as f64 / r)).collect();
    if raw.iter().any(|&v| v < 0.0 || !v.is_finite()) {
        return Err(Error::ConfigInvalid(
            "kernel must be nonnegative and finite on (0, 1]".into(),
        ));
    }
    let second: f64 = raw
        .iter()
        .enumerate()
        .map(|(i, v)| v * ((i + 1) as f64).powi(2))
        .sum();
    if second == 0.0 {
        return Err(Error::ZeroSecondMoment { radius });
    }
    let c = r.powi(3) / second;
    let values: Vec<f64> = raw.iter().map(|v| c * v).collect();
    let diag = 2.0 * values.iter().sum::<f64>();
    Ok(DiscreteWeights {
        radius,
        values,
        c,
        zeta,
        diag,
    })
}

/// Interaction radius for grid spacing `h = 1/N`: `R = max(1, ceil(h^{-zeta}))`,
/// required to stay shorter than half the ring.
///
/// A small guard is subtracted before the ceiling so values that are integral
/// up to rounding (e.g. `h^0 = 1`) do not get bumped to the next integer.
pub fn radius_for(h: f64, zeta: f64) -> Result<usize> {
    if h <= 0.0 || h > 0.25 {
        return Err(Error::ConfigInvalid(format!(
            "grid spacing h = {h} must be 1/N with N >= 4"
        )));
    }
    let n = (1.0 / h).round() as usize;
    if ((n as f64) - 1.0 / h).abs() > 1e-9 {
        return Err(Error::ConfigInvalid(format!("h = {h} is not 1/N")));
    }
    if !(0.0..0.5).contains(&zeta) {
        return Err(Error::ConfigInvalid(format!(
            "zeta = {zeta} outside [0, 1/2)"
        )));
    }
    let raw = h.powf(-zeta);
    let radius = ((raw - 1e-9).ceil() as usize).max(1);
    if radius >= n / 2 {
        return Err(Error::RadiusTooLarge {
            radius,
            half_n: n / 2,
        });
    }
    Ok(radius)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn indicator_r1_gives_unit_constant() {
        let w = build_weights(&WeightKernel::Indicator, 1, 0.25).unwrap();
        assert_eq!(w.c, 1.0);
        assert_eq!(w.values, vec![1.0]);
        assert_eq!(w.diag, 2.0);
    }

    #[test]
    fn indicator_r2_matches_direct_sum() {
        // c = R^3 / sum j^2 = 8 / 5
        let w = build_weights(&WeightKernel::Indicator, 2, 0.25).unwrap();
        assert_relative_eq!(w.c, 1.6, max_relative = 1e-15);
        assert_relative_eq!(w.second_moment(), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn exponential_r4_matches_direct_sum() {
        // Independent oracle: direct summation of the defining identity.
        let denom: f64 = (1..=4).map(|j| (-(j as f64) / 4.0).exp() * (j * j) as f64).sum();
        let expected_c = 64.0 / denom;
        let w = build_weights(&WeightKernel::Exponential, 4, 0.25).unwrap();
        assert_relative_eq!(w.c, expected_c, max_relative = 1e-14);
        assert_relative_eq!(w.second_moment(), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn fourth_moment_examples() {
        let w1 = build_weights(&WeightKernel::Indicator, 1, 0.25).unwrap();
        assert_relative_eq!(w1.fourth_moment(), 1.0, max_relative = 1e-15);
        // (8/5) * (1 + 16) / 8 = 17/5
        let w2 = build_weights(&WeightKernel::Indicator, 2, 0.25).unwrap();
        assert_relative_eq!(w2.fourth_moment(), 3.4, max_relative = 1e-14);
    }

    #[test]
    fn fourth_moment_grows_like_h_to_minus_two_zeta() {
        // log-log fit oracle over h = 2^-4 .. 2^-10 at zeta = 0.4
        let zeta = 0.4;
        let mut hs = Vec::new();
        let mut m4 = Vec::new();
        for e in 4..=10 {
            let h = 0.5f64.powi(e);
            let r = radius_for(h, zeta).unwrap();
            let w = build_weights(&WeightKernel::Indicator, r, zeta).unwrap();
            hs.push(h.ln());
            m4.push(w.fourth_moment().ln());
        }
        let n = hs.len() as f64;
        let mx = hs.iter().sum::<f64>() / n;
        let my = m4.iter().sum::<f64>() / n;
        let slope: f64 = hs
            .iter()
            .zip(&m4)
            .map(|(x, y)| (x - mx) * (y - my))
            .sum::<f64>()
            / hs.iter().map(|x| (x - mx) * (x - mx)).sum::<f64>();
        assert!(
            (slope - (-2.0 * zeta)).abs() < 0.15,
            "fitted exponent {slope} vs expected {}",
            -2.0 * zeta
        );
    }

    #[test]
    fn radius_examples() {
        assert_eq!(radius_for(1.0 / 64.0, 0.4).unwrap(), 6);
        assert_eq!(radius_for(0.25, 0.0).unwrap(), 1);
        let r = radius_for(1.0 / 16.0, 0.49).unwrap();
        assert_eq!(r, 4);
        assert!(r < 8);
    }

    #[test]
    fn radius_too_large_rejected() {
        match radius_for(0.25, 0.49) {
            Err(Error::RadiusTooLarge { .. }) => {}
            other => panic!("expected RadiusTooLarge, got {other:?}"),
        }
    }

    #[test]
    fn diagonal_dominance_and_positivity() {
        for kernel in [WeightKernel::Indicator, WeightKernel::Exponential] {
            for r in [1usize, 2, 5, 17] {
                let w = build_weights(&kernel, r, 0.3).unwrap();
                let twice_sum = 2.0 * w.values.iter().sum::<f64>();
                assert_eq!(w.diag, twice_sum);
                assert!(w.values.iter().all(|&v| v >= 0.0));
                assert!((w.second_moment() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn monotone_sampling() {
        let w = build_weights(&WeightKernel::Indicator, 6, 0.3).unwrap();
        assert!(w.values.iter().all(|&v| (v - w.c).abs() < 1e-15));
        let w = build_weights(&WeightKernel::Exponential, 6, 0.3).unwrap();
        for pair in w.values.windows(2) {
            assert!(pair[1] < pair[0]);
        }
    }

    #[test]
    fn custom_kernel_from_table() {
        let table = "# x J\n0.0 1.0\n0.5 0.5\n1.0 0.25\n";
        let kernel = WeightKernel::from_table_str(table).unwrap();
        assert_relative_eq!(kernel.evaluate(0.25), 0.75, max_relative = 1e-15);
        assert_relative_eq!(kernel.evaluate(0.75), 0.375, max_relative = 1e-15);
        let w = build_weights(&kernel, 4, 0.25).unwrap();
        assert_relative_eq!(w.second_moment(), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn zero_kernel_rejected() {
        let kernel = WeightKernel::Custom(vec![(0.0, 0.0), (1.0, 0.0)]);
        match build_weights(&kernel, 3, 0.25) {
            Err(Error::ZeroSecondMoment { radius: 3 }) => {}
            other => panic!("expected ZeroSecondMoment, got {other:?}"),
        }
    }

    proptest::proptest! {
        #[test]
        fn normalization_holds_for_random_custom_kernels(
            seed_vals in proptest::collection::vec(0.05f64..2.0, 3..8),
            r in 1usize..40,
        ) {
            let n = seed_vals.len();
            let table: Vec<(f64, f64)> = seed_vals
                .iter()
                .enumerate()
                .map(|(i, &v)| (i as f64 / (n - 1) as f64, v))
                .collect();
            let w = build_weights(&WeightKernel::Custom(table), r, 0.25).unwrap();
            proptest::prop_assert!((w.second_moment() - 1.0).abs() < 1e-12);
            proptest::prop_assert!((w.diag - 2.0 * w.values.iter().sum::<f64>()).abs() == 0.0);
        }
    }
}
