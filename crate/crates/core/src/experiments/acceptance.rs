//! The acceptance suite: every convergence claim, bound, and exactness
//! property the engine is expected to reproduce, each pinned to concrete
//! parameters and tolerances and emitting CSV artifacts.
//!
//! Criterion 1 asserts the eigenvalue sandwich `4 gamma k^2 <= lambda_k <=
//! gamma pi^2 k^2` for every paper index `k = 1..=N`, exactly as claimed.
//! The lower half of that claim is provable only for `k <= N/R` (the
//! `sin^2 x >= 4 x^2 / pi^2` step needs `k h j <= 1`), and for `R >= 2` the
//! operator genuinely violates it at high `k`, so the criterion fails and
//! the outcome reports the violation structure rather than hiding it. The
//! restricted sandwich is verified in the operator unit tests.

use crate::error::Result;
use crate::experiments::studies::{
    dt_for_level, study_comparison_principle, study_moment_boundedness,
    study_noise_diagnostics, study_semigroup_convergence,
    study_stochastic_convolution_regularity, study_strong_convergence, study_transition_times,
    StrongConfig, TransitionConfig,
};
use crate::experiments::{fit_rate, median};
use crate::kernel::WeightKernel;
use crate::noise::{keyed_gauss, stream};
use crate::operator::LongRangeOperator;
use crate::oracles::{dense_circulant, dense_sine_generator, expm, simpson};
use crate::report::{CsvCell, CsvTable};
use crate::semigroup::DiscreteSemigroup;
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::time::Instant;

#[derive(Debug, Clone)]
pub struct CriterionOutcome {
    pub id: u32,
    pub name: &'static str,
    pub pass: bool,
    pub details: Vec<String>,
    pub metrics: BTreeMap<String, f64>,
    /// `(file name, contents)`; all CSV, deterministic bytes.
    pub artifacts: Vec<(String, String)>,
    pub runtime_secs: f64,
}

impl CriterionOutcome {
    fn new(id: u32, name: &'static str) -> Self {
        CriterionOutcome {
            id,
            name,
            pass: false,
            details: Vec::new(),
            metrics: BTreeMap::new(),
            artifacts: Vec::new(),
            runtime_secs: 0.0,
        }
    }

    pub fn summary_line(&self) -> String {
        format!(
            "criterion {:02} {} - {} ({:.1}s)",
            self.id,
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.runtime_secs
        )
    }
}

pub const CRITERION_COUNT: u32 = 15;

/// Runs criteria 1..=14 in order (15, determinism, re-runs the suite and is
/// driven separately through [`run_determinism_check`]).
pub fn run_suite(seed: u64) -> Result<Vec<CriterionOutcome>> {
    (1..=14).map(|id| run_criterion(id, seed)).collect()
}

pub fn run_criterion(id: u32, seed: u64) -> Result<CriterionOutcome> {
    let start = Instant::now();
    let mut outcome = match id {
        1 => spectral_sandwich()?,
        2 => eigenvalue_rate()?,
        3 => inverse_trace()?,
        4 => operator_oracle(seed)?,
        5 => consistency_study()?,
        6 => semigroup_convergence()?,
        7 => l2_functionals()?,
        8 => noise_exactness(seed)?,
        9 => regularity_exponents(seed)?,
        10 => comparison_principle(seed)?,
        11 => moment_boundedness(seed)?,
        12 => strong_convergence(seed)?,
        13 => pathwise_convergence(seed)?,
        14 => transition_times(seed)?,
        other => {
            return Err(crate::error::Error::ConfigInvalid(format!(
                "criterion {other} is not runnable standalone"
            )))
        }
    };
    outcome.runtime_secs = start.elapsed().as_secs_f64();
    Ok(outcome)
}

fn test_matrix_ns() -> [usize; 6] {
    [8, 16, 32, 64, 128, 256]
}

fn test_matrix_zetas() -> [f64; 4] {
    [0.1, 0.25, 0.4, 0.49]
}

fn kernels() -> [WeightKernel; 2] {
    [WeightKernel::Indicator, WeightKernel::Exponential]
}

// 1 -----------------------------------------------------------------------
fn spectral_sandwich() -> Result<CriterionOutcome> {
    let mut out = CriterionOutcome::new(1, "spectral sandwich 4k^2 <= lambda_k <= pi^2 k^2");
    let gamma = 1.0;
    let slack = 1e-10;
    let mut csv = CsvTable::new(vec![
        "n", "zeta", "kernel", "radius", "violations", "first_bad_k", "provable_up_to",
    ]);
    let mut total_violations = 0usize;
    let mut upper_violations = 0usize;
    for &n in &test_matrix_ns() {
        for &zeta in &test_matrix_zetas() {
            for kernel in kernels() {
                let op = LongRangeOperator::from_grid(&kernel, n, zeta, gamma)?;
                let mut bad = 0usize;
                let mut first_bad = 0usize;
                for k in 1..=n {
                    let lam = op.eigenvalue_paper(k);
                    let kk = (k * k) as f64;
                    if lam > gamma * PI * PI * kk + slack {
                        upper_violations += 1;
                    }
                    if lam < 4.0 * gamma * kk - slack {
                        bad += 1;
                        if first_bad == 0 {
                            first_bad = k;
                        }
                    }
                }
                total_violations += bad;
                csv.row(vec![
                    CsvCell::U(n as u64),
                    CsvCell::F(zeta),
                    CsvCell::S(kernel.label().into()),
                    CsvCell::U(op.weights.radius as u64),
                    CsvCell::U(bad as u64),
                    CsvCell::U(first_bad as u64),
                    CsvCell::U((n / op.weights.radius) as u64),
                ]);
            }
        }
    }
    out.metrics.insert("lower_bound_violations".into(), total_violations as f64);
    out.metrics.insert("upper_bound_violations".into(), upper_violations as f64);
    out.pass = total_violations == 0 && upper_violations == 0;
    out.details.push(format!(
        "upper bound held everywhere ({upper_violations} violations); lower bound violated at {total_violations} indices"
    ));
    if !out.pass {
        out.details.push(
            "the lower bound is provable only for k <= N/R; with R = ceil(h^-zeta) >= 2 the \
             operator genuinely violates it at high k (first_bad_k tracks ~N/R per row), so \
             this criterion cannot pass as stated"
                .into(),
        );
    }
    out.artifacts.push(("sandwich.csv".into(), csv.render()));
    Ok(out)
}

// 2 -----------------------------------------------------------------------
fn eigenvalue_rate() -> Result<CriterionOutcome> {
    let mut out = CriterionOutcome::new(2, "eigenvalue gap closes at order 2 - 2 zeta");
    let mut csv = CsvTable::new(vec!["zeta", "k", "exponent", "required", "r2"]);
    let mut pass = true;
    for &zeta in &test_matrix_zetas() {
        for k in 1..=3usize {
            let mut hs = Vec::new();
            let mut gaps = Vec::new();
            for e in 4..=10 {
                let n = 1usize << e;
                let op = LongRangeOperator::from_grid(&WeightKernel::Indicator, n, zeta, 1.0)?;
                hs.push(op.h);
                gaps.push(op.eigenvalue_gap_to_continuum(k).max(1e-300));
            }
            let fit = fit_rate(&hs, &gaps)?;
            let required = 2.0 - 2.0 * zeta - 0.25;
            if fit.exponent < required {
                pass = false;
            }
            csv.row(vec![
                CsvCell::F(zeta),
                CsvCell::U(k as u64),
                CsvCell::F(fit.exponent),
                CsvCell::F(required),
                CsvCell::F(fit.r2),
            ]);
        }
    }
    out.pass = pass;
    out.artifacts.push(("rates.csv".into(), csv.render()));
    Ok(out)
}

// 3 -----------------------------------------------------------------------
fn inverse_trace() -> Result<CriterionOutcome> {
    let mut out = CriterionOutcome::new(3, "inverse trace stays bounded as h -> 0");
    let mut csv = CsvTable::new(vec!["zeta", "h", "value", "slope"]);
    let mut pass = true;
    for &zeta in &[0.25, 0.45] {
        let mut hs = Vec::new();
        let mut values = Vec::new();
        for e in 4..=10 {
            let n = 1usize << e;
            let op = LongRangeOperator::from_grid(&WeightKernel::Indicator, n, zeta, 1.0)?;
            hs.push(op.h);
            values.push(op.inverse_trace_bound()?);
        }
        let fit = fit_rate(&hs, &values)?;
        if fit.exponent.abs() >= 0.1 {
            pass = false;
        }
        for (h, v) in hs.iter().zip(&values) {
            csv.row(vec![
                CsvCell::F(zeta),
                CsvCell::F(*h),
                CsvCell::F(*v),
                CsvCell::F(fit.exponent),
            ]);
        }
        out.metrics.insert(format!("slope_zeta_{zeta}"), fit.exponent);
    }
    out.pass = pass;
    out.artifacts.push(("inverse_trace.csv".into(), csv.render()));
    Ok(out)
}

// 4 -----------------------------------------------------------------------
fn operator_oracle(seed: u64) -> Result<CriterionOutcome> {
    let mut out = CriterionOutcome::new(4, "stencil equals dense circulant and spectral path");
    let configs = [(8usize, 0.1), (16, 0.25), (32, 0.4), (64, 0.49)];
    let mut max_dense = 0.0f64;
    let mut max_spectral = 0.0f64;
    let mut counter = 0u64;
    for &(n, zeta) in &configs {
        let op = LongRangeOperator::from_grid(&WeightKernel::Exponential, n, zeta, 1.0)?;
        let dense = dense_circulant(&op);
        for _ in 0..250 {
            let u: Vec<f64> = (0..n)
                .map(|i| {
                    counter += 1;
                    keyed_gauss(seed, stream::GENERIC, counter, i as u64)
                })
                .collect();
            let fast = op.apply(&u)?;
            let reference = dense.matvec(&u);
            let spectral = op.apply_spectral(&u)?;
            for i in 0..n {
                max_dense = max_dense.max((fast[i] - reference[i]).abs());
                max_spectral = max_spectral.max((fast[i] - spectral[i]).abs());
            }
        }
    }
    out.metrics.insert("max_dense_gap".into(), max_dense);
    out.metrics.insert("max_spectral_gap".into(), max_spectral);
    out.pass = max_dense < 1e-10 && max_spectral < 1e-10;
    let mut csv = CsvTable::new(vec!["check", "max_abs_gap", "tolerance"]);
    csv.row(vec![
        CsvCell::S("dense_circulant".into()),
        CsvCell::F(max_dense),
        CsvCell::F(1e-10),
    ]);
    csv.row(vec![
        CsvCell::S("spectral_path".into()),
        CsvCell::F(max_spectral),
        CsvCell::F(1e-10),
    ]);
    out.artifacts.push(("oracle.csv".into(), csv.render()));
    Ok(out)
}

// 5 -----------------------------------------------------------------------
fn consistency_study() -> Result<CriterionOutcome> {
    let mut out = CriterionOutcome::new(5, "consistency order for sin(2 pi x)");
    let f = |x: f64| (2.0 * PI * x).sin();
    let d2f = |x: f64| -(2.0 * PI).powi(2) * (2.0 * PI * x).sin();
    let mut csv = CsvTable::new(vec!["zeta", "exponent", "required", "supports_h2"]);
    let mut pass = true;
    for &zeta in &test_matrix_zetas() {
        let mut hs = Vec::new();
        let mut errs = Vec::new();
        for e in 4..=9 {
            let n = 1usize << e;
            let op = LongRangeOperator::from_grid(&WeightKernel::Indicator, n, zeta, 1.0)?;
            hs.push(op.h);
            errs.push(op.consistency_error(f, d2f));
        }
        let fit = fit_rate(&hs, &errs)?;
        let required = 2.0 - 2.0 * zeta - 0.2;
        if fit.exponent < required {
            pass = false;
        }
        // informational: does the data support a full second-order claim?
        let supports_h2 = fit.exponent >= 1.8;
        csv.row(vec![
            CsvCell::F(zeta),
            CsvCell::F(fit.exponent),
            CsvCell::F(required),
            CsvCell::S(supports_h2.to_string()),
        ]);
        out.details.push(format!(
            "zeta = {zeta}: fitted order {:.3} (required {required:.3}); second-order claim {}",
            fit.exponent,
            if supports_h2 { "supported" } else { "not supported: order tracks 2 - 2 zeta" },
        ));
    }
    out.pass = pass;
    out.artifacts.push(("consistency.csv".into(), csv.render()));
    Ok(out)
}

// 6 -----------------------------------------------------------------------
fn semigroup_convergence() -> Result<CriterionOutcome> {
    let mut out = CriterionOutcome::new(6, "kernel distance order and matrix-exponential match");
    let ns: Vec<usize> = (4..=9).map(|e| 1usize << e).collect();
    let study = study_semigroup_convergence(&ns, 0.25, 1.0, 0.1)?;
    let mut csv = CsvTable::new(vec!["h", "sup_distance", "fitted_rate"]);
    for (h, d) in study.hs.iter().zip(&study.distances) {
        csv.row(vec![
            CsvCell::F(*h),
            CsvCell::F(*d),
            CsvCell::F(study.fit.exponent),
        ]);
    }
    out.metrics.insert("fitted_rate".into(), study.fit.exponent);

    // dense matrix-exponential oracle on the sine-basis generator
    let mut max_gap = 0.0f64;
    for (n, zeta) in [(8usize, 0.1), (16, 0.25), (32, 0.25)] {
        let op = LongRangeOperator::from_grid(&WeightKernel::Indicator, n, zeta, 1.0)?;
        let sg = DiscreteSemigroup::from_operator(&op);
        let t = 0.1;
        let prop = expm(&dense_sine_generator(&op).scaled(t));
        for j in [n / 2, n / 4] {
            for i in 1..n {
                let oracle = prop.at(i - 1, j - 1) / op.h;
                let direct = sg.eval(t, i as f64 * op.h, j as f64 * op.h);
                max_gap = max_gap.max((oracle - direct).abs());
            }
        }
    }
    out.metrics.insert("expm_max_gap".into(), max_gap);
    out.pass = study.fit.exponent >= 1.25 && max_gap < 1e-8;
    out.details.push(format!(
        "fitted rate {:.3} (required 1.25), expm gap {max_gap:.3e} (tolerance 1e-8)",
        study.fit.exponent
    ));
    out.artifacts.push(("semigroup.csv".into(), csv.render()));
    Ok(out)
}

// 7 -----------------------------------------------------------------------
fn l2_functionals() -> Result<CriterionOutcome> {
    let mut out = CriterionOutcome::new(7, "L2 functionals match quadrature and envelopes");
    let op = LongRangeOperator::from_grid(&WeightKernel::Indicator, 32, 0.25, 1.0)?;
    let sg = DiscreteSemigroup::from_operator(&op);
    let x = 0.40625; // node 13 of 32
    let mut pass = true;
    let mut csv = CsvTable::new(vec![
        "t", "functional", "closed_form", "quadrature", "rel_gap", "envelope",
    ]);
    for &t in &[0.05, 0.2, 1.0] {
        let f = sg.l2_functionals(t, x)?;
        // exact-in-space quadrature (piecewise-quadratic integrand), Simpson in time
        let quad_space = pl_square_integral(&sg, t, x);
        let quad_full = {
            let n = sg.n;
            let mut acc = 0.0;
            for m in 0..(2 * n) {
                let xa = m as f64 / (2 * n) as f64;
                let xb = (m + 1) as f64 / (2 * n) as f64;
                let xm = 0.5 * (xa + xb);
                acc += (pl_square_integral(&sg, t, xa)
                    + 4.0 * pl_square_integral(&sg, t, xm)
                    + pl_square_integral(&sg, t, xb))
                    * (xb - xa)
                    / 6.0;
            }
            acc
        };
        // graded substitution s = t tau^4 resolves the boundary layer at
        // s -> 0, where every mode still contributes to the squared kernel
        let quad_space_time = simpson(
            |tau| pl_square_integral(&sg, (t * tau.powi(4)).max(1e-300), x) * 4.0 * t * tau.powi(3),
            0.0,
            1.0,
            300,
        );
        let rows = [
            ("space", f.space, quad_space),
            ("full", f.full, quad_full),
            ("space_time", f.space_time, quad_space_time),
        ];
        let envelope_space = PI.sqrt() / (2.0 * std::f64::consts::SQRT_2 * (sg.gamma * t).sqrt()) + 2.0;
        let envelope_st = 3.0 / (8.0 * sg.gamma) * (8.0 * sg.gamma * t).sqrt().min(1.0);
        for (name, closed, quad) in rows {
            let rel = (closed - quad).abs() / quad.abs().max(1e-300);
            let envelope = match name {
                "space" => envelope_space,
                "space_time" => envelope_st,
                _ => f64::INFINITY,
            };
            if rel >= 1e-3 || closed > envelope {
                pass = false;
            }
            csv.row(vec![
                CsvCell::F(t),
                CsvCell::S(name.into()),
                CsvCell::F(closed),
                CsvCell::F(quad),
                CsvCell::F(rel),
                CsvCell::F(envelope),
            ]);
        }
    }
    out.pass = pass;
    out.artifacts.push(("l2_functionals.csv".into(), csv.render()));
    Ok(out)
}

/// Exact `int_0^1 g_t(x, y)^2 dy`: the integrand is piecewise quadratic in
/// `y`, so per-cell Simpson is exact.
fn pl_square_integral(sg: &DiscreteSemigroup, t: f64, x: f64) -> f64 {
    let n = sg.n;
    let h = sg.h;
    let mut acc = 0.0;
    for m in 0..n {
        let ya = m as f64 * h;
        let yb = ya + h;
        let ym = ya + 0.5 * h;
        let ga = sg.eval(t, x, ya);
        let gm = sg.eval(t, x, ym);
        let gb = sg.eval(t, x, yb);
        acc += (ga * ga + 4.0 * gm * gm + gb * gb) * h / 6.0;
    }
    acc
}

// 8 -----------------------------------------------------------------------
fn noise_exactness(seed: u64) -> Result<CriterionOutcome> {
    let mut out = CriterionOutcome::new(8, "noise aggregation exact; increments normal and independent");
    let diag = study_noise_diagnostics(seed)?;
    out.metrics.insert("ks_statistic".into(), diag.ks_statistic);
    out.metrics.insert("ks_critical".into(), diag.ks_critical);
    out.metrics.insert("variance_rel_err".into(), diag.increment_variance_rel_err);
    out.metrics.insert("disjoint_correlation".into(), diag.disjoint_correlation);
    out.metrics.insert(
        "convolution_variance_rel_err".into(),
        diag.convolution_variance_rel_err,
    );
    out.metrics.insert("chain_exact".into(), diag.chain_exact as u8 as f64);
    out.pass = diag.pass;
    let mut csv = CsvTable::new(vec!["check", "value", "threshold"]);
    csv.row(vec![
        CsvCell::S("chain_exact".into()),
        CsvCell::F(diag.chain_exact as u8 as f64),
        CsvCell::F(1.0),
    ]);
    csv.row(vec![
        CsvCell::S("ks_statistic".into()),
        CsvCell::F(diag.ks_statistic),
        CsvCell::F(diag.ks_critical),
    ]);
    csv.row(vec![
        CsvCell::S("variance_rel_err".into()),
        CsvCell::F(diag.increment_variance_rel_err),
        CsvCell::F(0.02),
    ]);
    csv.row(vec![
        CsvCell::S("disjoint_correlation".into()),
        CsvCell::F(diag.disjoint_correlation),
        CsvCell::F(0.01),
    ]);
    csv.row(vec![
        CsvCell::S("convolution_variance_rel_err".into()),
        CsvCell::F(diag.convolution_variance_rel_err),
        CsvCell::F(0.03),
    ]);
    out.artifacts.push(("noise.csv".into(), csv.render()));
    Ok(out)
}

// 9 -----------------------------------------------------------------------
fn regularity_exponents(seed: u64) -> Result<CriterionOutcome> {
    let mut out = CriterionOutcome::new(9, "structure-function exponents of the noise field");
    // zeta = 0.1 keeps the modes beyond N/R (whose eigenvalues fall short of
    // 4 gamma k^2) from flooring the spatial structure function
    let study = study_stochastic_convolution_regularity(512, 0.1, 1.0, 4000, seed)?;
    out.metrics.insert("temporal_exponent".into(), study.temporal_exponent);
    out.metrics.insert("spatial_exponent".into(), study.spatial_exponent);
    out.pass = (0.4..=0.6).contains(&study.temporal_exponent)
        && (0.85..=1.15).contains(&study.spatial_exponent);
    out.details.push(format!(
        "temporal {:.3} in [0.40, 0.60], spatial {:.3} in [0.85, 1.15]",
        study.temporal_exponent, study.spatial_exponent
    ));
    let mut csv = CsvTable::new(vec!["axis", "lag", "structure_function"]);
    for (l, v) in study.temporal_lags.iter().zip(&study.temporal_sf) {
        csv.row(vec![CsvCell::S("time".into()), CsvCell::F(*l), CsvCell::F(*v)]);
    }
    for (l, v) in study.spatial_lags.iter().zip(&study.spatial_sf) {
        csv.row(vec![CsvCell::S("space".into()), CsvCell::F(*l), CsvCell::F(*v)]);
    }
    out.artifacts.push(("regularity.csv".into(), csv.render()));
    Ok(out)
}

// 10 ----------------------------------------------------------------------
fn comparison_principle(seed: u64) -> Result<CriterionOutcome> {
    let mut out = CriterionOutcome::new(10, "pathwise comparison across 100 seeds");
    let study = study_comparison_principle(100, seed)?;
    out.metrics.insert("max_lower_violation".into(), study.max_lower_violation);
    out.metrics.insert("max_upper_violation".into(), study.max_upper_violation);
    out.metrics.insert("max_truncation_gap".into(), study.max_truncation_gap);
    out.metrics.insert("slack".into(), study.slack);
    out.pass = study.pass;
    let mut csv = CsvTable::new(vec!["check", "value", "threshold"]);
    csv.row(vec![
        CsvCell::S("lower_violation".into()),
        CsvCell::F(study.max_lower_violation),
        CsvCell::F(study.slack),
    ]);
    csv.row(vec![
        CsvCell::S("upper_violation".into()),
        CsvCell::F(study.max_upper_violation),
        CsvCell::F(study.slack),
    ]);
    csv.row(vec![
        CsvCell::S("truncation_gap".into()),
        CsvCell::F(study.max_truncation_gap),
        CsvCell::F(1e-12),
    ]);
    out.artifacts.push(("comparison.csv".into(), csv.render()));
    Ok(out)
}

// 11 ----------------------------------------------------------------------
fn moment_boundedness(seed: u64) -> Result<CriterionOutcome> {
    let mut out = CriterionOutcome::new(11, "fourth moment of sup |u| uniform in h");
    let ns = [16usize, 32, 64, 128];
    let values = study_moment_boundedness(&ns, 0.25, 1.0, 0.25, 1.0, 200, seed)?;
    let max = values.iter().cloned().fold(f64::MIN, f64::max);
    let min = values.iter().cloned().fold(f64::MAX, f64::min);
    out.metrics.insert("max_over_min".into(), max / min);
    out.pass = max / min <= 1.5;
    let mut csv = CsvTable::new(vec!["n", "e_sup4"]);
    for (n, v) in ns.iter().zip(&values) {
        csv.row(vec![CsvCell::U(*n as u64), CsvCell::F(*v)]);
    }
    out.details.push(format!("max/min = {:.3} (threshold 1.5)", max / min));
    out.artifacts.push(("moments.csv".into(), csv.render()));
    Ok(out)
}

// 12 / 13 -----------------------------------------------------------------
fn strong_study_cached(seed: u64) -> Result<crate::experiments::studies::StrongStudy> {
    // Criteria 12 and 13 share one coupled run. The cache is keyed on the
    // ambient thread count so the single-threaded determinism pass really
    // recomputes instead of reusing the threaded result.
    use std::sync::{Mutex, OnceLock};
    type Key = (u64, usize);
    static CACHE: OnceLock<Mutex<Option<(Key, crate::experiments::studies::StrongStudy)>>> =
        OnceLock::new();
    let key = (seed, rayon::current_num_threads());
    let cache = CACHE.get_or_init(|| Mutex::new(None));
    let mut guard = cache.lock().unwrap();
    if let Some((cached_key, study)) = guard.as_ref() {
        if *cached_key == key {
            return Ok(study.clone());
        }
    }
    let study = study_strong_convergence(&StrongConfig { seed, ..Default::default() })?;
    *guard = Some((key, study.clone()));
    Ok(study)
}

fn strong_convergence(seed: u64) -> Result<CriterionOutcome> {
    let mut out = CriterionOutcome::new(12, "coupled-noise strong convergence rate");
    let study = strong_study_cached(seed)?;
    let (lo, hi) = study.p2_ci;
    let ci_width = hi - lo;
    out.metrics.insert("p2_exponent".into(), study.p2.exponent);
    out.metrics.insert("p2_ci_lo".into(), lo);
    out.metrics.insert("p2_ci_hi".into(), hi);
    out.metrics.insert("p4_exponent".into(), study.p4.exponent);
    out.metrics.insert("failed_replicas".into(), study.failed_replicas as f64);
    let p4_inside = study.p4.exponent >= lo && study.p4.exponent <= hi;
    out.pass = (0.35..=0.65).contains(&study.p2.exponent) && ci_width < 0.2 && p4_inside;
    out.details.push(format!(
        "p2 exponent {:.3} (CI [{lo:.3}, {hi:.3}], width {ci_width:.3}), p4 {:.3} {}",
        study.p2.exponent,
        study.p4.exponent,
        if p4_inside { "inside CI" } else { "outside CI" }
    ));
    if !out.pass {
        // The measured rate is pinned down by the same spectral deficit that
        // fails criterion 1: modes beyond N/R relax far slower than
        // 4 gamma k^2, so the coarse grid carries excess stationary noise
        // variance ~ sigma h^{1-2 zeta} that the finer reference cannot
        // match, flooring the sup error at h^{(1-2 zeta)/2} (= 0.25 at
        // zeta = 0.25). A companion run where R stays constant over the
        // h-range shows the stated window emerging as the deficit fades.
        let companion = study_strong_convergence(&StrongConfig {
            ns: vec![16, 32, 64],
            n_ref: 256,
            zeta: 0.1,
            replicas: 24,
            seed,
            ..Default::default()
        })?;
        out.metrics
            .insert("companion_zeta01_p2_exponent".into(), companion.p2.exponent);
        out.details.push(format!(
            "informational companion at zeta = 0.1 (R = 2 on every level): p2 exponent {:.3}",
            companion.p2.exponent
        ));
    }
    let mut errors = CsvTable::new(vec!["h", "replica", "sup_error"]);
    for (li, level) in study.per_replica_sup.iter().enumerate() {
        for (r, e) in level.iter().enumerate() {
            errors.row(vec![
                CsvCell::F(study.hs[li]),
                CsvCell::U(r as u64),
                CsvCell::F(*e),
            ]);
        }
    }
    out.artifacts.push(("errors.csv".into(), errors.render()));
    let mut rates = CsvTable::new(vec!["p", "exponent", "ci_lo", "ci_hi", "r2"]);
    rates.row(vec![
        CsvCell::F(2.0),
        CsvCell::F(study.p2.exponent),
        CsvCell::F(lo),
        CsvCell::F(hi),
        CsvCell::F(study.p2.r2),
    ]);
    rates.row(vec![
        CsvCell::F(4.0),
        CsvCell::F(study.p4.exponent),
        CsvCell::F(study.p4_ci.0),
        CsvCell::F(study.p4_ci.1),
        CsvCell::F(study.p4.r2),
    ]);
    out.artifacts.push(("rates.csv".into(), rates.render()));
    Ok(out)
}

fn pathwise_convergence(seed: u64) -> Result<CriterionOutcome> {
    let mut out = CriterionOutcome::new(13, "per-path (almost-sure) convergence");
    let study = strong_study_cached(seed)?;
    let total = study.path_exponents.len();
    let above = study.path_exponents.iter().filter(|&&e| e >= 0.25).count();
    let med = median(&study.path_exponents);
    out.metrics.insert("fraction_above_025".into(), above as f64 / total as f64);
    out.metrics.insert("median_exponent".into(), med);
    out.pass = above as f64 / total as f64 >= 0.95 && (0.35..=0.65).contains(&med);
    out.details.push(format!(
        "{above}/{total} paths with exponent >= 0.25; median {med:.3}"
    ));
    // sign test: fraction of paths whose errors decrease at successive
    // h-halvings (informational)
    let monotone = study
        .per_replica_sup
        .first()
        .map(|level0| {
            let replicas = level0.len();
            let mut count = 0usize;
            for r in 0..replicas {
                let decreasing = study
                    .per_replica_sup
                    .windows(2)
                    .all(|w| w[1][r] <= w[0][r]);
                if decreasing {
                    count += 1;
                }
            }
            count as f64 / replicas as f64
        })
        .unwrap_or(0.0);
    out.metrics.insert("fraction_monotone_paths".into(), monotone);
    if !out.pass {
        out.details.push(
            "per-path exponents track the h^{(1-2 zeta)/2} noise-variance floor \
             described under criterion 12"
                .into(),
        );
    }
    let mut csv = CsvTable::new(vec!["replica", "exponent"]);
    for (r, e) in study.path_exponents.iter().enumerate() {
        csv.row(vec![CsvCell::U(r as u64), CsvCell::F(*e)]);
    }
    out.artifacts.push(("path_exponents.csv".into(), csv.render()));
    Ok(out)
}

// 14 ----------------------------------------------------------------------
fn transition_times(seed: u64) -> Result<CriterionOutcome> {
    let mut out = CriterionOutcome::new(14, "transition times converge in h");
    let study = study_transition_times(&TransitionConfig { seed, ..Default::default() })?;
    out.metrics.insert("mean_shrinks".into(), study.verdict_mean_shrinks as u8 as f64);
    out.metrics.insert("ci_overlap".into(), study.verdict_ci_overlap as u8 as f64);
    out.metrics.insert("pathwise".into(), study.verdict_pathwise as u8 as f64);
    out.pass = study.verdict_mean_shrinks && study.verdict_ci_overlap && study.verdict_pathwise;
    let mut csv = CsvTable::new(vec![
        "n", "hit_fraction", "mean_tau", "ci_lo", "ci_hi", "pathwise_median_gap",
    ]);
    for (i, n) in study.ns.iter().enumerate() {
        csv.row(vec![
            CsvCell::U(*n as u64),
            CsvCell::F(study.hit_fraction[i]),
            CsvCell::F(study.means[i]),
            CsvCell::F(study.mean_cis[i].0),
            CsvCell::F(study.mean_cis[i].1),
            CsvCell::F(if i < study.pathwise_median_gap.len() {
                study.pathwise_median_gap[i]
            } else {
                 0.0
            }),
        ]);
    }
    out.details.push(format!(
        "mean diffs {:?}; pathwise median gaps {:?}",
        study.mean_diffs, study.pathwise_median_gap
    ));
    out.artifacts.push(("transition.csv".into(), csv.render()));
    let mut taus = CsvTable::new(vec!["n", "replica", "tau"]);
    for (i, n) in study.ns.iter().enumerate() {
        for (r, t) in study.taus[i].iter().enumerate() {
            taus.row(vec![CsvCell::U(*n as u64), CsvCell::U(r as u64), CsvCell::F(*t)]);
        }
    }
    out.artifacts.push(("taus.csv".into(), taus.render()));
    Ok(out)
}

// 15 ----------------------------------------------------------------------

/// Criterion 15: re-runs the suite single-threaded and compares every CSV
/// artifact byte for byte against `first_run`.
pub fn run_determinism_check(
    seed: u64,
    first_run: &[CriterionOutcome],
) -> Result<CriterionOutcome> {
    let start = Instant::now();
    let mut out = CriterionOutcome::new(15, "artifacts byte-identical across runs and thread counts");
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .map_err(|e| crate::error::Error::ConfigInvalid(e.to_string()))?;
    let second: Vec<CriterionOutcome> = pool.install(|| run_suite(seed))?;
    let mut mismatches = Vec::new();
    for (a, b) in first_run.iter().zip(&second) {
        for ((name_a, bytes_a), (name_b, bytes_b)) in a.artifacts.iter().zip(&b.artifacts) {
            if name_a != name_b || bytes_a != bytes_b {
                mismatches.push(format!("criterion {:02}: {name_a}", a.id));
            }
        }
    }
    out.pass = mismatches.is_empty() && first_run.len() == second.len();
    if !out.pass {
        out.details.push(format!("mismatched artifacts: {mismatches:?}"));
    } else {
        out.details.push(format!(
            "{} artifacts identical across threaded and single-threaded runs",
            first_run.iter().map(|c| c.artifacts.len()).sum::<usize>()
        ));
    }
    out.metrics.insert("mismatches".into(), mismatches.len() as f64);
    out.runtime_secs = start.elapsed().as_secs_f64();
    Ok(out)
}

/// Reference dt rule exposed for reports.
pub fn suite_dt_table() -> Vec<(usize, f64)> {
    [16usize, 32, 64, 128, 512]
        .iter()
        .map(|&n| (n, dt_for_level(n)))
        .collect()
}
