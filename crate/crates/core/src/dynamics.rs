//! Time integration of the rescaled lattice SDE
//!
//! `du_i = (gamma A u)_i dt - V'(u_i) dt + sqrt(2 sigma / h) dB_i`
//!
//! with the double-well potential `V(q) = q^4/4 - q^2/2`, full or truncated
//! drifts, trajectory recording, and hitting-time detection. The default
//! integrator solves the stiff linear part implicitly in the circulant
//! eigenbasis; the explicit scheme is kept for cross-validation and carries
//! the usual `dt <= 2 / mu_max` restriction.

use crate::error::{Error, Result};
use crate::fft::{apply_real_multiplier_into, Complex};
use crate::kernel::{build_weights, radius_for, WeightKernel};
use crate::noise::{GridIncrements, NoisePlan};
use crate::operator::LongRangeOperator;
use std::f64::consts::PI;
use std::io::{Read, Write};

/// The bistable on-site potential `V(q) = q^4/4 - q^2/2`, minima at +-1.
#[derive(Debug, Clone, Copy)]
pub struct Potential;

impl Potential {
    pub const MINIMA: [f64; 2] = [-1.0, 1.0];

    pub fn value(q: f64) -> f64 {
        0.25 * q * q * q * q - 0.5 * q * q
    }

    pub fn derivative(u: f64) -> f64 {
        u * u * u - u
    }
}

/// Smallest admissible truncation level: `V'` must already be increasing at
/// `Z`, which holds for `Z > 2/sqrt(3)`.
pub const MIN_TRUNCATION: f64 = 1.1547005383792515;

/// Drift variants. The one-sided truncations sandwich the symmetric one:
/// `V-_Z >= V'_trunc >= V+_Z` pointwise, so with shared noise the solutions
/// driven by `-V-_Z`, `-V'_trunc`, `-V+_Z` are ordered.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DriftSpec {
    /// No nonlinearity; pure lattice heat flow.
    Disabled,
    /// `V'(u) = u^3 - u`.
    Full,
    /// `V'` frozen outside `[-Z, Z]`.
    Truncated(f64),
    /// Frozen above `Z` only.
    UpperOneSided(f64),
    /// Frozen below `-Z` only.
    LowerOneSided(f64),
}

impl DriftSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            DriftSpec::Truncated(z) | DriftSpec::UpperOneSided(z) | DriftSpec::LowerOneSided(z) => {
                if *z <= MIN_TRUNCATION {
                    return Err(Error::ConfigInvalid(format!(
                        "truncation level Z = {z} must exceed 2/sqrt(3) = {MIN_TRUNCATION}"
                    )));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// The nonlinearity entering the drift as `-nonlinearity(u)`.
    pub fn nonlinearity(&self, u: f64) -> f64 {
        match *self {
            DriftSpec::Disabled => 0.0,
            DriftSpec::Full => Potential::derivative(u),
            DriftSpec::Truncated(z) => Potential::derivative(u.clamp(-z, z)),
            DriftSpec::UpperOneSided(z) => Potential::derivative(u.min(z)),
            DriftSpec::LowerOneSided(z) => Potential::derivative(u.max(-z)),
        }
    }

    /// Global bound `M = V'(Z) = Z^3 - Z` of the truncated nonlinearity.
    pub fn bound(&self) -> Option<f64> {
        match *self {
            DriftSpec::Truncated(z) => Some(z * z * z - z),
            _ => None,
        }
    }

    /// Lipschitz constant `3 Z^2 - 1` of the truncated nonlinearity.
    pub fn lipschitz(&self) -> Option<f64> {
        match *self {
            DriftSpec::Truncated(z) => Some(3.0 * z * z - 1.0),
            _ => None,
        }
    }

    pub fn label(&self) -> String {
        match *self {
            DriftSpec::Disabled => "disabled".into(),
            DriftSpec::Full => "full".into(),
            DriftSpec::Truncated(z) => format!("truncated(Z={z})"),
            DriftSpec::UpperOneSided(z) => format!("upper(Z={z})"),
            DriftSpec::LowerOneSided(z) => format!("lower(Z={z})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integrator {
    Explicit,
    SemiImplicit,
}

impl Integrator {
    pub fn label(&self) -> &'static str {
        match self {
            Integrator::Explicit => "explicit",
            Integrator::SemiImplicit => "semi-implicit",
        }
    }
}

/// Initial data sampled onto the lattice as its piecewise-linear interpolant.
#[derive(Debug, Clone)]
pub enum InitialData {
    Constant(f64),
    /// `amplitude * sin(2 pi freq x)`
    Sine { freq: usize, amplitude: f64 },
    /// `amplitude * cos(2 pi freq x)`
    Cosine { freq: usize, amplitude: f64 },
    Nodal(Vec<f64>),
}

impl InitialData {
    pub fn sample(&self, n: usize) -> Result<Vec<f64>> {
        let h = 1.0 / n as f64;
        Ok(match self {
            InitialData::Constant(c) => vec![*c; n],
            InitialData::Sine { freq, amplitude } => (0..n)
                .map(|m| amplitude * (2.0 * PI * *freq as f64 * m as f64 * h).sin())
                .collect(),
            InitialData::Cosine { freq, amplitude } => (0..n)
                .map(|m| amplitude * (2.0 * PI * *freq as f64 * m as f64 * h).cos())
                .collect(),
            InitialData::Nodal(values) => {
                if values.len() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        got: values.len(),
                    });
                }
                values.clone()
            }
        })
    }

    pub fn label(&self) -> String {
        match self {
            InitialData::Constant(c) => format!("const({c})"),
            InitialData::Sine { freq, amplitude } => format!("sine(k={freq},a={amplitude})"),
            InitialData::Cosine { freq, amplitude } => format!("cosine(k={freq},a={amplitude})"),
            InitialData::Nodal(_) => "nodal".into(),
        }
    }
}

/// Full description of one simulation.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub n: usize,
    pub zeta: f64,
    /// Radius override; `None` derives `R = ceil(h^{-zeta})`.
    pub radius: Option<usize>,
    pub kernel: WeightKernel,
    pub gamma: f64,
    pub sigma: f64,
    pub t_end: f64,
    pub dt: f64,
    pub drift: DriftSpec,
    pub integrator: Integrator,
    pub u0: InitialData,
    /// Record every k-th step (the initial and final states always recorded).
    pub record_every: usize,
}

impl SimConfig {
    pub fn operator(&self) -> Result<LongRangeOperator> {
        let radius = match self.radius {
            Some(r) => r,
            None => radius_for(1.0 / self.n as f64, self.zeta)?,
        };
        let weights = build_weights(&self.kernel, radius, self.zeta)?;
        LongRangeOperator::new(weights, self.n, self.gamma)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !(self.t_end > 0.0) {
            return Err(Error::ConfigInvalid("dt and T must be positive".into()));
        }
        if self.sigma < 0.0 {
            return Err(Error::ConfigInvalid("sigma must be >= 0".into()));
        }
        if self.record_every == 0 {
            return Err(Error::ConfigInvalid("record_every must be >= 1".into()));
        }
        self.drift.validate()
    }

    pub fn steps(&self) -> u64 {
        (self.t_end / self.dt - 1e-9).ceil() as u64
    }
}

/// Nodal trajectory with recording times.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub h: f64,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub seed: u64,
    pub replica: u64,
    pub integrator: &'static str,
    pub drift: String,
}

const FRAME_MAGIC: &[u8; 4] = b"ACLT";
const FRAME_VERSION: u32 = 1;

impl Trajectory {
    pub fn n(&self) -> usize {
        self.states.first().map_or(0, Vec::len)
    }

    /// Compact binary frames: magic, version, N, dtype (8 = f64), frame
    /// count, then `(t, u_0..u_{N-1})` per frame, little endian.
    pub fn write_binary(&self, mut w: impl Write) -> Result<()> {
        w.write_all(FRAME_MAGIC)?;
        w.write_all(&FRAME_VERSION.to_le_bytes())?;
        w.write_all(&(self.n() as u32).to_le_bytes())?;
        w.write_all(&[8u8])?;
        w.write_all(&(self.times.len() as u32).to_le_bytes())?;
        for (t, state) in self.times.iter().zip(&self.states) {
            w.write_all(&t.to_le_bytes())?;
            for v in state {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_binary(mut r: impl Read) -> Result<Trajectory> {
        let bad = |msg: &str| Error::ConfigInvalid(format!("trajectory file: {msg}"));
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != FRAME_MAGIC {
            return Err(bad("bad magic"));
        }
        let mut b4 = [0u8; 4];
        r.read_exact(&mut b4)?;
        if u32::from_le_bytes(b4) != FRAME_VERSION {
            return Err(bad("unsupported version"));
        }
        r.read_exact(&mut b4)?;
        let n = u32::from_le_bytes(b4) as usize;
        let mut b1 = [0u8; 1];
        r.read_exact(&mut b1)?;
        if b1[0] != 8 {
            return Err(bad("unsupported dtype"));
        }
        r.read_exact(&mut b4)?;
        let frames = u32::from_le_bytes(b4) as usize;
        let mut times = Vec::with_capacity(frames);
        let mut states = Vec::with_capacity(frames);
        let mut b8 = [0u8; 8];
        for _ in 0..frames {
            r.read_exact(&mut b8)?;
            times.push(f64::from_le_bytes(b8));
            let mut state = Vec::with_capacity(n);
            for _ in 0..n {
                r.read_exact(&mut b8)?;
                state.push(f64::from_le_bytes(b8));
            }
            states.push(state);
        }
        Ok(Trajectory {
            h: if n > 0 { 1.0 / n as f64 } else { 0.0 },
            times,
            states,
            seed: 0,
            replica: 0,
            integrator: "unknown",
            drift: "unknown".into(),
        })
    }

    /// `t, u_0, .., u_{N-1}` per line, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push('t');
        for i in 0..self.n() {
            out.push_str(&format!(",u_{i}"));
        }
        out.push('\n');
        for (t, state) in self.times.iter().zip(&self.states) {
            out.push_str(&format!("{t:.16e}"));
            for v in state {
                out.push_str(&format!(",{v:.16e}"));
            }
            out.push('\n');
        }
        out
    }
}

/// One-step integrator with cached spectral data and scratch buffers.
pub struct Stepper {
    op: LongRangeOperator,
    drift: DriftSpec,
    integrator: Integrator,
    dt: f64,
    /// `sqrt(2 sigma / h)`
    noise_coeff: f64,
    /// `1 / (1 + dt mu_k)` for the semi-implicit resolvent.
    resolvent: Vec<f64>,
    scratch: Vec<Complex>,
    buf: Vec<f64>,
}

impl Stepper {
    pub fn new(
        op: LongRangeOperator,
        drift: DriftSpec,
        integrator: Integrator,
        dt: f64,
        sigma: f64,
    ) -> Result<Self> {
        drift.validate()?;
        if !(dt > 0.0) {
            return Err(Error::ConfigInvalid("dt must be positive".into()));
        }
        if integrator == Integrator::Explicit {
            let dt_max = 2.0 / op.max_circulant_eigenvalue();
            if dt > dt_max {
                return Err(Error::UnstableStep { dt, dt_max });
            }
        }
        let resolvent = match integrator {
            Integrator::SemiImplicit => (0..op.n)
                .map(|k| 1.0 / (1.0 + dt * op.eigenvalue_circulant(k)))
                .collect(),
            Integrator::Explicit => Vec::new(),
        };
        let n = op.n;
        let noise_coeff = (2.0 * sigma * n as f64).sqrt();
        Ok(Stepper {
            op,
            drift,
            integrator,
            dt,
            noise_coeff,
            resolvent,
            scratch: Vec::with_capacity(n),
            buf: vec![0.0; n],
        })
    }

    pub fn n(&self) -> usize {
        self.op.n
    }

    /// Advances `u` by one step; `db` are the Brownian increments for the
    /// step (ignored when sigma = 0).
    pub fn step(&mut self, u: &mut [f64], db: &[f64], t_next: f64) -> Result<()> {
        match self.integrator {
            Integrator::Explicit => {
                self.op.apply_into(u, &mut self.buf);
                for (i, ui) in u.iter_mut().enumerate() {
                    *ui += self.dt * (self.buf[i] - self.drift.nonlinearity(*ui))
                        + self.noise_coeff * db[i];
                }
            }
            Integrator::SemiImplicit => {
                for (i, &ui) in u.iter().enumerate() {
                    self.buf[i] = ui - self.dt * self.drift.nonlinearity(ui)
                        + self.noise_coeff * db[i];
                }
                let rhs = std::mem::take(&mut self.buf);
                let mut out = vec![0.0; rhs.len()];
                apply_real_multiplier_into(&rhs, &self.resolvent, &mut self.scratch, &mut out);
                u.copy_from_slice(&out);
                self.buf = rhs;
            }
        }
        for (i, &v) in u.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite { node: i, t: t_next });
            }
        }
        Ok(())
    }
}

/// Single explicit Euler-Maruyama step (reference form of the update rule).
pub fn step_explicit(
    state: &[f64],
    op: &LongRangeOperator,
    drift: &DriftSpec,
    db: &[f64],
    dt: f64,
    sigma: f64,
) -> Result<Vec<f64>> {
    let mut stepper = Stepper::new(op.clone(), *drift, Integrator::Explicit, dt, sigma)?;
    let mut u = state.to_vec();
    stepper.step(&mut u, db, dt)?;
    Ok(u)
}

/// Single semi-implicit step: `(I - dt gamma A) u_new = u - dt V'(u) + noise`,
/// solved exactly in the circulant eigenbasis. Unconditionally stable.
pub fn step_semi_implicit(
    state: &[f64],
    op: &LongRangeOperator,
    drift: &DriftSpec,
    db: &[f64],
    dt: f64,
    sigma: f64,
) -> Result<Vec<f64>> {
    let mut stepper = Stepper::new(op.clone(), *drift, Integrator::SemiImplicit, dt, sigma)?;
    let mut u = state.to_vec();
    stepper.step(&mut u, db, dt)?;
    Ok(u)
}

/// Runs a full trajectory. Deterministic in `(config, plan.seed, replica)`.
pub fn simulate(config: &SimConfig, plan: &NoisePlan, replica: u64) -> Result<Trajectory> {
    config.validate()?;
    let op = config.operator()?;
    let increments: Option<GridIncrements> = if config.sigma > 0.0 {
        Some(plan.increments_for_grid(config.n, config.dt)?)
    } else {
        None
    };
    let mut stepper = Stepper::new(op, config.drift, config.integrator, config.dt, config.sigma)?;
    let mut u = config.u0.sample(config.n)?;
    let steps = config.steps();
    let mut times = Vec::new();
    let mut states = Vec::new();
    times.push(0.0);
    states.push(u.clone());
    let mut db = vec![0.0; config.n];
    for step in 0..steps {
        if let Some(inc) = &increments {
            inc.fill_step(replica, step, &mut db);
        }
        let t_next = (step + 1) as f64 * config.dt;
        stepper.step(&mut u, &db, t_next)?;
        if (step + 1) % config.record_every as u64 == 0 || step + 1 == steps {
            times.push(t_next);
            states.push(u.clone());
        }
    }
    Ok(Trajectory {
        h: 1.0 / config.n as f64,
        times,
        states,
        seed: plan.seed,
        replica,
        integrator: config.integrator.label(),
        drift: config.drift.label(),
    })
}

/// Lq norms of lattice functions, computed exactly on the periodic
/// piecewise-linear interpolant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LqNorm {
    L1,
    L2,
    LInf,
}

impl LqNorm {
    pub fn label(&self) -> &'static str {
        match self {
            LqNorm::L1 => "1",
            LqNorm::L2 => "2",
            LqNorm::LInf => "inf",
        }
    }
}

/// `|| u - target ||_{L^q[0,1]}` for nodal vectors on the periodic grid.
pub fn lq_distance(u: &[f64], target: &[f64], norm: LqNorm) -> f64 {
    debug_assert_eq!(u.len(), target.len());
    let n = u.len();
    let h = 1.0 / n as f64;
    match norm {
        LqNorm::LInf => u
            .iter()
            .zip(target)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max),
        LqNorm::L2 => {
            let mut acc = 0.0;
            for m in 0..n {
                let a = u[m] - target[m];
                let b = u[(m + 1) % n] - target[(m + 1) % n];
                acc += h * (a * a + a * b + b * b) / 3.0;
            }
            acc.sqrt()
        }
        LqNorm::L1 => {
            let mut acc = 0.0;
            for m in 0..n {
                let a = u[m] - target[m];
                let b = u[(m + 1) % n] - target[(m + 1) % n];
                if a * b >= 0.0 {
                    acc += h * (a.abs() + b.abs()) / 2.0;
                } else {
                    // the interpolant crosses zero inside the cell
                    acc += h * (a * a + b * b) / (2.0 * (a.abs() + b.abs()));
                }
            }
            acc
        }
    }
}

/// Target ball for hitting-time detection.
#[derive(Debug, Clone)]
pub struct HittingSpec {
    pub target: Vec<f64>,
    pub radius: f64,
    pub norm: LqNorm,
}

impl HittingSpec {
    pub fn constant_target(n: usize, value: f64, radius: f64, norm: LqNorm) -> Self {
        HittingSpec {
            target: vec![value; n],
            radius,
            norm,
        }
    }
}

/// First recorded time with `|| u(t) - target ||_q < radius`, or `None`.
pub fn hitting_time(traj: &Trajectory, spec: &HittingSpec) -> Option<f64> {
    debug_assert!(spec.radius > 0.0);
    traj.times
        .iter()
        .zip(&traj.states)
        .find(|(_, state)| lq_distance(state, &spec.target, spec.norm) < spec.radius)
        .map(|(t, _)| *t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::simpson;
    use approx::assert_relative_eq;

    fn test_plan(n: usize, dt: f64) -> NoisePlan {
        NoisePlan::new(42, n, dt).unwrap()
    }

    fn base_config(n: usize) -> SimConfig {
        SimConfig {
            n,
            zeta: 0.25,
            radius: None,
            kernel: WeightKernel::Indicator,
            gamma: 1.0,
            sigma: 0.0,
            t_end: 0.1,
            dt: 1e-3,
            drift: DriftSpec::Full,
            integrator: Integrator::SemiImplicit,
            u0: InitialData::Constant(-1.0),
            record_every: 10,
        }
    }

    #[test]
    fn potential_critical_points() {
        assert_eq!(Potential::derivative(1.0), 0.0);
        assert_eq!(Potential::derivative(-1.0), 0.0);
        assert_eq!(Potential::derivative(0.0), 0.0);
        // V''(+-1) = 3u^2 - 1 = 2 > 0
        let eps = 1e-6;
        let second = (Potential::derivative(1.0 + eps) - Potential::derivative(1.0 - eps)) / (2.0 * eps);
        assert_relative_eq!(second, 2.0, max_relative = 1e-6);
    }

    #[test]
    fn drift_ordering_chain() {
        let z = 2.0;
        let full = DriftSpec::Full;
        let trunc = DriftSpec::Truncated(z);
        let upper = DriftSpec::UpperOneSided(z);
        let lower = DriftSpec::LowerOneSided(z);
        for i in -400..=400 {
            let u = i as f64 * 0.01;
            let vt = trunc.nonlinearity(u);
            let vu = upper.nonlinearity(u);
            let vl = lower.nonlinearity(u);
            // sandwich V- >= V'_trunc >= V+ everywhere
            assert!(vl >= vt - 1e-15 && vt >= vu - 1e-15, "u={u}");
            // the two stated one-sided identities
            if u >= 0.0 {
                assert!(vt <= vu + 1e-15);
            }
            if u <= 0.0 {
                assert!(vt >= vl - 1e-15);
            }
            // truncated coincides with full inside [-Z, Z]
            if u.abs() < z {
                assert_eq!(vt, full.nonlinearity(u));
            }
        }
        // global bound M = V'(Z)
        assert_eq!(trunc.bound().unwrap(), z * z * z - z);
        assert!(trunc.nonlinearity(10.0) <= trunc.bound().unwrap());
        assert_eq!(trunc.lipschitz().unwrap(), 3.0 * z * z - 1.0);
    }

    #[test]
    fn truncation_level_validated() {
        assert!(DriftSpec::Truncated(1.0).validate().is_err());
        assert!(DriftSpec::Truncated(1.2).validate().is_ok());
    }

    #[test]
    fn equilibrium_is_fixed_point_of_both_integrators() {
        let cfg = base_config(16);
        let plan = test_plan(16, cfg.dt);
        for integ in [Integrator::Explicit, Integrator::SemiImplicit] {
            let mut c = cfg.clone();
            c.integrator = integ;
            c.u0 = InitialData::Constant(1.0);
            let traj = simulate(&c, &plan, 0).unwrap();
            for state in &traj.states {
                for &v in state {
                    assert!((v - 1.0).abs() < 1e-14, "{integ:?}: {v}");
                }
            }
        }
    }

    #[test]
    fn explicit_step_multiplies_cosine_mode_by_one_minus_dt_mu() {
        let cfg = base_config(16);
        let op = cfg.operator().unwrap();
        let k = 3usize;
        let u: Vec<f64> = (0..16)
            .map(|m| (2.0 * PI * k as f64 * m as f64 / 16.0).cos())
            .collect();
        let db = vec![0.0; 16];
        let dt = 1e-5;
        let next = step_explicit(&u, &op, &DriftSpec::Disabled, &db, dt, 0.0).unwrap();
        let factor = 1.0 - dt * op.eigenvalue_circulant(k);
        for (a, b) in next.iter().zip(&u) {
            assert_relative_eq!(*a, factor * b, max_relative = 1e-10);
        }
        let next_si = step_semi_implicit(&u, &op, &DriftSpec::Disabled, &db, dt, 0.0).unwrap();
        let factor_si = 1.0 / (1.0 + dt * op.eigenvalue_circulant(k));
        for (a, b) in next_si.iter().zip(&u) {
            assert_relative_eq!(*a, factor_si * b, max_relative = 1e-9);
        }
    }

    #[test]
    fn explicit_drift_step_hand_value() {
        // u = 0.5: one step moves by dt (0.5 - 0.125) pointwise
        let cfg = base_config(16);
        let op = cfg.operator().unwrap();
        let u = vec![0.5; 16];
        let db = vec![0.0; 16];
        let dt = 1e-4;
        let next = step_explicit(&u, &op, &DriftSpec::Full, &db, dt, 0.0).unwrap();
        for &v in &next {
            assert_relative_eq!(v, 0.5 + 0.375 * dt, max_relative = 1e-12);
        }
    }

    #[test]
    fn explicit_rejects_unstable_step() {
        let cfg = base_config(64);
        let op = cfg.operator().unwrap();
        let dt_max = 2.0 / op.max_circulant_eigenvalue();
        match Stepper::new(op, DriftSpec::Full, Integrator::Explicit, 10.0 * dt_max, 0.0) {
            Err(Error::UnstableStep { .. }) => {}
            other => panic!("expected UnstableStep, got {:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn integrators_agree_to_dt_squared_on_one_step() {
        let cfg = base_config(16);
        let op = cfg.operator().unwrap();
        // the 1e-6 budget admits only low-amplitude smooth states: the gap per
        // mode is (dt mu_k)^2/(1 + dt mu_k) times the mode amplitude
        let u: Vec<f64> = (0..16)
            .map(|m| 0.03 * (2.0 * PI * m as f64 / 16.0).sin() + 0.01)
            .collect();
        let db = vec![0.0; 16];
        let dt = 1e-4;
        let a = step_explicit(&u, &op, &DriftSpec::Full, &db, dt, 0.0).unwrap();
        let b = step_semi_implicit(&u, &op, &DriftSpec::Full, &db, dt, 0.0).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() <= 1e-6, "{x} vs {y}");
        }
    }

    #[test]
    fn heat_flow_decay_matches_spectral_rate() {
        // sigma = 0, drift disabled, u0 = sin(2 pi x): sup norm decays like
        // e^{-mu_1 t} within 1% (N = 64, semi-implicit, dt = 1e-4).
        let mut cfg = base_config(64);
        cfg.drift = DriftSpec::Disabled;
        cfg.u0 = InitialData::Sine { freq: 1, amplitude: 1.0 };
        cfg.dt = 1e-4;
        cfg.t_end = 0.1;
        cfg.record_every = 1000;
        let plan = test_plan(64, cfg.dt);
        let traj = simulate(&cfg, &plan, 0).unwrap();
        let op = cfg.operator().unwrap();
        let mu1 = op.eigenvalue_circulant(1);
        let last = traj.states.last().unwrap();
        let sup = last.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        let expected = (-mu1 * 0.1).exp();
        assert!(
            (sup - expected).abs() / expected < 0.01,
            "decay {sup} vs {expected}"
        );
    }

    #[test]
    fn truncated_equals_full_while_small() {
        // same seed, sigma > 0: paths coincide bitwise while sup|u| < Z
        let mut cfg = base_config(32);
        cfg.sigma = 0.05;
        cfg.t_end = 1.0;
        cfg.dt = 1.0 / 1024.0;
        cfg.record_every = 64;
        let plan = test_plan(32, cfg.dt);
        let full = simulate(&cfg, &plan, 5).unwrap();
        let mut cfg_trunc = cfg.clone();
        cfg_trunc.drift = DriftSpec::Truncated(2.0);
        let trunc = simulate(&cfg_trunc, &plan, 5).unwrap();
        let sup = full
            .states
            .iter()
            .flatten()
            .fold(0.0f64, |m, &v| m.max(v.abs()));
        assert!(sup < 2.0, "test premise: path must stay below Z");
        for (a, b) in full.states.iter().zip(&trunc.states) {
            for (x, y) in a.iter().zip(b) {
                assert!((x - y).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn comparison_principle_orders_one_sided_solutions() {
        let mut cfg = base_config(32);
        cfg.sigma = 0.1;
        cfg.t_end = 0.5;
        cfg.dt = 1.0 / 2048.0;
        cfg.record_every = 32;
        cfg.drift = DriftSpec::Truncated(2.0);
        let plan = test_plan(32, cfg.dt);
        let slack = 1e-8 + 10.0 * cfg.dt;
        for replica in 0..5u64 {
            let mid = simulate(&cfg, &plan, replica).unwrap();
            let mut up_cfg = cfg.clone();
            up_cfg.drift = DriftSpec::UpperOneSided(2.0);
            let up = simulate(&up_cfg, &plan, replica).unwrap();
            let mut lo_cfg = cfg.clone();
            lo_cfg.drift = DriftSpec::LowerOneSided(2.0);
            let lo = simulate(&lo_cfg, &plan, replica).unwrap();
            for ((a, b), c) in lo.states.iter().zip(&mid.states).zip(&up.states) {
                for ((x, y), z) in a.iter().zip(b).zip(c) {
                    assert!(*x <= y + slack, "lower > mid: {x} vs {y}");
                    assert!(*y <= z + slack, "mid > upper: {y} vs {z}");
                }
            }
        }
    }

    #[test]
    fn simulate_is_deterministic() {
        let mut cfg = base_config(32);
        cfg.sigma = 0.2;
        cfg.dt = 1.0 / 512.0;
        cfg.t_end = 0.25;
        let plan = test_plan(32, cfg.dt);
        let a = simulate(&cfg, &plan, 3).unwrap();
        let b = simulate(&cfg, &plan, 3).unwrap();
        let mut buf_a = Vec::new();
        let mut buf_b = Vec::new();
        a.write_binary(&mut buf_a).unwrap();
        b.write_binary(&mut buf_b).unwrap();
        assert_eq!(buf_a, buf_b);
    }

    #[test]
    fn binary_roundtrip() {
        let mut cfg = base_config(16);
        cfg.sigma = 0.1;
        cfg.dt = 1.0 / 256.0;
        let plan = test_plan(16, cfg.dt);
        let traj = simulate(&cfg, &plan, 1).unwrap();
        let mut buf = Vec::new();
        traj.write_binary(&mut buf).unwrap();
        let back = Trajectory::read_binary(buf.as_slice()).unwrap();
        assert_eq!(traj.times, back.times);
        assert_eq!(traj.states, back.states);
    }

    #[test]
    fn lq_norms_match_quadrature() {
        let n = 32;
        let u: Vec<f64> = (0..n)
            .map(|m| (2.0 * PI * m as f64 / n as f64).sin() - 0.3)
            .collect();
        let zeros = vec![0.0; n];
        let pl = |x: f64| {
            let pos = x * n as f64;
            let cell = (pos as usize).min(n - 1);
            let frac = pos - cell as f64;
            u[cell] + (u[(cell + 1) % n] - u[cell]) * frac
        };
        let l2 = lq_distance(&u, &zeros, LqNorm::L2);
        let quad_l2 = simpson(|x| pl(x) * pl(x), 0.0, 1.0, n * 64).sqrt();
        assert_relative_eq!(l2, quad_l2, max_relative = 1e-9);
        let l1 = lq_distance(&u, &zeros, LqNorm::L1);
        let quad_l1 = simpson(|x| pl(x).abs(), 0.0, 1.0, n * 512);
        assert_relative_eq!(l1, quad_l1, max_relative = 1e-5);
        let linf = lq_distance(&u, &zeros, LqNorm::LInf);
        assert_relative_eq!(
            linf,
            u.iter().fold(0.0f64, |m, &v| m.max(v.abs())),
            max_relative = 1e-15
        );
    }

    #[test]
    fn hitting_time_basics() {
        let mut cfg = base_config(16);
        cfg.u0 = InitialData::Constant(-1.0);
        cfg.t_end = 0.5;
        let plan = test_plan(16, cfg.dt);
        let traj = simulate(&cfg, &plan, 0).unwrap();
        // already inside the ball around -1
        let near = HittingSpec::constant_target(16, -1.0, 0.5, LqNorm::L2);
        assert_eq!(hitting_time(&traj, &near), Some(0.0));
        // deterministic dynamics never reaches +1
        let far = HittingSpec::constant_target(16, 1.0, 0.5, LqNorm::L2);
        assert_eq!(hitting_time(&traj, &far), None);
    }

    #[test]
    fn hitting_time_monotone_in_radius() {
        let mut cfg = base_config(32);
        cfg.sigma = 0.25;
        cfg.gamma = 0.01;
        cfg.t_end = 30.0;
        cfg.dt = 1.0 / 128.0;
        cfg.record_every = 1;
        let plan = test_plan(32, cfg.dt);
        for replica in 0..3u64 {
            let traj = simulate(&cfg, &plan, replica).unwrap();
            let mut prev: Option<f64> = None;
            for rho in [0.2, 0.4, 0.8, 1.2] {
                let spec = HittingSpec::constant_target(32, 1.0, rho, LqNorm::L2);
                let tau = hitting_time(&traj, &spec).unwrap_or(f64::INFINITY);
                if let Some(p) = prev {
                    assert!(tau <= p, "larger ball hit later: {tau} > {p}");
                }
                prev = Some(tau);
            }
        }
    }
}
