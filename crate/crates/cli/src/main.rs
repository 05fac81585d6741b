//! Command-line front end: every study and primitive as a subcommand,
//! emitting the documented CSV/JSON artifacts.
//!
//! Exit codes: 0 when all declared tolerances pass, 1 when a study fails or
//! errors, 2 for invalid configuration. Identical config and seed produce
//! byte-identical CSV artifacts regardless of `--threads`.

use ac_lattice::config::Config;
use ac_lattice::dynamics::{DriftSpec, InitialData, Integrator, LqNorm, SimConfig};
use ac_lattice::error::Error;
use ac_lattice::experiments::acceptance::{run_determinism_check, run_suite};
use ac_lattice::experiments::studies::{
    study_comparison_principle, study_homogeneous_convergence, study_noise_diagnostics,
    study_semigroup_convergence, study_stochastic_convolution_regularity,
    study_strong_convergence, study_transition_times, StrongConfig, TransitionConfig,
};
use ac_lattice::kernel::WeightKernel;
use ac_lattice::operator::LongRangeOperator;
use ac_lattice::report::{fmt_f64, write_artifact, CsvCell, CsvTable, ExperimentReport};
use clap::{Parser, Subcommand};
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(name = "ac-lattice", version, about = "Long-range lattice SDE engine")]
struct Cli {
    /// Output directory for artifacts.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Master seed; overrides `noise.seed` from the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker thread cap (default: all cores). Artifacts are identical for
    /// any value.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Plain-text `key = value` config file (see docs/config.md).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenvalue table in both index conventions with bounds and gaps.
    Eigen {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        zeta: Option<f64>,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        kernel: Option<String>,
    },
    /// Consistency order of the stencil on smooth data.
    Consistency {},
    /// Sup distance between discrete and continuous heat kernels.
    Semigroup {
        #[arg(long)]
        t0: Option<f64>,
        #[arg(long)]
        zeta: Option<f64>,
        #[arg(long)]
        hs: Option<String>,
    },
    /// Noise aggregation exactness, normality, independence.
    NoiseCheck {},
    /// One trajectory, written as CSV and binary frames.
    Simulate {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        zeta: Option<f64>,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long)]
        t: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
        /// full | disabled | truncated:Z | upper:Z | lower:Z
        #[arg(long)]
        drift: Option<String>,
        /// semi-implicit | explicit
        #[arg(long)]
        integrator: Option<String>,
        /// const:C | sine:K:A | cosine:K:A
        #[arg(long)]
        u0: Option<String>,
        #[arg(long)]
        record_every: Option<usize>,
    },
    /// Deterministic heat-flow convergence rate.
    ConvergeHomogeneous {
        #[arg(long)]
        zeta: Option<f64>,
        #[arg(long)]
        hs: Option<String>,
    },
    /// Coupled-noise strong convergence rate (p-th moments).
    ConvergeStrong {
        #[arg(long)]
        replicas: Option<usize>,
        #[arg(long)]
        zeta: Option<f64>,
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long)]
        t: Option<f64>,
        #[arg(long)]
        n_ref: Option<usize>,
        #[arg(long)]
        hs: Option<String>,
    },
    /// Per-path (almost-sure) convergence from the same coupled run.
    ConvergeAs {
        #[arg(long)]
        replicas: Option<usize>,
    },
    /// Structure-function exponents of the pure-noise field.
    Regularity {
        #[arg(long)]
        replicas: Option<usize>,
    },
    /// Transition-time convergence under moderate noise.
    Transition {
        #[arg(long)]
        replicas: Option<usize>,
        #[arg(long)]
        rho: Option<f64>,
        #[arg(long)]
        t: Option<f64>,
    },
    /// Pathwise comparison principle across seeds.
    Compare {
        #[arg(long)]
        seeds: Option<usize>,
    },
    /// The full acceptance suite, criteria 1..FIFTEEN, artifacts per criterion.
    AllAcceptance {},
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(k) = cli.threads {
        if rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .is_err()
        {
            eprintln!("warning: thread pool already initialized");
        }
    }
    match dispatch(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(err) => {
            let code = match &err {
                Error::ConfigInvalid(_) => 2,
                _ => 1,
            };
            let record = format!(
                "{{\n  \"error\": {},\n  \"exit_code\": {}\n}}\n",
                serde_json::to_string(&err.to_string()).unwrap(),
                code
            );
            let dir = cli.out.join(command_dir(&cli.command));
            let _ = write_artifact(&dir, "report.json", &record);
            eprintln!("error: {err}");
            ExitCode::from(code)
        }
    }
}

fn command_dir(cmd: &Command) -> &'static str {
    match cmd {
        Command::Eigen { .. } => "eigen",
        Command::Consistency {} => "consistency",
        Command::Semigroup { .. } => "semigroup",
        Command::NoiseCheck {} => "noise-check",
        Command::Simulate { .. } => "simulate",
        Command::ConvergeHomogeneous { .. } => "converge-homogeneous",
        Command::ConvergeStrong { .. } => "converge-strong",
        Command::ConvergeAs { .. } => "converge-as",
        Command::Regularity { .. } => "regularity",
        Command::Transition { .. } => "transition",
        Command::Compare { .. } => "compare",
        Command::AllAcceptance {} => "acceptance",
    }
}

fn load_config(cli: &Cli) -> Result<Config, Error> {
    let mut cfg = match &cli.config {
        Some(path) => Config::parse(&std::fs::read_to_string(path)?)?,
        None => Config::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.set("noise.seed", seed);
    }
    cfg.validate_physics()?;
    Ok(cfg)
}

fn set_if<S: ToString>(cfg: &mut Config, key: &str, value: &Option<S>) {
    if let Some(v) = value {
        cfg.set(key, v.to_string());
    }
}

fn finish(
    dir: &Path,
    mut report: ExperimentReport,
    cfg: &Config,
    pass: bool,
    started: Instant,
) -> Result<bool, Error> {
    report.pass = pass;
    report.wall_clock_secs = started.elapsed().as_secs_f64();
    for (k, v) in cfg.entries() {
        report.param(k, v);
    }
    write_artifact(dir, "report.json", &report.to_json())?;
    println!(
        "{} {}",
        if pass { "PASS" } else { "FAIL" },
        report.claim
    );
    Ok(pass)
}

fn dispatch(cli: &Cli) -> Result<bool, Error> {
    let started = Instant::now();
    let mut cfg = load_config(cli)?;
    let dir = cli.out.join(command_dir(&cli.command));
    let seed = cfg.get_u64("noise.seed", 42)?;

    match &cli.command {
        Command::Eigen { n, zeta, gamma, kernel } => {
            set_if(&mut cfg, "grid.n", n);
            set_if(&mut cfg, "grid.zeta", zeta);
            set_if(&mut cfg, "physics.gamma", gamma);
            set_if(&mut cfg, "grid.kernel", kernel);
            cfg.validate_physics()?;
            let n = cfg.get_usize("grid.n", 64)?;
            let zeta = cfg.get_f64("grid.zeta", 0.25)?;
            let gamma = cfg.get_f64("physics.gamma", 1.0)?;
            let kernel = cfg.kernel("grid.kernel")?;
            let op = LongRangeOperator::from_grid(&kernel, n, zeta, gamma)?;
            let mut csv = CsvTable::new(vec![
                "k", "lambda_paper", "lambda_circulant", "lower_bound", "upper_bound", "gap",
            ]);
            for k in 0..=n {
                let lam = op.eigenvalue_paper(k);
                let circ = if k < n {
                    fmt_f64(op.eigenvalue_circulant(k))
                } else {
                    String::new()
                };
                csv.row(vec![
                    CsvCell::U(k as u64),
                    CsvCell::F(lam),
                    CsvCell::S(circ),
                    CsvCell::F(4.0 * gamma * (k * k) as f64),
                    CsvCell::F(gamma * PI * PI * (k * k) as f64),
                    CsvCell::F(op.eigenvalue_gap_to_continuum(k)),
                ]);
            }
            write_artifact(&dir, "eigen.csv", &csv.render())?;
            let mut report = ExperimentReport::new("eigenvalue table", seed);
            report.metric("radius", op.weights.radius as f64);
            finish(&dir, report, &cfg, true, started)
        }

        Command::Consistency {} => {
            let f = |x: f64| (2.0 * PI * x).sin();
            let d2f = |x: f64| -(2.0 * PI).powi(2) * (2.0 * PI * x).sin();
            let mut csv = CsvTable::new(vec!["zeta", "h", "sup_error", "fitted_order", "required"]);
            let mut pass = true;
            let mut report = ExperimentReport::new("stencil consistency order", seed);
            for &zeta in &[0.1, 0.25, 0.4, 0.49] {
                let mut hs = Vec::new();
                let mut errs = Vec::new();
                for e in 4..=9 {
                    let op = LongRangeOperator::from_grid(
                        &WeightKernel::Indicator,
                        1usize << e,
                        zeta,
                        1.0,
                    )?;
                    hs.push(op.h);
                    errs.push(op.consistency_error(f, d2f));
                }
                let fit = ac_lattice::experiments::fit_rate(&hs, &errs)?;
                let required = 2.0 - 2.0 * zeta - 0.2;
                pass &= fit.exponent >= required;
                for (h, e) in hs.iter().zip(&errs) {
                    csv.row(vec![
                        CsvCell::F(zeta),
                        CsvCell::F(*h),
                        CsvCell::F(*e),
                        CsvCell::F(fit.exponent),
                        CsvCell::F(required),
                    ]);
                }
                report.metric(&format!("order_zeta_{zeta}"), fit.exponent);
                report.note(format!(
                    "zeta = {zeta}: order {:.3}; second-order claim {}",
                    fit.exponent,
                    if fit.exponent >= 1.8 { "supported" } else { "not supported" }
                ));
            }
            write_artifact(&dir, "consistency.csv", &csv.render())?;
            finish(&dir, report, &cfg, pass, started)
        }

        Command::Semigroup { t0, zeta, hs } => {
            set_if(&mut cfg, "study.t0", t0);
            set_if(&mut cfg, "grid.zeta", zeta);
            set_if(&mut cfg, "study.hs", hs);
            cfg.validate_physics()?;
            let t0 = cfg.get_f64("study.t0", 0.1)?;
            let zeta = cfg.get_f64("grid.zeta", 0.25)?;
            let gamma = cfg.get_f64("physics.gamma", 1.0)?;
            let ns = cfg.get_grid_list("study.hs", &[16, 32, 64, 128, 256, 512])?;
            let study = study_semigroup_convergence(&ns, zeta, gamma, t0)?;
            let mut csv = CsvTable::new(vec!["h", "sup_distance", "fitted_rate"]);
            for (h, d) in study.hs.iter().zip(&study.distances) {
                csv.row(vec![CsvCell::F(*h), CsvCell::F(*d), CsvCell::F(study.fit.exponent)]);
            }
            write_artifact(&dir, "semigroup.csv", &csv.render())?;
            let required = 2.0 - 2.0 * zeta - 0.25;
            let mut report = ExperimentReport::new("heat kernel convergence", seed);
            report.metric("fitted_rate", study.fit.exponent);
            report.metric("required", required);
            finish(&dir, report, &cfg, study.fit.exponent >= required, started)
        }

        Command::NoiseCheck {} => {
            let diag = study_noise_diagnostics(seed)?;
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
            write_artifact(&dir, "noise.csv", &csv.render())?;
            let mut report = ExperimentReport::new("noise diagnostics", seed);
            report.metric("ks_statistic", diag.ks_statistic);
            finish(&dir, report, &cfg, diag.pass, started)
        }

        Command::Simulate {
            n,
            zeta,
            gamma,
            sigma,
            t,
            dt,
            drift,
            integrator,
            u0,
            record_every,
        } => {
            set_if(&mut cfg, "grid.n", n);
            set_if(&mut cfg, "grid.zeta", zeta);
            set_if(&mut cfg, "physics.gamma", gamma);
            set_if(&mut cfg, "physics.sigma", sigma);
            set_if(&mut cfg, "time.t_end", t);
            set_if(&mut cfg, "time.dt", dt);
            set_if(&mut cfg, "physics.drift", drift);
            set_if(&mut cfg, "time.integrator", integrator);
            set_if(&mut cfg, "initial.u0", u0);
            set_if(&mut cfg, "time.record_every", record_every);
            cfg.validate_physics()?;
            let sim = SimConfig {
                n: cfg.get_usize("grid.n", 64)?,
                zeta: cfg.get_f64("grid.zeta", 0.25)?,
                radius: None,
                kernel: cfg.kernel("grid.kernel")?,
                gamma: cfg.get_f64("physics.gamma", 1.0)?,
                sigma: cfg.get_f64("physics.sigma", 0.1)?,
                t_end: cfg.get_f64("time.t_end", 1.0)?,
                dt: cfg.get_f64("time.dt", 1e-3)?,
                drift: parse_drift(&cfg.get_str("physics.drift", "full"))?,
                integrator: parse_integrator(&cfg.get_str("time.integrator", "semi-implicit"))?,
                u0: parse_u0(&cfg.get_str("initial.u0", "const:-1"))?,
                record_every: cfg.get_usize("time.record_every", 10)?,
            };
            let plan = ac_lattice::noise::NoisePlan::new(seed, sim.n, sim.dt)?;
            let traj = ac_lattice::dynamics::simulate(&sim, &plan, 0)?;
            write_artifact(&dir, "trajectory.csv", &traj.to_csv())?;
            std::fs::create_dir_all(&dir)?;
            let mut bin = Vec::new();
            traj.write_binary(&mut bin)?;
            std::fs::write(dir.join("trajectory.bin"), &bin)?;
            let mut report = ExperimentReport::new("trajectory", seed);
            report.metric("frames", traj.times.len() as f64);
            finish(&dir, report, &cfg, true, started)
        }

        Command::ConvergeHomogeneous { zeta, hs } => {
            set_if(&mut cfg, "grid.zeta", zeta);
            set_if(&mut cfg, "study.hs", hs);
            cfg.validate_physics()?;
            let zeta = cfg.get_f64("grid.zeta", 0.25)?;
            let gamma = cfg.get_f64("physics.gamma", 1.0)?;
            let ns = cfg.get_grid_list("study.hs", &[16, 32, 64, 128, 256])?;
            let t_end = cfg.get_f64("time.t_end", 0.25)?;
            let study = study_homogeneous_convergence(
                &ns,
                zeta,
                gamma,
                &cfg.kernel("grid.kernel")?,
                1,
                1.0,
                t_end,
            )?;
            let mut errors = CsvTable::new(vec!["h", "sup_error"]);
            for (h, e) in study.hs.iter().zip(&study.errors) {
                errors.row(vec![CsvCell::F(*h), CsvCell::F(*e)]);
            }
            write_artifact(&dir, "errors.csv", &errors.render())?;
            let mut rates = CsvTable::new(vec!["exponent", "r2", "required"]);
            let required = 2.0 - 2.0 * zeta - 0.25;
            rates.row(vec![
                CsvCell::F(study.fit.exponent),
                CsvCell::F(study.fit.r2),
                CsvCell::F(required),
            ]);
            write_artifact(&dir, "rates.csv", &rates.render())?;
            let mut report = ExperimentReport::new("homogeneous convergence", seed);
            report.metric("exponent", study.fit.exponent);
            finish(&dir, report, &cfg, study.fit.exponent >= required, started)
        }

        Command::ConvergeStrong { replicas, zeta, sigma, t, n_ref, hs } => {
            set_if(&mut cfg, "study.replicas", replicas);
            set_if(&mut cfg, "grid.zeta", zeta);
            set_if(&mut cfg, "physics.sigma", sigma);
            set_if(&mut cfg, "time.t_end", t);
            set_if(&mut cfg, "study.n_ref", n_ref);
            set_if(&mut cfg, "study.hs", hs);
            cfg.validate_physics()?;
            let study_cfg = StrongConfig {
                ns: cfg.get_grid_list("study.hs", &[16, 32, 64, 128])?,
                n_ref: cfg.get_usize("study.n_ref", 512)?,
                zeta: cfg.get_f64("grid.zeta", 0.25)?,
                gamma: cfg.get_f64("physics.gamma", 1.0)?,
                sigma: cfg.get_f64("physics.sigma", 0.1)?,
                t_end: cfg.get_f64("time.t_end", 0.5)?,
                kernel: cfg.kernel("grid.kernel")?,
                u0: InitialData::Sine { freq: 1, amplitude: 1.0 },
                drift: DriftSpec::Full,
                replicas: cfg.get_usize("study.replicas", 50)?,
                seed,
            };
            let study = study_strong_convergence(&study_cfg)?;
            let mut errors = CsvTable::new(vec!["h", "replica", "error"]);
            for (li, level) in study.per_replica_sup.iter().enumerate() {
                for (r, e) in level.iter().enumerate() {
                    errors.row(vec![
                        CsvCell::F(study.hs[li]),
                        CsvCell::U(r as u64),
                        CsvCell::F(*e),
                    ]);
                }
            }
            write_artifact(&dir, "errors.csv", &errors.render())?;
            let mut rates = CsvTable::new(vec!["p", "exponent", "ci_lo", "ci_hi", "r2"]);
            rates.row(vec![
                CsvCell::F(2.0),
                CsvCell::F(study.p2.exponent),
                CsvCell::F(study.p2_ci.0),
                CsvCell::F(study.p2_ci.1),
                CsvCell::F(study.p2.r2),
            ]);
            rates.row(vec![
                CsvCell::F(4.0),
                CsvCell::F(study.p4.exponent),
                CsvCell::F(study.p4_ci.0),
                CsvCell::F(study.p4_ci.1),
                CsvCell::F(study.p4.r2),
            ]);
            write_artifact(&dir, "rates.csv", &rates.render())?;
            let mut report = ExperimentReport::new("strong convergence", seed);
            report.metric("p2_exponent", study.p2.exponent);
            report.metric("p4_exponent", study.p4.exponent);
            let pass = (0.35..=0.65).contains(&study.p2.exponent)
                && (study.p2_ci.1 - study.p2_ci.0) < 0.2;
            finish(&dir, report, &cfg, pass, started)
        }

        Command::ConvergeAs { replicas } => {
            set_if(&mut cfg, "study.replicas", replicas);
            let study_cfg = StrongConfig {
                replicas: cfg.get_usize("study.replicas", 50)?,
                seed,
                ..Default::default()
            };
            let study = study_strong_convergence(&study_cfg)?;
            let mut csv = CsvTable::new(vec!["replica", "exponent"]);
            for (r, e) in study.path_exponents.iter().enumerate() {
                csv.row(vec![CsvCell::U(r as u64), CsvCell::F(*e)]);
            }
            write_artifact(&dir, "path_exponents.csv", &csv.render())?;
            let total = study.path_exponents.len();
            let above = study.path_exponents.iter().filter(|&&e| e >= 0.25).count();
            let med = ac_lattice::experiments::median(&study.path_exponents);
            let mut report = ExperimentReport::new("pathwise convergence", seed);
            report.metric("fraction_above_025", above as f64 / total as f64);
            report.metric("median_exponent", med);
            let pass = above as f64 / total as f64 >= 0.95 && (0.35..=0.65).contains(&med);
            finish(&dir, report, &cfg, pass, started)
        }

        Command::Regularity { replicas } => {
            set_if(&mut cfg, "study.replicas", replicas);
            let replicas = cfg.get_usize("study.replicas", 4000)?;
            let n = cfg.get_usize("grid.n", 512)?;
            let zeta = cfg.get_f64("grid.zeta", 0.1)?;
            let study = study_stochastic_convolution_regularity(n, zeta, 1.0, replicas, seed)?;
            let mut csv = CsvTable::new(vec!["axis", "lag", "structure_function"]);
            for (l, v) in study.temporal_lags.iter().zip(&study.temporal_sf) {
                csv.row(vec![CsvCell::S("time".into()), CsvCell::F(*l), CsvCell::F(*v)]);
            }
            for (l, v) in study.spatial_lags.iter().zip(&study.spatial_sf) {
                csv.row(vec![CsvCell::S("space".into()), CsvCell::F(*l), CsvCell::F(*v)]);
            }
            write_artifact(&dir, "structure_functions.csv", &csv.render())?;
            let mut report = ExperimentReport::new("noise-field regularity", seed);
            report.metric("temporal_exponent", study.temporal_exponent);
            report.metric("spatial_exponent", study.spatial_exponent);
            let pass = (0.4..=0.6).contains(&study.temporal_exponent)
                && (0.85..=1.15).contains(&study.spatial_exponent);
            finish(&dir, report, &cfg, pass, started)
        }

        Command::Transition { replicas, rho, t } => {
            set_if(&mut cfg, "study.replicas", replicas);
            set_if(&mut cfg, "study.rho", rho);
            set_if(&mut cfg, "time.t_end", t);
            let study_cfg = TransitionConfig {
                replicas: cfg.get_usize("study.replicas", 200)?,
                rho: cfg.get_f64("study.rho", 0.4)?,
                t_end: cfg.get_f64("time.t_end", 200.0)?,
                norm: parse_norm(&cfg.get_str("study.norm", "2"))?,
                seed,
                ..Default::default()
            };
            let study = study_transition_times(&study_cfg)?;
            let mut csv = CsvTable::new(vec!["n", "replica", "tau"]);
            for (i, n) in study.ns.iter().enumerate() {
                for (r, tau) in study.taus[i].iter().enumerate() {
                    csv.row(vec![CsvCell::U(*n as u64), CsvCell::U(r as u64), CsvCell::F(*tau)]);
                }
            }
            write_artifact(&dir, "taus.csv", &csv.render())?;
            let mut report = ExperimentReport::new("transition times", seed);
            for (i, n) in study.ns.iter().enumerate() {
                report.metric(&format!("mean_tau_n{n}"), study.means[i]);
                report.metric(&format!("hit_fraction_n{n}"), study.hit_fraction[i]);
            }
            let pass =
                study.verdict_mean_shrinks && study.verdict_ci_overlap && study.verdict_pathwise;
            finish(&dir, report, &cfg, pass, started)
        }

        Command::Compare { seeds } => {
            set_if(&mut cfg, "study.seeds", seeds);
            let seeds = cfg.get_usize("study.seeds", 100)?;
            let study = study_comparison_principle(seeds, seed)?;
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
            write_artifact(&dir, "comparison.csv", &csv.render())?;
            let mut report = ExperimentReport::new("comparison principle", seed);
            report.metric("seeds", seeds as f64);
            finish(&dir, report, &cfg, study.pass, started)
        }

        Command::AllAcceptance {} => {
            let outcomes = run_suite(seed)?;
            let determinism = run_determinism_check(seed, &outcomes)?;
            let mut all: Vec<_> = outcomes;
            all.push(determinism);
            let mut summary = CsvTable::new(vec!["criterion", "name", "pass"]);
            let mut json_entries = Vec::new();
            let mut pass = true;
            for outcome in &all {
                println!("{}", outcome.summary_line());
                pass &= outcome.pass;
                summary.row(vec![
                    CsvCell::U(outcome.id as u64),
                    CsvCell::S(outcome.name.into()),
                    CsvCell::S(outcome.pass.to_string()),
                ]);
                let sub = dir.join(format!("criterion_{:02}", outcome.id));
                for (name, contents) in &outcome.artifacts {
                    write_artifact(&sub, name, contents)?;
                }
                json_entries.push(serde_json::json!({
                    "id": outcome.id,
                    "name": outcome.name,
                    "pass": outcome.pass,
                    "details": outcome.details,
                    "metrics": outcome.metrics,
                    "runtime_secs": outcome.runtime_secs,
                }));
            }
            write_artifact(&dir, "summary.csv", &summary.render())?;
            let report = serde_json::json!({
                "claim": "acceptance suite",
                "seed": seed,
                "pass": pass,
                "criteria": json_entries,
            });
            write_artifact(&dir, "report.json", &serde_json::to_string_pretty(&report).unwrap())?;
            println!("acceptance: {}", if pass { "PASS" } else { "FAIL" });
            Ok(pass)
        }
    }
}

fn parse_drift(text: &str) -> Result<DriftSpec, Error> {
    let parts: Vec<&str> = text.split(':').collect();
    let level = |parts: &[&str]| -> Result<f64, Error> {
        parts
            .get(1)
            .ok_or_else(|| Error::ConfigInvalid(format!("drift `{text}` needs a level, e.g. truncated:2.0")))?
            .parse()
            .map_err(|_| Error::ConfigInvalid(format!("drift `{text}`: bad level")))
    };
    let drift = match parts[0] {
        "full" => DriftSpec::Full,
        "disabled" => DriftSpec::Disabled,
        "truncated" => DriftSpec::Truncated(level(&parts)?),
        "upper" => DriftSpec::UpperOneSided(level(&parts)?),
        "lower" => DriftSpec::LowerOneSided(level(&parts)?),
        other => {
            return Err(Error::ConfigInvalid(format!(
                "drift `{other}`: expected full|disabled|truncated:Z|upper:Z|lower:Z"
            )))
        }
    };
    drift.validate()?;
    Ok(drift)
}

fn parse_integrator(text: &str) -> Result<Integrator, Error> {
    match text {
        "semi-implicit" => Ok(Integrator::SemiImplicit),
        "explicit" => Ok(Integrator::Explicit),
        other => Err(Error::ConfigInvalid(format!(
            "integrator `{other}`: expected semi-implicit|explicit"
        ))),
    }
}

fn parse_u0(text: &str) -> Result<InitialData, Error> {
    let parts: Vec<&str> = text.split(':').collect();
    let num = |s: &str| -> Result<f64, Error> {
        s.parse()
            .map_err(|_| Error::ConfigInvalid(format!("u0 `{text}`: bad number")))
    };
    match parts.as_slice() {
        ["const", c] => Ok(InitialData::Constant(num(c)?)),
        ["sine", k, a] => Ok(InitialData::Sine {
            freq: num(k)? as usize,
            amplitude: num(a)?,
        }),
        ["cosine", k, a] => Ok(InitialData::Cosine {
            freq: num(k)? as usize,
            amplitude: num(a)?,
        }),
        _ => Err(Error::ConfigInvalid(format!(
            "u0 `{text}`: expected const:C|sine:K:A|cosine:K:A"
        ))),
    }
}

fn parse_norm(text: &str) -> Result<LqNorm, Error> {
    match text {
        "1" => Ok(LqNorm::L1),
        "2" => Ok(LqNorm::L2),
        "inf" => Ok(LqNorm::LInf),
        other => Err(Error::ConfigInvalid(format!(
            "norm `{other}`: expected 1|2|inf"
        ))),
    }
}
