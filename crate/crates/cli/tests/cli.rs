//! End-to-end checks of the binary: artifact layout, exit codes, and
//! byte-level determinism across thread counts.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ac-lattice"))
}

fn tmp_dir(tag: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("ac-lattice-cli-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("missing {path:?}: {e}"))
}

#[test]
fn eigen_emits_expected_table() {
    let out = tmp_dir("eigen");
    let status = bin()
        .args(["eigen", "--n", "64", "--zeta", "0.25"])
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let csv = read(&out.join("eigen/eigen.csv"));
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "k,lambda_paper,lambda_circulant,lower_bound,upper_bound,gap");
    assert_eq!(lines.len(), 66, "header + 65 rows for k = 0..=64");
    let report = read(&out.join("eigen/report.json"));
    assert!(report.contains("\"pass\": true"));
}

#[test]
fn simulate_quiescent_equilibrium_stays_constant() {
    let out = tmp_dir("sim");
    let status = bin()
        .args([
            "simulate", "--n", "32", "--sigma", "0", "--t", "0.05", "--dt", "1e-3", "--u0",
            "const:-1", "--record-every", "10",
        ])
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let csv = read(&out.join("simulate/trajectory.csv"));
    for line in csv.lines().skip(1) {
        for cell in line.split(',').skip(1) {
            let v: f64 = cell.parse().unwrap();
            assert!((v + 1.0).abs() < 1e-13, "drifted to {v}");
        }
    }
    assert!(out.join("simulate/trajectory.bin").exists());
}

#[test]
fn invalid_config_exits_2() {
    let out = tmp_dir("bad");
    let status = bin()
        .args(["simulate", "--n", "32", "--drift", "truncated:0.5"])
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
    let report = read(&out.join("simulate/report.json"));
    assert!(report.contains("\"error\""));
}

#[test]
fn config_file_plus_flag_overrides() {
    let out = tmp_dir("cfg");
    std::fs::create_dir_all(&out).unwrap();
    let cfg = out.join("run.conf");
    std::fs::write(&cfg, "grid.n = 16\nphysics.sigma = 0\ntime.t_end = 0.02\ntime.dt = 1e-3\ninitial.u0 = const:1\n").unwrap();
    let status = bin()
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .args(["simulate", "--n", "8"])
        .status()
        .unwrap();
    assert!(status.success());
    let report = read(&out.join("simulate/report.json"));
    // the flag override wins and is echoed
    assert!(report.contains("\"grid.n\": \"8\""));
}

#[test]
fn noise_check_artifacts_deterministic_across_threads() {
    let out1 = tmp_dir("det1");
    let out2 = tmp_dir("det2");
    for (out, threads) in [(&out1, "2"), (&out2, "1")] {
        let status = bin()
            .args(["noise-check", "--seed", "7", "--threads", threads])
            .arg("--out")
            .arg(out)
            .status()
            .unwrap();
        assert!(status.success());
    }
    assert_eq!(
        read(&out1.join("noise-check/noise.csv")),
        read(&out2.join("noise-check/noise.csv"))
    );
}

#[test]
fn semigroup_subcommand_fits_rate() {
    let out = tmp_dir("sg");
    let status = bin()
        .args(["semigroup", "--t0", "0.1", "--zeta", "0.25", "--hs", "1/16,1/32,1/64,1/128"])
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let csv = read(&out.join("semigroup/semigroup.csv"));
    assert!(csv.lines().next().unwrap().starts_with("h,sup_distance,fitted_rate"));
    assert_eq!(csv.lines().count(), 5);
}
