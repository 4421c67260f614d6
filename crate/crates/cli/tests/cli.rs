use std::path::Path;
use std::process::Command;

use linopt::SchemeTag;
use linopt_cli::commands::{junta_rows, swap_risk_rows};
use linopt_cli::config::{ErmConfig, JuntaConfig, SwapRiskConfig, VerifyConfig};
use linopt_cli::output::sidecar_path;
use linopt_cli::verify::closed_form_fidelity;
use linopt_cli::{cmd_verify_with, Config, OutputOptions, WORKERS_ENV};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_linopt"))
}

const SMALL: &str = r#"
seed = 3

[erm]
schemes = ["ERM1", "ERM2"]
modes = 2
sizes = [1, 2]
energies = [1.0]
seeds = 2

[erm.optim]
restarts = 2

[verify]
oracle_instances = 6
oracle_cutoff = 25
gradient_instances = 4
lipschitz_trials = 4
lipschitz_mc_samples = 2048
marginal_sets = 2000
"#;

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let path = dir.join("config.toml");
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn default_config_round_trips() {
    let cfg = Config::default();
    assert_eq!(Config::from_toml(&cfg.to_toml()).unwrap(), cfg);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn edited_configs_round_trip(
        seed in any::<u64>(),
        modes in 1usize..6,
        sizes in proptest::collection::vec(1usize..20, 1..5),
        energies in proptest::collection::vec(0.0f64..100.0, 1..4),
        scheme in 0usize..3,
        shots in proptest::collection::vec(1u64..1_000_000, 1..4),
    ) {
        let cfg = Config {
            seed,
            erm: ErmConfig { schemes: vec![SchemeTag::ALL[scheme]], modes, sizes, energies, ..ErmConfig::default() },
            swap_risk: SwapRiskConfig { shots, ..SwapRiskConfig::default() },
            ..Config::default()
        };
        prop_assert_eq!(Config::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }
}

#[test]
fn invalid_configs_are_rejected() {
    assert!(Config::from_toml("unknown = 1").is_err());
    assert!(Config::from_toml("[erm]\nsizes = []").is_err());
    assert!(Config::from_toml("[junta]\nmodes = 4\njunta_size = 2\njunta_modes = [1, 9]").is_err());
    assert!(Config::from_toml("[bounds]\ndelta = 1.5").is_err());
}

#[test]
fn erm_writes_csv_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("erm.csv");
    let status = bin().args(["erm", "--config"]).arg(&cfg).arg("--out").arg(&out).status().unwrap();
    assert!(status.success());
    let csv = std::fs::read_to_string(&out).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "scheme,M,E,T,seed,converged,risk_final,frobenius_dist_sq,unitarity_residual,status"
    );
    // every sweep point appears once: 2 schemes × 2 sizes × 2 seeds
    assert_eq!(lines.count(), 8);
    let meta: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(sidecar_path(&out)).unwrap()).unwrap();
    assert_eq!(meta["command"], "erm");
    assert_eq!(meta["seed"], 3);
    assert_eq!(meta["version"], env!("CARGO_PKG_VERSION"));
}

#[test]
fn seed_flag_overrides_config_and_changes_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let run = |seed: &str| {
        let out = bin().args(["erm", "--seed", seed, "--config"]).arg(&cfg).output().unwrap();
        assert!(out.status.success());
        out.stdout
    };
    assert_eq!(run("5"), run("5"));
    assert_ne!(run("5"), run("6"));
}

#[test]
fn json_format_holds_rows_and_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = bin().args(["erm", "--format", "json", "--config"]).arg(&cfg).output().unwrap();
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["rows"].as_array().unwrap().len(), 8);
    assert_eq!(doc["config"]["erm"]["modes"], 2);
    assert!(doc["rows"][0]["converged"].is_boolean());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[erm]\nmodes = 0").unwrap();
    let code = |args: &[&str], cfg: &Path| bin().args(args).arg("--config").arg(cfg).status().unwrap().code();
    assert_eq!(code(&["erm"], &bad), Some(2));
    assert_eq!(code(&["erm"], &dir.path().join("missing.toml")), Some(2));
    let good = write_config(dir.path(), SMALL);
    assert_eq!(code(&["erm", "--out", "/nonexistent-dir/x.csv"], &good), Some(1));
    assert_eq!(code(&["verify"], &good), Some(0));
}

#[test]
fn workers_env_is_honored_and_flag_wins() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let env_zero = bin().args(["erm", "--config"]).arg(&cfg).env(WORKERS_ENV, "0").status().unwrap();
    assert_eq!(env_zero.code(), Some(2));
    let flag = bin().args(["erm", "--workers", "2", "--config"]).arg(&cfg).env(WORKERS_ENV, "0").status().unwrap();
    assert!(flag.success());
}

fn perturbed_fidelity(x: &DVector<f64>, ou: &DMatrix<f64>, ov: &DMatrix<f64>) -> f64 {
    closed_form_fidelity(x, ou, ov) * (1.0 - 1e-4 * x.norm_squared())
}

#[test]
fn verify_flags_a_perturbed_fidelity() {
    let cfg = Config::from_toml(SMALL).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let opts = OutputOptions { out: Some(dir.path().join("verify.csv")), ..OutputOptions::default() };
    assert_eq!(cmd_verify_with(&cfg, &opts, closed_form_fidelity).unwrap(), 0);
    assert_eq!(cmd_verify_with(&cfg, &opts, perturbed_fidelity).unwrap(), 3);
    let table = std::fs::read_to_string(dir.path().join("verify.csv")).unwrap();
    assert!(table.contains("oracle_agreement,false"));
    assert!(table.contains("gradient,false"));
}

#[test]
fn verify_defaults_are_full_scale() {
    let v = VerifyConfig::default();
    assert_eq!((v.oracle_instances, v.oracle_cutoff), (100, Some(40)));
    assert_eq!(v.lipschitz_trials, 1000);
    assert_eq!(v.marginal_sets, 100_000);
}

#[test]
fn identity_target_stops_at_pairs() {
    let cfg = Config {
        junta: JuntaConfig { modes: 4, junta_size: 0, junta_modes: None, sizes: vec![2], energy_scales: vec![1.0], seeds: 2, ..JuntaConfig::default() },
        ..Config::default()
    };
    for row in junta_rows(&cfg) {
        assert_eq!(row.status, "terminated");
        assert_eq!(row.stages, 1);
        assert!(row.final_distance < 1e-8, "{row:?}");
    }
}

#[test]
fn final_distance_shrinks_with_stage_energy() {
    let cfg = Config {
        junta: JuntaConfig {
            modes: 4,
            junta_size: 2,
            junta_modes: Some(vec![1, 3]),
            sizes: vec![2],
            energy_scales: vec![0.01, 1.0],
            seeds: 3,
            ..JuntaConfig::default()
        },
        ..Config::default()
    };
    let rows = junta_rows(&cfg);
    let mean = |scale: f64| {
        let d: Vec<f64> = rows.iter().filter(|r| r.energy_scale == scale).map(|r| r.final_distance).collect();
        d.iter().sum::<f64>() / d.len() as f64
    };
    assert!(rows.iter().all(|r| r.recovered && r.found_junta == "1 3"), "{rows:#?}");
    assert!(mean(1.0) < mean(0.01), "{} vs {}", mean(1.0), mean(0.01));
}

#[test]
fn swap_estimate_tightens_with_shots() {
    let cfg = Config {
        swap_risk: SwapRiskConfig { modes: 2, shots: vec![10, 1_000_000], seeds: 4, ..SwapRiskConfig::default() },
        ..Config::default()
    };
    let rows = swap_risk_rows(&cfg).unwrap();
    assert_eq!(rows.len(), 8);
    for r in rows.iter().filter(|r| r.shots == 1_000_000) {
        assert!(r.abs_error < 5e-3, "{r:?}");
    }
}
