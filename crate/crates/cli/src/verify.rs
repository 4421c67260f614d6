//! Self-check suite: oracle agreement, gradients, Lipschitz implications and
//! the ERM2 marginal energy.

use std::io::Write;

use linopt::bounds::lipschitz_experiment;
use linopt::fock::{oracle_fidelity, FockSpace};
use linopt::optics::{fidelity_raw, haar_unitary, realify, realify_unchecked};
use linopt::risk::risk_and_gradient;
use linopt::training::{sample_sphere, sample_training_set};
use linopt::{rng, ComplexTransfer, MeanVector, SchemeTag};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::output::emit;
use crate::{CliError, Config, OutputOptions};

/// Closed-form coherent-state fidelity `F(x; O_U, O_V)` under test.
pub type FidelityFn = fn(&DVector<f64>, &DMatrix<f64>, &DMatrix<f64>) -> f64;

pub fn closed_form_fidelity(x: &DVector<f64>, ou: &DMatrix<f64>, ov: &DMatrix<f64>) -> f64 {
    fidelity_raw(x, ou, ov).expect("matching dimensions")
}

const VERIFY_STREAM: u64 = 5 << 40;
const ORACLE_TOL: f64 = 1e-8;
const GRADIENT_TOL: f64 = 1e-5;
const MARGINAL_TOL: f64 = 0.02;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRow {
    pub check: String,
    pub passed: bool,
    pub value: f64,
    pub threshold: f64,
    pub detail: String,
}

fn row(check: &str, passed: bool, value: f64, threshold: f64, detail: String) -> CheckRow {
    CheckRow { check: check.into(), passed, value, threshold, detail }
}

fn failed(check: &str, threshold: f64, err: impl std::fmt::Display) -> CheckRow {
    row(check, false, f64::NAN, threshold, err.to_string())
}

/// Largest `|F − F_oracle|` over random `M ≤ 2`, `‖x‖ ≤ 2` instances.
pub fn oracle_check(fid: FidelityFn, instances: usize, cutoff: Option<usize>, seed: u64) -> CheckRow {
    let spaces: linopt::Result<Vec<FockSpace>> = (1..=2)
        .map(|m| match cutoff {
            Some(n) => FockSpace::new(m, n),
            None => FockSpace::with_default_cutoff(m),
        })
        .collect();
    let spaces = match spaces {
        Ok(s) => s,
        Err(e) => return failed("oracle_agreement", ORACLE_TOL, e),
    };
    let worst = (0..instances)
        .into_par_iter()
        .map(|i| -> linopt::Result<f64> {
            let m = 1 + i % 2;
            let mut r = rng::substream(seed, i as u64);
            let ou = realify(&haar_unitary::<f64, _>(m, &mut r))?;
            let ov = realify(&haar_unitary::<f64, _>(m, &mut r))?;
            let radius = 2.0 * r.random::<f64>();
            let x = sample_sphere::<f64, _>(2 * m, radius, &mut r);
            let oracle = oracle_fidelity(&MeanVector::new(x.clone())?, &ou, &ov, &spaces[m - 1])?;
            Ok((fid(&x, ou.matrix(), ov.matrix()) - oracle).abs())
        })
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)));
    match worst {
        Ok(w) => row("oracle_agreement", w < ORACLE_TOL, w, ORACLE_TOL, format!("{instances} instances")),
        Err(e) => failed("oracle_agreement", ORACLE_TOL, e),
    }
}

fn hook_risk(fid: FidelityFn, states: &[MeanVector<f64>], ou: &DMatrix<f64>, params: &[f64], m: usize) -> f64 {
    let ov = realify_unchecked(&ComplexTransfer::from_params(m, params));
    let sum: f64 = states.iter().map(|x| 1.0 - fid(x.as_vector(), ou, &ov)).sum();
    sum / states.len() as f64
}

/// Analytic risk gradient against central differences of the risk built from `fid`.
pub fn gradient_check(fid: FidelityFn, instances: usize, seed: u64) -> CheckRow {
    const H: f64 = 1e-6;
    let worst = (0..instances)
        .into_par_iter()
        .map(|i| -> linopt::Result<f64> {
            let mut r = rng::substream(seed, i as u64);
            let m = r.random_range(1..=4);
            let size = r.random_range(1..=6);
            let scheme = SchemeTag::ALL[r.random_range(0..3)];
            let energy = r.random_range(0.5..4.0);
            let ou = realify(&haar_unitary::<f64, _>(m, &mut r))?;
            let set = sample_training_set::<f64>(scheme, m, size, energy, r.random())?;
            let base = haar_unitary::<f64, _>(m, &mut r).params();
            let params: Vec<f64> = base.iter().map(|p| p + 0.1 * (r.random::<f64>() - 0.5)).collect();
            let g = ComplexTransfer::from_params(m, &params);
            let (_, analytic) = risk_and_gradient(&set.states, ou.matrix(), &g);
            let mut num = 0.0;
            let mut den = 0.0;
            for (k, a) in analytic.iter().enumerate() {
                let mut p = params.clone();
                p[k] += H;
                let plus = hook_risk(fid, &set.states, ou.matrix(), &p, m);
                p[k] -= 2.0 * H;
                let minus = hook_risk(fid, &set.states, ou.matrix(), &p, m);
                let fd = (plus - minus) / (2.0 * H);
                num += (a - fd).powi(2);
                den += a * a;
            }
            Ok(num.sqrt() / den.sqrt().max(1e-8))
        })
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)));
    match worst {
        Ok(w) => row("gradient", w < GRADIENT_TOL, w, GRADIENT_TOL, format!("{instances} instances, max relative error")),
        Err(e) => failed("gradient", GRADIENT_TOL, e),
    }
}

pub fn lipschitz_row(trials: usize, mc_samples: usize, seed: u64) -> CheckRow {
    match lipschitz_experiment(2, 1.0, trials, mc_samples, seed) {
        Ok(rep) => row(
            "lipschitz",
            rep.violations() == 0,
            rep.violations() as f64,
            0.0,
            format!("{trials} triples at M=2 E=1, worst gap/eps {:.3}", rep.worst_ratio),
        ),
        Err(e) => failed("lipschitz", 0.0, e),
    }
}

/// Mean per-state energy of ERM2 sets at `M = 4, T = 5, E = 10` (expected `E/T = 2`).
pub fn marginal_energy_check(sets: usize, seed: u64) -> CheckRow {
    let (m, t, e) = (4, 5, 10.0);
    let sum = (0..sets)
        .into_par_iter()
        .map(|i| -> linopt::Result<f64> {
            let set = sample_training_set::<f64>(SchemeTag::Erm2, m, t, e, rng::substream(seed, i as u64).random())?;
            Ok(set.states.iter().map(|x| x.energy()).sum::<f64>() / t as f64)
        })
        .try_reduce(|| 0.0, |a, b| Ok(a + b));
    match sum {
        Ok(s) => {
            let mean = s / sets.max(1) as f64;
            let rel = (mean - e / t as f64).abs() / (e / t as f64);
            row("marginal_energy", rel < MARGINAL_TOL, mean, MARGINAL_TOL, format!("{sets} ERM2 sets, M=4 T=5 E=10, expected 2"))
        }
        Err(err) => failed("marginal_energy", MARGINAL_TOL, err),
    }
}

pub fn verify_rows(cfg: &Config, fid: FidelityFn) -> Vec<CheckRow> {
    let v = &cfg.verify;
    let seed = |k: u64| rng::substream(cfg.seed, VERIFY_STREAM | k).random::<u64>();
    vec![
        oracle_check(fid, v.oracle_instances, v.oracle_cutoff, seed(0)),
        gradient_check(fid, v.gradient_instances, seed(1)),
        lipschitz_row(v.lipschitz_trials, v.lipschitz_mc_samples, seed(2)),
        marginal_energy_check(v.marginal_sets, seed(3)),
    ]
}

pub fn print_table<W: Write>(rows: &[CheckRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "{:<18} {:<6} {:>12} {:>10}  detail", "check", "status", "value", "threshold")?;
    for r in rows {
        let status = if r.passed { "PASS" } else { "FAIL" };
        writeln!(w, "{:<18} {:<6} {:>12.3e} {:>10.1e}  {}", r.check, status, r.value, r.threshold, r.detail)?;
    }
    Ok(())
}

/// Runs the suite with `fid` as the fidelity under test; exit code 3 on any failure.
pub fn cmd_verify_with(cfg: &Config, opts: &OutputOptions, fid: FidelityFn) -> Result<i32, CliError> {
    cfg.validate()?;
    let rows = verify_rows(cfg, fid);
    print_table(&rows, std::io::stderr().lock())?;
    emit("verify", cfg, &rows, opts)?;
    Ok(if rows.iter().all(|r| r.passed) { 0 } else { 3 })
}

pub fn cmd_verify(cfg: &Config, opts: &OutputOptions) -> Result<i32, CliError> {
    cmd_verify_with(cfg, opts, closed_form_fidelity)
}
