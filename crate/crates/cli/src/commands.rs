//! Sweep subcommands. Every sweep point yields exactly one row, including
//! failed runs, and rows are emitted in grid order.

use linopt::bounds::{bound_erm1, bound_erm1prime, bound_erm2, generalization_experiment, BoundParams};
use linopt::junta::{algorithm1, JuntaReport, TrainingSize};
use linopt::optics::{frobenius_dist_sq, haar_unitary, realify_unchecked};
use linopt::optimizer::{minimize, OptimConfig};
use linopt::risk::{empirical_risk, swap_test_risk};
use linopt::training::sample_training_set;
use linopt::{embed_junta, random_linear_optical, rng, Error, JuntaSpec, SchemeTag, ShotModel, SymplecticOrthogonal};
use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::output::emit;
use crate::{CliError, Config, OutputOptions};

/// Stream offsets keeping the seed families of different commands apart.
const ERM_STREAM: u64 = 1 << 40;
const JUNTA_STREAM: u64 = 2 << 40;
const BOUNDS_STREAM: u64 = 3 << 40;
const SWAP_STREAM: u64 = 4 << 40;

fn draw(seed: u64, stream: u64) -> u64 {
    rng::substream(seed, stream).random()
}

/// Stream id of a sweep point, independent of where it sits in the grid.
fn point_stream(tag: u64, size: usize, energy: f64) -> u64 {
    (tag << 60) | ((size as u64 & 0xffff) << 44) | (energy.to_bits() >> 20)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErmRow {
    pub scheme: SchemeTag,
    #[serde(rename = "M")]
    pub modes: usize,
    #[serde(rename = "E")]
    pub energy: f64,
    #[serde(rename = "T")]
    pub size: usize,
    pub seed: u64,
    pub converged: bool,
    pub risk_final: f64,
    pub frobenius_dist_sq: f64,
    pub unitarity_residual: f64,
    /// `converged`, `not_converged` or `error`.
    pub status: String,
}

/// Target for seed index `s`, shared by every scheme, `E` and `T` of a sweep.
pub fn erm_target(base: u64, modes: usize, s: u64) -> SymplecticOrthogonal<f64> {
    random_linear_optical(modes, draw(base, ERM_STREAM | s))
}

/// One ERM run: sample a training set, minimize, compare with the target.
pub fn erm_point(
    base: u64,
    scheme: SchemeTag,
    modes: usize,
    energy: f64,
    size: usize,
    s: u64,
    optim: &OptimConfig,
) -> ErmRow {
    let target = erm_target(base, modes, s);
    let mut r = rng::substream(draw(base, ERM_STREAM | s), point_stream(scheme as u64, size, energy));
    let mut run = || -> linopt::Result<_> {
        let set = sample_training_set(scheme, modes, size, energy, r.random())?;
        let cfg = OptimConfig { seed: r.random(), ..optim.clone() };
        let res = minimize(&set, &target, &cfg)?;
        let dist = frobenius_dist_sq(target.matrix(), &realify_unchecked(&res.g_final));
        Ok((res, dist))
    };
    let mut row = ErmRow {
        scheme,
        modes,
        energy,
        size,
        seed: s,
        converged: false,
        risk_final: f64::NAN,
        frobenius_dist_sq: f64::NAN,
        unitarity_residual: f64::NAN,
        status: "error".into(),
    };
    match run() {
        Ok((res, dist)) => {
            row.converged = res.converged;
            row.risk_final = res.risk_final;
            row.frobenius_dist_sq = dist;
            row.unitarity_residual = res.unitarity_residual;
            row.status = if res.converged { "converged" } else { "not_converged" }.into();
        }
        Err(e) => log::warn!("erm {scheme} E={energy} T={size} seed={s}: {e}"),
    }
    row
}

pub fn erm_rows(cfg: &Config) -> Vec<ErmRow> {
    let e = &cfg.erm;
    let mut grid = Vec::new();
    for &scheme in &e.schemes {
        for &energy in &e.energies {
            for &size in &e.sizes {
                for s in 0..e.seeds {
                    grid.push((scheme, energy, size, s));
                }
            }
        }
    }
    grid.into_par_iter()
        .map(|(scheme, energy, size, s)| erm_point(cfg.seed, scheme, e.modes, energy, size, s, &e.optim))
        .collect()
}

pub fn cmd_erm(cfg: &Config, opts: &OutputOptions) -> Result<i32, CliError> {
    cfg.validate()?;
    let rows = erm_rows(cfg);
    emit("erm", cfg, &rows, opts)?;
    Ok(0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JuntaRow {
    pub seed: u64,
    #[serde(rename = "M")]
    pub modes: usize,
    pub k: usize,
    #[serde(rename = "T")]
    pub size: usize,
    pub energy_scale: f64,
    /// 1-based, space separated.
    pub true_junta: String,
    pub found_junta: String,
    pub recovered: bool,
    pub stages: usize,
    /// `log10 c_m` for `m = 2, 3, …`, separated by `;`.
    pub log10_stage_minima: String,
    pub final_risk: f64,
    pub final_distance: f64,
    pub energy_spent: f64,
    /// `terminated`, `stage_limit`, `budget_exceeded` or `error`.
    pub status: String,
}

fn mode_list(modes: &[usize]) -> String {
    modes.iter().map(|m| (m + 1).to_string()).collect::<Vec<_>>().join(" ")
}

/// Junta target for seed index `s` (0-based junta modes).
pub fn junta_target(cfg: &Config, s: u64) -> linopt::Result<(Vec<usize>, SymplecticOrthogonal<f64>)> {
    let j = &cfg.junta;
    let mut r = rng::substream(cfg.seed, JUNTA_STREAM | s);
    let mut modes: Vec<usize> = match &j.junta_modes {
        Some(list) => list.iter().map(|m| m - 1).collect(),
        None => sample(&mut r, j.modes, j.junta_size).into_vec(),
    };
    modes.sort_unstable();
    if modes.is_empty() {
        return Ok((modes, SymplecticOrthogonal::identity(j.modes)));
    }
    let inner = random_linear_optical(modes.len(), r.random());
    let spec = JuntaSpec::new(j.modes, modes.clone(), inner)?;
    Ok((modes, embed_junta(&spec)))
}

fn junta_row_from(report: &JuntaReport, target: &SymplecticOrthogonal<f64>, row: &mut JuntaRow, truth: &[usize]) {
    row.found_junta = mode_list(&report.junta_set);
    row.recovered = report.junta_set == truth;
    row.stages = report.stage_count();
    row.log10_stage_minima = report
        .stages
        .iter()
        .map(|s| format!("{:.4}", s.minimum.log10()))
        .collect::<Vec<_>>()
        .join(";");
    row.final_risk = report.final_risk;
    row.final_distance = frobenius_dist_sq(target.matrix(), &realify_unchecked(&report.learned_full));
    row.energy_spent = report.energy_spent;
}

pub fn junta_point(cfg: &Config, s: u64, size: usize, scale: f64) -> JuntaRow {
    let j = &cfg.junta;
    let mut row = JuntaRow {
        seed: s,
        modes: j.modes,
        k: j.junta_size,
        size,
        energy_scale: scale,
        true_junta: String::new(),
        found_junta: String::new(),
        recovered: false,
        stages: 0,
        log10_stage_minima: String::new(),
        final_risk: f64::NAN,
        final_distance: f64::NAN,
        energy_spent: f64::NAN,
        status: "error".into(),
    };
    let (truth, target) = match junta_target(cfg, s) {
        Ok(t) => t,
        Err(e) => {
            log::warn!("junta seed={s}: {e}");
            return row;
        }
    };
    row.true_junta = mode_list(&truth);
    let policy = linopt::junta::StagePolicy {
        training_size: TrainingSize::AtLeast(size),
        stage_energy_per_mode: scale,
        ..j.policy.clone()
    };
    let run_seed = rng::substream(draw(cfg.seed, JUNTA_STREAM | (1 << 32) | s), point_stream(0, size, scale)).random();
    match algorithm1(&target, &policy, run_seed) {
        Ok(report) => {
            junta_row_from(&report, &target, &mut row, &truth);
            row.status = "terminated".into();
        }
        Err(Error::StageLimitReached(report)) => {
            junta_row_from(&report, &target, &mut row, &truth);
            row.status = "stage_limit".into();
        }
        Err(Error::BudgetExceeded { spent, .. }) => {
            row.energy_spent = spent;
            row.status = "budget_exceeded".into();
        }
        Err(e) => log::warn!("junta seed={s} T={size}: {e}"),
    }
    row
}

pub fn junta_rows(cfg: &Config) -> Vec<JuntaRow> {
    let j = &cfg.junta;
    let mut grid = Vec::new();
    for &scale in &j.energy_scales {
        for &size in &j.sizes {
            for s in 0..j.seeds {
                grid.push((scale, size, s));
            }
        }
    }
    grid.into_par_iter().map(|(scale, size, s)| junta_point(cfg, s, size, scale)).collect()
}

pub fn cmd_junta(cfg: &Config, opts: &OutputOptions) -> Result<i32, CliError> {
    cfg.validate()?;
    let rows = junta_rows(cfg);
    emit("junta", cfg, &rows, opts)?;
    Ok(0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsRow {
    pub scheme: SchemeTag,
    #[serde(rename = "M")]
    pub modes: usize,
    #[serde(rename = "E")]
    pub energy: f64,
    pub delta: f64,
    #[serde(rename = "T")]
    pub size: usize,
    pub median_gap: f64,
    pub max_gap: f64,
    pub probe_median_gap: f64,
    pub bound_erm1: f64,
    pub bound_erm1prime: f64,
    pub bound_erm2: f64,
    pub violation_fraction: f64,
    pub sets: usize,
    pub excluded: usize,
}

pub fn bounds_rows(cfg: &Config) -> Result<Vec<BoundsRow>, CliError> {
    let b = &cfg.bounds;
    let target = random_linear_optical(b.modes, draw(cfg.seed, BOUNDS_STREAM));
    let exp_seed = draw(cfg.seed, BOUNDS_STREAM | 1);
    let mut rows = Vec::new();
    for &scheme in &b.schemes {
        let report = generalization_experiment(scheme, &target, b.energy, &b.sizes, b.delta, b.sets_per_size, &b.experiment, exp_seed)?;
        for r in &report.rows {
            let p = BoundParams::new(b.modes, r.size, b.energy, b.delta)?;
            rows.push(BoundsRow {
                scheme,
                modes: b.modes,
                energy: b.energy,
                delta: b.delta,
                size: r.size,
                median_gap: r.median_gap,
                max_gap: r.max_gap,
                probe_median_gap: r.probe_median_gap,
                bound_erm1: bound_erm1(&p),
                bound_erm1prime: bound_erm1prime(&p),
                bound_erm2: bound_erm2(&p),
                violation_fraction: if r.sets == 0 { 0.0 } else { r.violations as f64 / r.sets as f64 },
                sets: r.sets,
                excluded: r.excluded,
            });
        }
    }
    Ok(rows)
}

pub fn cmd_bounds(cfg: &Config, opts: &OutputOptions) -> Result<i32, CliError> {
    cfg.validate()?;
    let rows = bounds_rows(cfg)?;
    emit("bounds", cfg, &rows, opts)?;
    Ok(0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SwapRiskRow {
    pub scheme: SchemeTag,
    #[serde(rename = "M")]
    pub modes: usize,
    #[serde(rename = "E")]
    pub energy: f64,
    #[serde(rename = "T")]
    pub size: usize,
    pub seed: u64,
    pub shots: u64,
    pub exact_risk: f64,
    pub swap_risk: f64,
    pub abs_error: f64,
}

/// Exact empirical risk of a Haar-random hypothesis against its SWAP-test estimate.
pub fn swap_risk_rows(cfg: &Config) -> Result<Vec<SwapRiskRow>, CliError> {
    let c = &cfg.swap_risk;
    let grid: Vec<(u64, u64)> = (0..c.seeds).flat_map(|s| c.shots.iter().map(move |&n| (s, n))).collect();
    let rows = grid
        .into_par_iter()
        .map(|(s, shots)| -> linopt::Result<SwapRiskRow> {
            let mut r = rng::substream(cfg.seed, SWAP_STREAM | s);
            let target = random_linear_optical(c.modes, r.random());
            let g = haar_unitary::<f64, _>(c.modes, &mut r);
            let set = sample_training_set(c.scheme, c.modes, c.size, c.energy, r.random())?;
            let exact = empirical_risk(&set, &target, &g)?.value;
            let model = ShotModel::new(shots, r.random::<u64>() ^ shots)?;
            let est = swap_test_risk(&set, &target, &g, model)?.value;
            Ok(SwapRiskRow {
                scheme: c.scheme,
                modes: c.modes,
                energy: c.energy,
                size: c.size,
                seed: s,
                shots,
                exact_risk: exact,
                swap_risk: est,
                abs_error: (exact - est).abs(),
            })
        })
        .collect::<linopt::Result<Vec<_>>>()?;
    Ok(rows)
}

pub fn cmd_swap_risk(cfg: &Config, opts: &OutputOptions) -> Result<i32, CliError> {
    cfg.validate()?;
    let rows = swap_risk_rows(cfg)?;
    emit("swap-risk", cfg, &rows, opts)?;
    Ok(0)
}
