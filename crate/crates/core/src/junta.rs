//! Adaptive discovery of the junta set of a linear optical k-junta.
//!
//! Stage 2 minimizes the empirical risk over every two-mode ansatz; later
//! stages grow the current junta set by one mode at a time until the stage
//! minimum drops below the termination threshold. A separate semiclassical
//! routine identifies the junta set from single-mode SWAP tests without
//! learning the circuit.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optics::{embed_transfer, ComplexTransfer, MeanVector, SymplecticOrthogonal};
use crate::optimizer::{displacement_residuals, minimize_objective, Objective, OptimConfig};
use crate::risk::{risk_and_gradient, swap_test_fidelity};
use crate::training::{sample_sphere, sample_training_set};
use crate::{rng, SchemeTag, TrainingSet};

/// Number of training states used at stage `m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainingSize {
    /// `T(m) = m`, the smallest faithful size for an m-mode ansatz.
    StageSize,
    /// `T(m) = max(T, m)`.
    AtLeast(usize),
}

impl TrainingSize {
    pub fn at_stage(self, m: usize) -> usize {
        match self {
            TrainingSize::StageSize => m,
            TrainingSize::AtLeast(t) => t.max(m),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StagePolicy {
    pub termination_threshold: f64,
    /// Candidates within `min · (1 + tie_tolerance)` of the stage minimum are selected.
    pub tie_tolerance: f64,
    pub training_size: TrainingSize,
    /// Stage energy `E_m = stage_energy_per_mode · m` unless overridden.
    pub stage_energy_per_mode: f64,
    /// Explicit `E_2, E_3, …`; entries beyond the list fall back to the linear rule.
    pub stage_energies: Vec<f64>,
    pub scheme: SchemeTag,
    pub energy_cap: Option<f64>,
    pub optim: OptimConfig,
}

impl Default for StagePolicy {
    fn default() -> Self {
        Self {
            termination_threshold: 1e-10,
            tie_tolerance: 1e-2,
            training_size: TrainingSize::StageSize,
            stage_energy_per_mode: 1.0,
            stage_energies: Vec::new(),
            scheme: SchemeTag::Erm2,
            energy_cap: None,
            optim: OptimConfig {
                restarts: 5,
                ..OptimConfig::default()
            },
        }
    }
}

impl StagePolicy {
    pub fn stage_energy(&self, m: usize) -> f64 {
        self.stage_energies
            .get(m.saturating_sub(2))
            .copied()
            .unwrap_or(self.stage_energy_per_mode * m as f64)
    }

    fn validate(&self) -> Result<()> {
        if !(self.termination_threshold > 0.0 && self.tie_tolerance >= 0.0) {
            return Err(Error::InvalidParameter("thresholds must be positive".into()));
        }
        if let TrainingSize::AtLeast(0) = self.training_size {
            return Err(Error::InvalidParameter("training size must be ≥ 1".into()));
        }
        self.optim.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    /// Ansatz size `m` (2 for pairs).
    pub stage: usize,
    pub candidate_count: usize,
    /// `c_m`.
    pub minimum: f64,
    /// Selected mode subsets (0-based).
    pub selected: Vec<Vec<usize>>,
    pub training_size: usize,
    pub stage_energy: f64,
    /// Risk of the product of disjoint improving pair ansatze, when evaluated.
    pub product_risk: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JuntaReport {
    /// Junta set (0-based, sorted).
    pub junta_set: Vec<usize>,
    pub stages: Vec<StageRecord>,
    /// Learned transfer restricted to the junta set.
    pub learned: ComplexTransfer<f64>,
    /// Learned transfer on all M modes.
    pub learned_full: ComplexTransfer<f64>,
    pub final_risk: f64,
    pub energy_spent: f64,
    pub terminated_stage: usize,
}

impl JuntaReport {
    pub fn stage_count(&self) -> usize {
        self.stages.len()
    }
}

/// Empirical risk of an ansatz acting on `modes` only.
pub struct SubsetObjective<'a> {
    states: &'a [MeanVector<f64>],
    target: &'a DMatrix<f64>,
    mode_count: usize,
    modes: Vec<usize>,
}

impl<'a> SubsetObjective<'a> {
    pub fn new(set: &'a TrainingSet<f64>, target: &'a SymplecticOrthogonal<f64>, modes: Vec<usize>) -> Self {
        Self {
            states: &set.states,
            target: target.matrix(),
            mode_count: target.mode_count(),
            modes,
        }
    }

    pub fn embed(&self, inner: &ComplexTransfer<f64>) -> ComplexTransfer<f64> {
        embed_transfer(self.mode_count, &self.modes, inner).expect("subset within range")
    }
}

impl Objective<f64> for SubsetObjective<'_> {
    fn modes(&self) -> usize {
        self.modes.len()
    }

    fn risk_and_gradient(&self, g: &ComplexTransfer<f64>) -> (f64, Vec<f64>) {
        let m = self.mode_count;
        let (risk, full) = risk_and_gradient(self.states, self.target, &self.embed(g));
        let k = self.modes.len();
        let mut grad = vec![0.0; 2 * k * k];
        for (a, &i) in self.modes.iter().enumerate() {
            for (b, &j) in self.modes.iter().enumerate() {
                grad[a * k + b] = full[i * m + j];
                grad[k * k + a * k + b] = full[m * m + i * m + j];
            }
        }
        (risk, grad)
    }

    fn residuals(&self, g: &ComplexTransfer<f64>) -> Option<Vec<f64>> {
        Some(displacement_residuals(self.states, self.target, &self.embed(g)))
    }
}

struct Fit {
    modes: Vec<usize>,
    risk: f64,
    full: ComplexTransfer<f64>,
}

fn fit_subset(
    set: &TrainingSet<f64>,
    target: &SymplecticOrthogonal<f64>,
    modes: Vec<usize>,
    cfg: &OptimConfig,
) -> Result<Fit> {
    let obj = SubsetObjective::new(set, target, modes.clone());
    let res = minimize_objective(&obj, cfg)?;
    let full = obj.embed(&res.g_final);
    Ok(Fit {
        modes,
        risk: res.risk_final,
        full,
    })
}

fn set_risk(set: &TrainingSet<f64>, target: &SymplecticOrthogonal<f64>, g: &ComplexTransfer<f64>) -> f64 {
    risk_and_gradient(&set.states, target.matrix(), g).0
}

fn restrict(g: &ComplexTransfer<f64>, modes: &[usize]) -> ComplexTransfer<f64> {
    let e = g.entries();
    ComplexTransfer::new(DMatrix::from_fn(modes.len(), modes.len(), |a, b| e[(modes[a], modes[b])]))
}

/// Adaptive k-LOJ learning with pair and grow-by-one ansatz families.
///
/// Each stage draws a fresh training set (`T(m)` states, energy `E_m`) shared
/// by all candidates of that stage, so stage minima compare like with like.
/// Every candidate minimization is charged `E_m` in the energy ledger.
pub fn algorithm1(target: &SymplecticOrthogonal<f64>, policy: &StagePolicy, seed: u64) -> Result<JuntaReport> {
    policy.validate()?;
    let mode_count = target.mode_count();
    if mode_count < 2 {
        return Err(Error::InvalidParameter("junta search needs M ≥ 2".into()));
    }
    let mut stages = Vec::new();
    let mut energy_spent = 0.0;
    let mut junta: Vec<usize> = Vec::new();
    let mut stage = 2;

    loop {
        let candidates: Vec<Vec<usize>> = if stage == 2 {
            (0..mode_count)
                .flat_map(|i| ((i + 1)..mode_count).map(move |j| vec![i, j]))
                .collect()
        } else {
            (0..mode_count)
                .filter(|l| !junta.contains(l))
                .map(|l| {
                    let mut c = junta.clone();
                    c.push(l);
                    c.sort_unstable();
                    c
                })
                .collect()
        };
        if candidates.is_empty() {
            return Err(Error::StageLimitReached(Box::new(partial_report(
                target, junta, stages, energy_spent, stage,
            ))));
        }
        let stage_energy = policy.stage_energy(stage);
        energy_spent += candidates.len() as f64 * stage_energy;
        if let Some(cap) = policy.energy_cap {
            if energy_spent > cap {
                return Err(Error::BudgetExceeded { spent: energy_spent, cap });
            }
        }
        let size = policy.training_size.at_stage(stage);
        let stage_seed = rng::substream(seed, stage as u64).random::<u64>();
        let set: TrainingSet<f64> = sample_training_set(policy.scheme, mode_count, size, stage_energy, stage_seed)?;

        let fits = candidates
            .into_par_iter()
            .enumerate()
            .map(|(idx, modes)| {
                let cfg = OptimConfig {
                    seed: stage_seed ^ ((idx as u64 + 1) << 20),
                    ..policy.optim.clone()
                };
                fit_subset(&set, target, modes, &cfg)
            })
            .collect::<Result<Vec<_>>>()?;

        let minimum = fits.iter().map(|f| f.risk).fold(f64::INFINITY, f64::min);
        let cutoff = minimum * (1.0 + policy.tie_tolerance);
        let selected: Vec<&Fit> = fits.iter().filter(|f| f.risk <= cutoff).collect();
        let mut record = StageRecord {
            stage,
            candidate_count: fits.len(),
            minimum,
            selected: selected.iter().map(|f| f.modes.clone()).collect(),
            training_size: size,
            stage_energy,
            product_risk: None,
        };

        let threshold = policy.termination_threshold;
        if minimum < threshold {
            // the best candidate alone fits, so it is the smallest valid ansatz;
            // near-zero ties are optimizer noise rather than evidence
            let best = selected.iter().min_by(|a, b| a.risk.total_cmp(&b.risk)).unwrap();
            record.selected = vec![best.modes.clone()];
            let (modes, learned_full, final_risk) = (best.modes.clone(), best.full.clone(), best.risk);
            stages.push(record);
            return Ok(JuntaReport {
                learned: restrict(&learned_full, &modes),
                junta_set: modes,
                stages,
                learned_full,
                final_risk,
                energy_spent,
                terminated_stage: stage,
            });
        }

        if stage == 2 {
            // Products of disjoint pair blocks (e.g. a layer of beamsplitters)
            // are invisible to any single pair; check the greedy disjoint product.
            let baseline = set_risk(&set, target, &ComplexTransfer::identity(mode_count));
            let improving: Vec<&Fit> = fits.iter().filter(|f| f.risk < baseline * (1.0 - policy.tie_tolerance)).collect();
            let chosen = best_pair_product(&improving, &set, target, policy.termination_threshold);
            if let Some((chosen, g, r)) = chosen {
                record.product_risk = Some(r);
                if r < threshold {
                    record.selected = chosen.iter().map(|f| f.modes.clone()).collect();
                    let modes = union_of(&chosen);
                    stages.push(record);
                    return Ok(JuntaReport {
                        learned: restrict(&g, &modes),
                        junta_set: modes,
                        stages,
                        learned_full: g,
                        final_risk: r,
                        energy_spent,
                        terminated_stage: stage,
                    });
                }
            }
        }

        junta = union_of(&selected);
        stages.push(record);
        stage += 1;
    }
}

const MATCHING_BUDGET: usize = 200_000;

struct MatchingSearch<'a, 'f> {
    fits: &'a [&'f Fit],
    set: &'a TrainingSet<f64>,
    target: &'a SymplecticOrthogonal<f64>,
    threshold: f64,
    visited: usize,
    best: Option<(Vec<&'f Fit>, ComplexTransfer<f64>, f64)>,
}

impl<'f> MatchingSearch<'_, 'f> {
    fn done(&self) -> bool {
        self.visited >= MATCHING_BUDGET || self.best.as_ref().is_some_and(|b| b.2 < self.threshold)
    }

    fn visit(&mut self, from: usize, chosen: &mut Vec<&'f Fit>, g: &ComplexTransfer<f64>) {
        for idx in from..self.fits.len() {
            if self.done() {
                return;
            }
            let f = self.fits[idx];
            if f.modes.iter().any(|i| chosen.iter().any(|c| c.modes.contains(i))) {
                continue;
            }
            let h = g.mul(&f.full);
            chosen.push(f);
            self.visited += 1;
            if chosen.len() >= 2 {
                let r = set_risk(self.set, self.target, &h);
                if self.best.as_ref().is_none_or(|b| r < b.2) {
                    self.best = Some((chosen.clone(), h.clone(), r));
                }
            }
            self.visit(idx + 1, chosen, &h);
            chosen.pop();
        }
    }
}

/// Lowest-risk product over sets of at least two disjoint pair fits, searched
/// depth-first with a node budget.
fn best_pair_product<'f>(
    fits: &[&'f Fit],
    set: &TrainingSet<f64>,
    target: &SymplecticOrthogonal<f64>,
    threshold: f64,
) -> Option<(Vec<&'f Fit>, ComplexTransfer<f64>, f64)> {
    let mut search = MatchingSearch { fits, set, target, threshold, visited: 0, best: None };
    search.visit(0, &mut Vec::new(), &ComplexTransfer::identity(target.mode_count()));
    if search.visited >= MATCHING_BUDGET {
        log::warn!("pair product search stopped after {MATCHING_BUDGET} nodes");
    }
    search.best
}

fn union_of(fits: &[&Fit]) -> Vec<usize> {
    fits.iter()
        .flat_map(|f| f.modes.iter().copied())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

fn partial_report(
    target: &SymplecticOrthogonal<f64>,
    junta: Vec<usize>,
    stages: Vec<StageRecord>,
    energy_spent: f64,
    stage: usize,
) -> JuntaReport {
    let m = target.mode_count();
    JuntaReport {
        learned: ComplexTransfer::identity(junta.len()),
        junta_set: junta,
        final_risk: stages.last().map_or(f64::NAN, |s| s.minimum),
        stages,
        learned_full: ComplexTransfer::identity(m),
        energy_spent,
        terminated_stage: stage,
    }
}

/// `(M choose 2) E₂ + Σ_{m=3}^{k} (M − m + 1) E_m`.
pub fn energy_ledger_bound(mode_count: usize, k: usize, policy: &StagePolicy) -> f64 {
    let pairs = (mode_count * (mode_count - 1) / 2) as f64 * policy.stage_energy(2);
    pairs
        + (3..=k)
            .map(|m| (mode_count - m + 1) as f64 * policy.stage_energy(m))
            .sum::<f64>()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwapJuntaResult {
    /// Modes that failed at least one SWAP test (0-based).
    pub junta_set: Vec<usize>,
    /// Estimated fidelities `(F̂_x, F̂_y)` per mode.
    pub fidelities: Vec<(f64, f64)>,
    pub pass_threshold: f64,
    /// Zero-energy probes carry no information.
    pub undetermined: bool,
}

const PROBE_ATTEMPTS: usize = 100;

fn collinear(x: &[f64; 2], y: &[f64; 2]) -> bool {
    let cross = (x[0] * y[1] - x[1] * y[0]).abs();
    let scale = (x[0].hypot(x[1]) * y[0].hypot(y[1])).max(f64::MIN_POSITIVE);
    cross <= 1e-9 * scale || scale <= f64::MIN_POSITIVE
}

/// Semiclassical junta identification from two random probes `x`, `y`.
///
/// For each mode `j`, the single-mode states `P_j O_U x` and `P_j x` (and the
/// same for `y`) are compared with a shot-limited SWAP test. Mode `j` joins the
/// complement of the junta iff both estimated fidelities exceed
/// `1 − 3/√shots`.
pub fn swap_junta_id(target: &SymplecticOrthogonal<f64>, energy: f64, shots: u64, seed: u64) -> Result<SwapJuntaResult> {
    if shots == 0 || !(energy >= 0.0 && energy.is_finite()) {
        return Err(Error::InvalidParameter(format!("shots = {shots}, E = {energy}")));
    }
    let m = target.mode_count();
    let pass_threshold = 1.0 - 3.0 / (shots as f64).sqrt();
    if energy == 0.0 {
        log::warn!("zero-energy probes: every SWAP test passes vacuously, junta set undetermined");
        return Ok(SwapJuntaResult {
            junta_set: Vec::new(),
            fidelities: vec![(1.0, 1.0); m],
            pass_threshold,
            undetermined: true,
        });
    }
    let mut rng = rng::seeded(seed);
    let radius = (2.0 * energy).sqrt();
    let block = |v: &nalgebra::DVector<f64>, j: usize| [v[j], v[m + j]];
    let (x, y) = (0..PROBE_ATTEMPTS)
        .map(|_| {
            let x: nalgebra::DVector<f64> = sample_sphere(2 * m, radius, &mut rng);
            let y: nalgebra::DVector<f64> = sample_sphere(2 * m, radius, &mut rng);
            (x, y)
        })
        .find(|(x, y)| (0..m).all(|j| !collinear(&block(x, j), &block(y, j))))
        .ok_or(Error::DegenerateProbe { attempts: PROBE_ATTEMPTS })?;

    let ox = target.matrix() * &x;
    let oy = target.matrix() * &y;
    let mut junta_set = Vec::new();
    let mut fidelities = Vec::with_capacity(m);
    for j in 0..m {
        let pair = |v: &nalgebra::DVector<f64>| nalgebra::DVector::from_row_slice(&block(v, j));
        let fx = swap_test_fidelity(&pair(&ox), &pair(&x), shots, &mut rng);
        let fy = swap_test_fidelity(&pair(&oy), &pair(&y), shots, &mut rng);
        if !(fx > pass_threshold && fy > pass_threshold) {
            junta_set.push(j);
        }
        fidelities.push((fx, fy));
    }
    Ok(SwapJuntaResult {
        junta_set,
        fidelities,
        pass_threshold,
        undetermined: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optics::{embed_junta, random_linear_optical, JuntaSpec};

    fn random_loj(m: usize, modes: Vec<usize>, seed: u64) -> SymplecticOrthogonal<f64> {
        let inner = random_linear_optical(modes.len(), seed);
        embed_junta(&JuntaSpec::new(m, modes, inner).unwrap())
    }

    #[test]
    fn subset_gradient_matches_finite_differences() {
        let target = random_loj(5, vec![1, 3], 4);
        let set = sample_training_set(SchemeTag::Erm2, 5, 3, 3.0, 1).unwrap();
        let obj = SubsetObjective::new(&set, &target, vec![0, 3, 4]);
        let g = crate::optics::haar_unitary::<f64, _>(3, &mut rng::seeded(2));
        let (_, grad) = obj.risk_and_gradient(&g);
        let p = g.params();
        for k in 0..p.len() {
            let (mut a, mut b) = (p.clone(), p.clone());
            a[k] += 1e-6;
            b[k] -= 1e-6;
            let fd = (obj.risk(&ComplexTransfer::from_params(3, &a)) - obj.risk(&ComplexTransfer::from_params(3, &b))) / 2e-6;
            assert!((fd - grad[k]).abs() < 1e-7, "{k}: {fd} {}", grad[k]);
        }
    }

    #[test]
    fn identity_target_stops_at_pairs() {
        let target = SymplecticOrthogonal::identity(4);
        let report = algorithm1(&target, &StagePolicy::default(), 3).unwrap();
        assert_eq!(report.terminated_stage, 2, "{:?}", report.stages);
        assert_eq!(report.stage_count(), 1);
        assert_eq!(report.junta_set.len(), 2);
        assert!(report.final_risk < 1e-10);
        assert!(report.learned_full.unitarity_residual() < 1e-12);
    }

    #[test]
    fn product_of_beamsplitters_stops_at_pairs() {
        let m = 6;
        let mut o = SymplecticOrthogonal::identity(m);
        for (n, pair) in [[0usize, 1], [2, 3], [4, 5]].into_iter().enumerate() {
            o = o.compose(&random_loj(m, pair.to_vec(), 40 + n as u64));
        }
        let policy = StagePolicy { training_size: TrainingSize::AtLeast(m), ..Default::default() };
        let report = algorithm1(&o, &policy, 5).unwrap();
        assert_eq!(report.terminated_stage, 2, "{:?}", report.stages);
        assert_eq!(report.junta_set, vec![0, 1, 2, 3, 4, 5]);
        assert!(report.final_risk < 1e-10);
    }

    #[test]
    fn recovers_three_junta_with_ledger() {
        let policy = StagePolicy::default();
        let target = random_loj(5, vec![0, 2, 3], 12);
        let report = algorithm1(&target, &policy, 8).unwrap();
        assert_eq!(report.junta_set, vec![0, 2, 3], "{:?}", report.stages);
        assert_eq!(report.terminated_stage, 3);
        assert!(report.energy_spent <= energy_ledger_bound(5, 3, &policy) + 1e-12);
        assert!(report.final_risk < policy.termination_threshold);
    }

    #[test]
    fn nested_families_have_monotone_minima() {
        // on shared data, a triple containing a pair can only do better
        let target = random_loj(4, vec![0, 1, 2], 21);
        let set = sample_training_set(SchemeTag::Erm2, 4, 3, 3.0, 2).unwrap();
        let cfg = OptimConfig { restarts: 4, ..Default::default() };
        let pair = fit_subset(&set, &target, vec![0, 1], &cfg).unwrap().risk;
        let triple = fit_subset(&set, &target, vec![0, 1, 3], &cfg).unwrap().risk;
        let full = fit_subset(&set, &target, vec![0, 1, 2], &cfg).unwrap().risk;
        assert!(triple <= pair * (1.0 + 1e-6), "{pair} {triple}");
        assert!(full <= triple);
    }

    #[test]
    fn modes_outside_junta_are_exact() {
        let target = random_loj(6, vec![1, 4], 3);
        let set = sample_training_set(SchemeTag::Erm2, 6, 4, 2.0, 9).unwrap();
        // ansatz {1,4} with the true inner block reproduces the target exactly
        let inner = crate::optics::complexify(&random_linear_optical::<f64>(2, 3)).unwrap();
        let obj = SubsetObjective::new(&set, &target, vec![1, 4]);
        assert_eq!(obj.risk(&inner), 0.0);
    }

    #[test]
    fn stage_limit_and_budget() {
        let target = random_loj(3, vec![0, 1, 2], 5);
        let policy = StagePolicy { energy_cap: Some(1.0), ..Default::default() };
        assert!(matches!(algorithm1(&target, &policy, 1), Err(Error::BudgetExceeded { .. })));
        assert!(algorithm1(&SymplecticOrthogonal::identity(1), &StagePolicy::default(), 1).is_err());
    }

    #[test]
    fn swap_id_identity_and_zero_energy() {
        let id = SymplecticOrthogonal::identity(5);
        let r = swap_junta_id(&id, 2.0, 1000, 1).unwrap();
        assert!(r.junta_set.is_empty() && !r.undetermined);
        let target = random_loj(5, vec![0, 2], 1);
        let r = swap_junta_id(&target, 0.0, 1000, 1).unwrap();
        assert!(r.undetermined && r.junta_set.is_empty());
    }

    #[test]
    fn swap_id_finds_four_junta() {
        let mut hits = 0;
        for seed in 0..20 {
            let target = random_loj(8, vec![2, 3, 4, 7], 100 + seed);
            let r = swap_junta_id(&target, 8.0, 10_000, seed).unwrap();
            hits += usize::from(r.junta_set == vec![2, 3, 4, 7]);
        }
        assert!(hits >= 18, "{hits}/20");
    }

    #[test]
    fn training_size_rule() {
        assert_eq!(TrainingSize::StageSize.at_stage(3), 3);
        assert_eq!(TrainingSize::AtLeast(4).at_stage(2), 4);
        assert_eq!(TrainingSize::AtLeast(4).at_stage(6), 6);
    }
}
