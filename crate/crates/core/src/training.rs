//! Energy-constrained coherent-state training sets.
//!
//! * ERM1: each of the `T` states lies on the sphere of radius `√(2E)`.
//! * ERM1': each state lies on the sphere of radius `√(2E/T)` (total energy `E`).
//! * ERM2: one parent vector uniform on `S^{2MT−1}` of radius `√(2E)`, cut into
//!   `T` consecutive blocks of length `2M`.
//!
//! Spheres are sampled by normalizing standard Gaussian vectors.

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::optics::MeanVector;
use crate::{rng, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SchemeTag {
    #[serde(rename = "ERM1")]
    Erm1,
    #[serde(rename = "ERM1P")]
    Erm1Prime,
    #[serde(rename = "ERM2")]
    Erm2,
}

impl SchemeTag {
    pub const ALL: [SchemeTag; 3] = [SchemeTag::Erm1, SchemeTag::Erm1Prime, SchemeTag::Erm2];

    pub fn as_str(self) -> &'static str {
        match self {
            SchemeTag::Erm1 => "ERM1",
            SchemeTag::Erm1Prime => "ERM1P",
            SchemeTag::Erm2 => "ERM2",
        }
    }
}

impl fmt::Display for SchemeTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SchemeTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "ERM1" => Ok(SchemeTag::Erm1),
            "ERM1P" | "ERM1'" | "ERM1PRIME" => Ok(SchemeTag::Erm1Prime),
            "ERM2" => Ok(SchemeTag::Erm2),
            other => Err(Error::InvalidParameter(format!("unknown scheme {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct TrainingSet<T: Scalar = f64> {
    pub scheme: SchemeTag,
    #[serde(rename = "M")]
    pub mode_count: usize,
    #[serde(rename = "T")]
    pub size: usize,
    #[serde(rename = "E")]
    pub total_energy: f64,
    pub seed: u64,
    pub states: Vec<MeanVector<T>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub parent: Option<Vec<T>>,
}

impl<T: Scalar> TrainingSet<T> {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Sum of the state energies.
    pub fn energy(&self) -> T {
        self.states.iter().fold(T::zero(), |acc, s| acc + s.energy())
    }

    /// A set built from explicit mean vectors (scheme tag kept for bookkeeping).
    pub fn from_states(scheme: SchemeTag, states: Vec<MeanVector<T>>) -> Result<Self> {
        let mode_count = states.first().map(MeanVector::mode_count).ok_or_else(|| {
            Error::InvalidParameter("training set needs at least one state".into())
        })?;
        if let Some(bad) = states.iter().find(|s| s.mode_count() != mode_count) {
            return Err(Error::DimensionMismatch {
                expected: 2 * mode_count,
                found: 2 * bad.mode_count(),
            });
        }
        let energy = states.iter().map(|s| s.energy().as_f64()).sum();
        Ok(Self {
            scheme,
            mode_count,
            size: states.len(),
            total_energy: energy,
            seed: 0,
            states,
            parent: None,
        })
    }
}

/// Uniform point on the sphere of the given radius in `ℝ^dim`.
pub fn sample_sphere<T: Scalar, R: Rng + ?Sized>(dim: usize, radius: f64, rng: &mut R) -> DVector<T> {
    if radius == 0.0 {
        return DVector::zeros(dim);
    }
    loop {
        let g: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            return DVector::from_iterator(dim, g.iter().map(|v| T::lit(radius * v / norm)));
        }
    }
}

fn check_params(modes: usize, size: usize, energy: f64) -> Result<()> {
    if modes == 0 || size == 0 {
        return Err(Error::InvalidParameter(format!(
            "need M ≥ 1 and T ≥ 1, got M = {modes}, T = {size}"
        )));
    }
    if !(energy >= 0.0 && energy.is_finite()) {
        return Err(Error::InvalidParameter(format!("energy must be finite and ≥ 0, got {energy}")));
    }
    Ok(())
}

/// Draws a training set with an explicit RNG; `seed` is recorded only.
pub fn sample_training_set_with<T: Scalar, R: Rng + ?Sized>(
    scheme: SchemeTag,
    modes: usize,
    size: usize,
    energy: f64,
    rng: &mut R,
) -> Result<TrainingSet<T>> {
    check_params(modes, size, energy)?;
    let dim = 2 * modes;
    let (states, parent) = match scheme {
        SchemeTag::Erm1 | SchemeTag::Erm1Prime => {
            let per_state = if scheme == SchemeTag::Erm1 { energy } else { energy / size as f64 };
            let radius = (2.0 * per_state).sqrt();
            let states = (0..size)
                .map(|_| MeanVector::new(sample_sphere(dim, radius, rng)))
                .collect::<Result<Vec<_>>>()?;
            (states, None)
        }
        SchemeTag::Erm2 => {
            let parent: DVector<T> = sample_sphere(dim * size, (2.0 * energy).sqrt(), rng);
            let states = (0..size)
                .map(|j| MeanVector::new(parent.rows(j * dim, dim).into_owned()))
                .collect::<Result<Vec<_>>>()?;
            (states, Some(parent.as_slice().to_vec()))
        }
    };
    Ok(TrainingSet {
        scheme,
        mode_count: modes,
        size,
        total_energy: energy,
        seed: 0,
        states,
        parent,
    })
}

/// Draws a training set, deterministic in `seed`.
///
/// With `T = 1` the ERM2 set is a single full-energy state, identical in law
/// to ERM1.
pub fn sample_training_set<T: Scalar>(
    scheme: SchemeTag,
    modes: usize,
    size: usize,
    energy: f64,
    seed: u64,
) -> Result<TrainingSet<T>> {
    let mut rng = rng::seeded(seed);
    let mut set = sample_training_set_with(scheme, modes, size, energy, &mut rng)?;
    set.seed = seed;
    Ok(set)
}

/// Density of one ERM2 block `x⁽¹⁾ ∈ ℝ^{2M}` when the parent is uniform on
/// the sphere of radius `√(2E)` in `ℝ^{2MT}`:
///
/// `p(x) = Γ(MT) / (Γ(M(T−1)) π^M (2E)^{MT−1}) · (2E − ‖x‖²)^{M(T−1)−1}` inside
/// the ball, zero outside. Only defined for `T ≥ 2`.
pub fn marginal_density(x1: &MeanVector<f64>, modes: usize, size: usize, energy: f64) -> Result<f64> {
    check_params(modes, size, energy)?;
    if size < 2 {
        return Err(Error::UnsupportedRegime(
            "T = 1: the block is the parent itself, uniform on the sphere (no density)".into(),
        ));
    }
    if x1.mode_count() != modes {
        return Err(Error::DimensionMismatch {
            expected: 2 * modes,
            found: 2 * x1.mode_count(),
        });
    }
    if energy == 0.0 {
        return Err(Error::UnsupportedRegime("E = 0: point mass at the origin".into()));
    }
    let rho2 = 2.0 * energy;
    let gap = rho2 - x1.as_vector().norm_squared();
    if gap <= 0.0 {
        return Ok(0.0);
    }
    let (m, t) = (modes as f64, size as f64);
    let exponent = m * (t - 1.0) - 1.0;
    let log_norm = ln_gamma(m * t)
        - ln_gamma(m * (t - 1.0))
        - m * std::f64::consts::PI.ln()
        - (m * t - 1.0) * rho2.ln();
    Ok((log_norm + exponent * gap.ln()).exp())
}
