use nalgebra::DVector;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use super::RiskReport;
use crate::error::{Error, Result};
use crate::optics::{realify, ComplexTransfer, SymplecticOrthogonal};
use crate::{rng, Scalar, TrainingSet};

/// Shot budget for SWAP-test estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotModel {
    pub shots: u64,
    pub seed: u64,
}

impl ShotModel {
    pub fn new(shots: u64, seed: u64) -> Result<Self> {
        if shots == 0 {
            return Err(Error::InvalidParameter("shots must be ≥ 1".into()));
        }
        Ok(Self { shots, seed })
    }
}

/// Shot-limited fidelity estimate between coherent states with means `a`, `b`.
///
/// Interfering the two states on balanced beamsplitters leaves coherent
/// amplitude `(a − b)/2` in the difference ports, so the total photon count
/// there is Poisson with mean `μ = ‖a − b‖²/4`. Each shot is all-vacuum with
/// probability `e^{−μ} = √F`; the estimator is the squared vacuum fraction.
pub fn swap_test_fidelity<T: Scalar, R: Rng + ?Sized>(
    a: &DVector<T>,
    b: &DVector<T>,
    shots: u64,
    rng: &mut R,
) -> f64 {
    let mu = (a - b).norm_squared().as_f64() / 4.0;
    let p = (-mu).exp();
    let vacuum = if p >= 1.0 {
        shots
    } else {
        Binomial::new(shots, p).expect("valid probability").sample(rng)
    };
    let frac = vacuum as f64 / shots as f64;
    frac * frac
}

/// Empirical risk estimated from simulated SWAP-test shot data.
pub fn swap_test_risk<T: Scalar>(
    set: &TrainingSet<T>,
    ou: &SymplecticOrthogonal<T>,
    g: &ComplexTransfer<T>,
    model: ShotModel,
) -> Result<RiskReport<T>> {
    if model.shots == 0 {
        return Err(Error::InvalidParameter("shots must be ≥ 1".into()));
    }
    let ov = realify(g)?;
    if ov.mode_count() != ou.mode_count() {
        return Err(Error::DimensionMismatch {
            expected: ou.matrix().nrows(),
            found: ov.matrix().nrows(),
        });
    }
    let mut rng = rng::seeded(model.seed);
    let mut terms = Vec::with_capacity(set.len());
    for x in &set.states {
        if x.mode_count() != ou.mode_count() {
            return Err(Error::DimensionMismatch {
                expected: ou.matrix().nrows(),
                found: x.as_vector().len(),
            });
        }
        let a = ou.matrix() * x.as_vector();
        let b = ov.matrix() * x.as_vector();
        let f = swap_test_fidelity(&a, &b, model.shots, &mut rng);
        terms.push(T::lit(1.0 - f));
    }
    let mut report = RiskReport::from_terms(terms, Some(set.scheme));
    report.shots = Some(model.shots);
    Ok(report)
}
