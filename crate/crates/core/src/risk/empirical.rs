use nalgebra::{DMatrix, DVector};

use super::RiskReport;
use crate::error::{Error, Result};
use crate::optics::{realify_unchecked, ComplexTransfer, MeanVector, SymplecticOrthogonal};
use crate::{Scalar, TrainingSet};

fn check_dims<T: Scalar>(set: &TrainingSet<T>, ou: &DMatrix<T>, g: &ComplexTransfer<T>) -> Result<()> {
    let m = g.mode_count();
    if ou.nrows() != 2 * m {
        return Err(Error::DimensionMismatch {
            expected: ou.nrows(),
            found: 2 * m,
        });
    }
    if let Some(s) = set.states.iter().find(|s| s.mode_count() != m) {
        return Err(Error::DimensionMismatch {
            expected: 2 * m,
            found: s.as_vector().len(),
        });
    }
    Ok(())
}

/// `1 − exp(−½ ‖(O_U − O_V) x⁽ʲ⁾‖²)` for every state.
pub fn risk_terms<T: Scalar>(states: &[MeanVector<T>], ou: &DMatrix<T>, ov: &DMatrix<T>) -> Vec<T> {
    let diff = ou - ov;
    states
        .iter()
        .map(|x| {
            let r = &diff * x.as_vector();
            T::one() - (-r.norm_squared() * T::lit(0.5)).exp()
        })
        .collect()
}

/// `Ĉ_S(V) = (1/T) Σⱼ ¼‖(𝒰 − 𝒱)(|x⁽ʲ⁾⟩⟨x⁽ʲ⁾|)‖₁²`, with `V` given by the raw
/// matrix `G` (unitarity is not required).
pub fn empirical_risk<T: Scalar>(
    set: &TrainingSet<T>,
    ou: &SymplecticOrthogonal<T>,
    g: &ComplexTransfer<T>,
) -> Result<RiskReport<T>> {
    check_dims(set, ou.matrix(), g)?;
    let terms = risk_terms(&set.states, ou.matrix(), &realify_unchecked(g));
    Ok(RiskReport::from_terms(terms, Some(set.scheme)))
}

/// Risk value and its gradient with respect to `(Re G, Im G)` in the
/// [`ComplexTransfer::params`] layout.
///
/// With `rⱼ = (O_U − O_V) xⱼ` and `fⱼ = exp(−½‖rⱼ‖²)`, the derivative with
/// respect to `O_V` is `Γ = −(1/T) Σⱼ fⱼ rⱼ xⱼᵀ`; the block form
/// `O_V = [[A, B], [−B, A]]` then gives `∂A = Γ₁₁ + Γ₂₂` and `∂B = Γ₁₂ − Γ₂₁`.
pub fn risk_and_gradient<T: Scalar>(
    states: &[MeanVector<T>],
    ou: &DMatrix<T>,
    g: &ComplexTransfer<T>,
) -> (T, Vec<T>) {
    let m = g.mode_count();
    let n = 2 * m;
    let diff = ou - realify_unchecked(g);
    let mut gamma = DMatrix::<T>::zeros(n, n);
    let mut value = T::zero();
    let inv_t = T::one() / T::from_usize(states.len().max(1)).unwrap();
    for x in states {
        let x: &DVector<T> = x.as_vector();
        let r = &diff * x;
        let f = (-r.norm_squared() * T::lit(0.5)).exp();
        value += T::one() - f;
        gamma.ger(-f * inv_t, &r, x, T::one());
    }
    let mut grad = Vec::with_capacity(2 * m * m);
    for i in 0..m {
        for j in 0..m {
            grad.push(gamma[(i, j)] + gamma[(m + i, m + j)]);
        }
    }
    for i in 0..m {
        for j in 0..m {
            grad.push(gamma[(i, m + j)] - gamma[(m + i, j)]);
        }
    }
    (value * inv_t, grad)
}

/// Analytic gradient of [`empirical_risk`] (`2M²` components).
pub fn empirical_risk_gradient<T: Scalar>(
    set: &TrainingSet<T>,
    ou: &SymplecticOrthogonal<T>,
    g: &ComplexTransfer<T>,
) -> Result<Vec<T>> {
    check_dims(set, ou.matrix(), g)?;
    Ok(risk_and_gradient(&set.states, ou.matrix(), g).1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optics::{complexify, haar_unitary, random_linear_optical};
    use crate::rng::seeded;
    use crate::training::sample_training_set;
    use crate::SchemeTag;
    use num_complex::Complex;
    use rand_distr::{Distribution, Normal};

    /// Central differences, step `h`, directly on the risk value.
    fn fd_gradient(set: &TrainingSet<f64>, ou: &SymplecticOrthogonal<f64>, g: &ComplexTransfer<f64>, h: f64) -> Vec<f64> {
        let m = g.mode_count();
        let p = g.params();
        (0..p.len())
            .map(|k| {
                let (mut plus, mut minus) = (p.clone(), p.clone());
                plus[k] += h;
                minus[k] -= h;
                let fp = empirical_risk(set, ou, &ComplexTransfer::from_params(m, &plus)).unwrap().value;
                let fm = empirical_risk(set, ou, &ComplexTransfer::from_params(m, &minus)).unwrap().value;
                (fp - fm) / (2.0 * h)
            })
            .collect()
    }

    fn perturbed(g: &ComplexTransfer<f64>, sigma: f64, seed: u64) -> ComplexTransfer<f64> {
        let mut rng = seeded(seed);
        let n = Normal::new(0.0, sigma).unwrap();
        ComplexTransfer::new(g.entries().map(|z| z + Complex::new(n.sample(&mut rng), n.sample(&mut rng))))
    }

    #[test]
    fn zero_at_target() {
        let ou = random_linear_optical::<f64>(3, 1);
        let set = sample_training_set(SchemeTag::Erm1, 3, 5, 2.0, 2).unwrap();
        let r = empirical_risk(&set, &ou, &complexify(&ou).unwrap()).unwrap();
        assert_eq!(r.value, 0.0);
        let grad = empirical_risk_gradient(&set, &ou, &complexify(&ou).unwrap()).unwrap();
        assert!(grad.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_energy() {
        let ou = random_linear_optical::<f64>(2, 1);
        let g = haar_unitary(2, &mut seeded(3));
        let set = sample_training_set(SchemeTag::Erm2, 2, 4, 0.0, 2).unwrap();
        assert_eq!(empirical_risk(&set, &ou, &g).unwrap().value, 0.0);
        let grad = empirical_risk_gradient(&set, &ou, &g).unwrap();
        assert!(grad.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_mode_sign_flip() {
        let ou = SymplecticOrthogonal::<f64>::identity(1);
        let g = ComplexTransfer::new(DMatrix::from_element(1, 1, Complex::new(-1.0, 0.0)));
        let set = TrainingSet::from_states(SchemeTag::Erm1, vec![MeanVector::from_slice(&[1.0, 1.0]).unwrap()]).unwrap();
        let r = empirical_risk(&set, &ou, &g).unwrap();
        assert!((r.value - (1.0 - (-4.0f64).exp())).abs() < 1e-15);
        assert!((r.value - 0.98168).abs() < 1e-5);
    }

    #[test]
    fn gradient_matches_central_differences() {
        for seed in 0..10 {
            let ou = random_linear_optical::<f64>(3, seed);
            let set = sample_training_set(SchemeTag::Erm1, 3, 4, 1.5, seed + 100).unwrap();
            let g = perturbed(&haar_unitary(3, &mut seeded(seed + 200)), 0.1, seed);
            let analytic = empirical_risk_gradient(&set, &ou, &g).unwrap();
            let fd = fd_gradient(&set, &ou, &g, 1e-5);
            let num: f64 = analytic.iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let den: f64 = fd.iter().map(|b| b * b).sum::<f64>().sqrt();
            assert!(num / den < 1e-5, "seed {seed}: {}", num / den);
        }
    }

    #[test]
    fn gradient_vanishes_as_energy_goes_to_zero() {
        let ou = random_linear_optical::<f64>(2, 4);
        let g = haar_unitary(2, &mut seeded(5));
        let norms: Vec<f64> = [1.0, 1e-2, 1e-4, 1e-6]
            .iter()
            .map(|&e| {
                let set = sample_training_set(SchemeTag::Erm1, 2, 3, e, 6).unwrap();
                empirical_risk_gradient(&set, &ou, &g).unwrap().iter().map(|v| v * v).sum::<f64>().sqrt()
            })
            .collect();
        assert!(norms.windows(2).all(|w| w[1] < w[0]));
        assert!(norms[3] < 1e-5);
    }

    #[test]
    fn joint_left_multiplication_invariance() {
        let ou = random_linear_optical::<f64>(3, 8);
        let q = haar_unitary::<f64, _>(3, &mut seeded(9));
        let g = haar_unitary::<f64, _>(3, &mut seeded(10));
        let set = sample_training_set(SchemeTag::Erm2, 3, 4, 3.0, 11).unwrap();
        let oq = realify_unchecked(&q);
        let rotated_target = SymplecticOrthogonal::new(&oq * ou.matrix()).unwrap();
        let a = empirical_risk(&set, &ou, &g).unwrap().value;
        let b = empirical_risk(&set, &rotated_target, &q.mul(&g)).unwrap().value;
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch() {
        let ou = random_linear_optical::<f64>(3, 1);
        let set = sample_training_set(SchemeTag::Erm1, 2, 2, 1.0, 2).unwrap();
        let g = ComplexTransfer::<f64>::identity(3);
        assert!(matches!(empirical_risk(&set, &ou, &g), Err(Error::DimensionMismatch { .. })));
        assert!(empirical_risk_gradient(&set, &ou, &ComplexTransfer::identity(2)).is_err());
    }
}
