use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::SymplecticOrthogonal;
use crate::error::{Error, Result};
use crate::Scalar;

/// Coherent-state mean vector `x = ⟨R⟩` in `ℝ^{2M}`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanVector<T: Scalar = f64>(DVector<T>);

impl<T: Scalar> MeanVector<T> {
    pub fn new(components: DVector<T>) -> Result<Self> {
        if !components.len().is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "mean vector length {} is odd",
                components.len()
            )));
        }
        if components.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter("non-finite mean vector entry".into()));
        }
        Ok(Self(components))
    }

    pub fn from_slice(components: &[T]) -> Result<Self> {
        Self::new(DVector::from_column_slice(components))
    }

    pub fn zeros(modes: usize) -> Self {
        Self(DVector::zeros(2 * modes))
    }

    pub fn mode_count(&self) -> usize {
        self.0.len() / 2
    }

    pub fn as_vector(&self) -> &DVector<T> {
        &self.0
    }

    /// Mean photon number `‖x‖²/2`.
    pub fn energy(&self) -> T {
        self.0.norm_squared() * T::lit(0.5)
    }
}

impl<T: Scalar> Serialize for MeanVector<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.0.as_slice().serialize(s)
    }
}

impl<'de, T: Scalar> Deserialize<'de> for MeanVector<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<T>::deserialize(d)?;
        Self::from_slice(&v).map_err(serde::de::Error::custom)
    }
}

/// `L(U, V) = (O_U − O_V)ᵀ(O_U − O_V)`.
pub fn loss_matrix<T: Scalar>(ou: &DMatrix<T>, ov: &DMatrix<T>) -> DMatrix<T> {
    let d = ou - ov;
    d.transpose() * d
}

/// `exp(−½ ‖(O_U − O_V) x‖²)` on raw matrices, no group checks.
pub fn fidelity_raw<T: Scalar>(x: &DVector<T>, ou: &DMatrix<T>, ov: &DMatrix<T>) -> Result<T> {
    if ou.shape() != ov.shape() {
        return Err(Error::DimensionMismatch {
            expected: ou.nrows(),
            found: ov.nrows(),
        });
    }
    if x.len() != ou.ncols() {
        return Err(Error::DimensionMismatch {
            expected: ou.ncols(),
            found: x.len(),
        });
    }
    let r = ou * x - ov * x;
    Ok((-r.norm_squared() * T::lit(0.5)).exp())
}

/// `|⟨x|U†V|x⟩|² = exp(−½ xᵀ L(U, V) x)`.
pub fn fidelity<T: Scalar>(
    x: &MeanVector<T>,
    ou: &SymplecticOrthogonal<T>,
    ov: &SymplecticOrthogonal<T>,
) -> Result<T> {
    fidelity_raw(x.as_vector(), ou.matrix(), ov.matrix())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optics::{random_linear_optical, spectral_norm};
    use crate::rng::seeded;
    use proptest::prelude::*;
    use rand_distr::{Distribution, StandardNormal};

    fn random_x(m: usize, seed: u64, scale: f64) -> MeanVector<f64> {
        let mut rng = seeded(seed);
        MeanVector::new(DVector::from_fn(2 * m, |_, _| {
            scale * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng)
        }))
        .unwrap()
    }

    #[test]
    fn worked_examples() {
        let id = SymplecticOrthogonal::<f64>::identity(1);
        let neg = SymplecticOrthogonal::from_matrix_unchecked(-DMatrix::<f64>::identity(2, 2));
        let x = MeanVector::from_slice(&[1.0, 1.0]).unwrap();
        assert_eq!(x.energy(), 1.0);
        let f = fidelity(&x, &id, &neg).unwrap();
        assert!((f - (-4.0f64).exp()).abs() < 1e-15);
        assert_eq!(fidelity(&MeanVector::zeros(1), &id, &neg).unwrap(), 1.0);
        assert_eq!(fidelity(&x, &neg, &neg).unwrap(), 1.0);
    }

    #[test]
    fn dimension_mismatch() {
        let a = SymplecticOrthogonal::<f64>::identity(1);
        let b = SymplecticOrthogonal::<f64>::identity(2);
        let x = MeanVector::zeros(1);
        assert!(matches!(fidelity(&x, &a, &b), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(fidelity(&MeanVector::zeros(2), &a, &a), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn rejects_non_finite() {
        assert!(MeanVector::from_slice(&[f64::NAN, 0.0]).is_err());
    }

    proptest! {
        #[test]
        fn symmetric_and_left_invariant(m in 1usize..5, s in 0u64..500) {
            let (u, v, o) = (
                random_linear_optical::<f64>(m, s),
                random_linear_optical::<f64>(m, s + 1000),
                random_linear_optical::<f64>(m, s + 2000),
            );
            let x = random_x(m, s, 0.7);
            let f = fidelity(&x, &u, &v).unwrap();
            prop_assert_eq!(f, fidelity(&x, &v, &u).unwrap());
            let g = fidelity(&x, &o.compose(&u), &o.compose(&v)).unwrap();
            prop_assert!((f - g).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&f));
        }

        #[test]
        fn trace_distance_bound(m in 1usize..5, s in 0u64..500) {
            let (u, v) = (random_linear_optical::<f64>(m, s), random_linear_optical::<f64>(m, s + 7));
            let x = random_x(m, s + 3, 0.5);
            let f = fidelity(&x, &u, &v).unwrap();
            let bound = x.energy().sqrt() * spectral_norm(&(u.matrix() - v.matrix()));
            prop_assert!((1.0 - f).sqrt() <= bound + 1e-12);
        }
    }
}
