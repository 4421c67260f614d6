use nalgebra::DMatrix;
use num_complex::Complex;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{from_rows, haar_unitary, symplectic_form, to_rows, ComplexTransfer};
use crate::error::{Error, Result};
use crate::scalar::UNITARITY_TOL;
use crate::{rng, Scalar};

/// Element `O` of `K(2M) = O(2M) ∩ Sp(2M, ℝ)`: the action of a linear optical
/// unitary on the quadrature mean vector.
///
/// Construction validates `OᵀO = I` and `OᵀΩO = Ω` to [`Scalar::GROUP_TOL`]
/// in Frobenius norm; together these force the block form `[[A, B], [-B, A]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticOrthogonal<T: Scalar = f64> {
    entries: DMatrix<T>,
    modes: usize,
}

impl<T: Scalar> SymplecticOrthogonal<T> {
    pub fn new(entries: DMatrix<T>) -> Result<Self> {
        if !entries.is_square() || !entries.nrows().is_multiple_of(2) || entries.nrows() == 0 {
            return Err(Error::DimensionMismatch {
                expected: 2 * (entries.nrows() / 2).max(1),
                found: entries.ncols(),
            });
        }
        let modes = entries.nrows() / 2;
        let (orthogonality, symplecticity) = invariant_residuals(&entries);
        if orthogonality > T::GROUP_TOL || symplecticity > T::GROUP_TOL {
            return Err(Error::NotSymplecticOrthogonal {
                orthogonality,
                symplecticity,
            });
        }
        Ok(Self { entries, modes })
    }

    pub(crate) fn from_matrix_unchecked(entries: DMatrix<T>) -> Self {
        let modes = entries.nrows() / 2;
        Self { entries, modes }
    }

    pub fn identity(modes: usize) -> Self {
        Self::from_matrix_unchecked(DMatrix::identity(2 * modes, 2 * modes))
    }

    pub fn mode_count(&self) -> usize {
        self.modes
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.entries
    }

    pub fn into_matrix(self) -> DMatrix<T> {
        self.entries
    }

    /// Group product; closed in `K(2M)`.
    pub fn compose(&self, other: &Self) -> Self {
        Self::from_matrix_unchecked(&self.entries * &other.entries)
    }

    pub fn transpose(&self) -> Self {
        Self::from_matrix_unchecked(self.entries.transpose())
    }

    /// `(‖OᵀO − I‖_F, ‖OᵀΩO − Ω‖_F)`.
    pub fn residuals(&self) -> (f64, f64) {
        invariant_residuals(&self.entries)
    }
}

fn invariant_residuals<T: Scalar>(o: &DMatrix<T>) -> (f64, f64) {
    let n = o.nrows();
    let omega = symplectic_form::<T>(n / 2);
    let ortho = (o.transpose() * o - DMatrix::identity(n, n)).norm().as_f64();
    let sympl = (o.transpose() * &omega * o - &omega).norm().as_f64();
    (ortho, sympl)
}

impl<T: Scalar> Serialize for SymplecticOrthogonal<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        to_rows(&self.entries).serialize(s)
    }
}

impl<'de, T: Scalar> Deserialize<'de> for SymplecticOrthogonal<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<T>>::deserialize(d)?;
        let m = from_rows(&rows).map_err(serde::de::Error::custom)?;
        Self::new(m).map_err(serde::de::Error::custom)
    }
}

/// `[[Re G, Im G], [-Im G, Re G]]` without any unitarity check.
///
/// Used by the risk functions, which must be evaluated off the unitary
/// manifold during penalty optimization.
pub fn realify_unchecked<T: Scalar>(g: &ComplexTransfer<T>) -> DMatrix<T> {
    let m = g.mode_count();
    let e = g.entries();
    DMatrix::from_fn(2 * m, 2 * m, |i, j| {
        let z = e[(i % m, j % m)];
        match (i < m, j < m) {
            (true, true) | (false, false) => z.re,
            (true, false) => z.im,
            (false, true) => -z.im,
        }
    })
}

/// Maps a unitary `G` to its symplectic orthogonal matrix.
pub fn realify<T: Scalar>(g: &ComplexTransfer<T>) -> Result<SymplecticOrthogonal<T>> {
    let residual = g.unitarity_residual().as_f64();
    if residual > UNITARITY_TOL {
        return Err(Error::NonUnitaryInput { residual });
    }
    Ok(SymplecticOrthogonal::from_matrix_unchecked(realify_unchecked(g)))
}

/// Reads `G = A + iB` off the `(1,1)` and `(1,2)` blocks.
pub fn complexify<T: Scalar>(o: &SymplecticOrthogonal<T>) -> Result<ComplexTransfer<T>> {
    let m = o.mode_count();
    let e = o.matrix();
    let mut deviation = 0.0f64;
    for i in 0..m {
        for j in 0..m {
            deviation = deviation
                .max((e[(m + i, m + j)] - e[(i, j)]).abs().as_f64())
                .max((e[(m + i, j)] + e[(i, m + j)]).abs().as_f64());
        }
    }
    if deviation > T::BLOCK_TOL {
        return Err(Error::MalformedBlocks { deviation });
    }
    Ok(ComplexTransfer::new(DMatrix::from_fn(m, m, |i, j| {
        Complex::new(e[(i, j)], e[(i, m + j)])
    })))
}

/// Haar-random linear optical circuit on `modes` modes, deterministic in `seed`.
pub fn random_linear_optical<T: Scalar>(modes: usize, seed: u64) -> SymplecticOrthogonal<T> {
    let mut rng = rng::seeded(seed);
    let g = haar_unitary::<T, _>(modes, &mut rng);
    SymplecticOrthogonal::from_matrix_unchecked(realify_unchecked(&g))
}

/// Operator 2-norm (largest singular value).
pub fn spectral_norm<T: Scalar>(m: &DMatrix<T>) -> T {
    m.clone()
        .singular_values()
        .iter()
        .copied()
        .fold(T::zero(), |a, b| if b > a { b } else { a })
}

/// Squared Frobenius distance `‖A − B‖²_F`.
pub fn frobenius_dist_sq<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>) -> T {
    (a - b).norm_squared()
}
