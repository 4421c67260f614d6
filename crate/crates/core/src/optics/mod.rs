//! Quadrature conventions, the unitary ↔ symplectic-orthogonal correspondence
//! and closed-form coherent-state fidelities.

mod coherent;
mod conventions;
mod embed;
mod symplectic;
mod transfer;

pub use coherent::{fidelity, fidelity_raw, loss_matrix, MeanVector};
pub use conventions::{symplectic_form, Conventions};
pub use embed::{embed_junta, embed_transfer, JuntaSpec};
pub use symplectic::{
    complexify, frobenius_dist_sq, random_linear_optical, realify, realify_unchecked,
    spectral_norm, SymplecticOrthogonal,
};
pub use transfer::{haar_unitary, ComplexTransfer};

use nalgebra::DMatrix;

use crate::Scalar;

/// Row-major nested vectors, the JSON layout used for every matrix.
pub(crate) fn to_rows<T: Scalar>(m: &DMatrix<T>) -> Vec<Vec<T>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

pub(crate) fn from_rows<T: Scalar>(rows: &[Vec<T>]) -> Result<DMatrix<T>, String> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != m) {
        return Err("ragged matrix rows".into());
    }
    Ok(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
}
