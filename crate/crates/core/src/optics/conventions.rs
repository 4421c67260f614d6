use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::Scalar;

/// Fixed conventions for an `M`-mode system.
///
/// Quadratures are ordered `R = (q₁, …, q_M, p₁, …, p_M)`, the symplectic form
/// is `Ω = [[0, I], [-I, 0]]` and the photon number is `N_M = ½ RᵀR`, so a
/// coherent state with mean vector `x` carries energy `‖x‖²/2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conventions {
    pub mode_count: usize,
}

impl Conventions {
    pub fn new(mode_count: usize) -> Self {
        assert!(mode_count >= 1, "at least one mode");
        Self { mode_count }
    }

    /// Length of the quadrature vector, `2M`.
    pub fn phase_space_dim(&self) -> usize {
        2 * self.mode_count
    }

    pub fn omega<T: Scalar>(&self) -> DMatrix<T> {
        symplectic_form(self.mode_count)
    }

    /// Index of `q_m` in `R`.
    pub fn q_index(&self, mode: usize) -> usize {
        mode
    }

    /// Index of `p_m` in `R`.
    pub fn p_index(&self, mode: usize) -> usize {
        self.mode_count + mode
    }
}

/// `Ω = [[0, I], [-I, 0]]` on `ℝ^{2M}`.
pub fn symplectic_form<T: Scalar>(modes: usize) -> DMatrix<T> {
    let mut omega = DMatrix::zeros(2 * modes, 2 * modes);
    for i in 0..modes {
        omega[(i, modes + i)] = T::one();
        omega[(modes + i, i)] = -T::one();
    }
    omega
}
