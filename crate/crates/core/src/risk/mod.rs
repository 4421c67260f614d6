//! Empirical and full risks.
//!
//! For pure states `¼‖ρ − σ‖₁² = 1 − |⟨ψ|φ⟩|²`, so every risk term reduces to
//! one minus a closed-form coherent-state fidelity.

mod empirical;
mod full;
mod series;
mod swap;

pub use empirical::{empirical_risk, empirical_risk_gradient, risk_and_gradient, risk_terms};
pub use full::{full_risk_difference_mc, full_risk_mc, McEstimate, MC_CHUNK};
pub use series::{series_full_risk, SeriesResult, SERIES_SHELL_TOL, SERIES_TAIL_WARN};
pub use swap::{swap_test_fidelity, swap_test_risk, ShotModel};

use serde::{Deserialize, Serialize};

use crate::{SchemeTag, Scalar};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct RiskReport<T: Scalar = f64> {
    pub value: T,
    pub per_term: Vec<T>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub scheme: Option<SchemeTag>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub gradient: Option<Vec<T>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub stderr: Option<T>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub shots: Option<u64>,
}

impl<T: Scalar> RiskReport<T> {
    pub(crate) fn from_terms(per_term: Vec<T>, scheme: Option<SchemeTag>) -> Self {
        let n = T::from_usize(per_term.len().max(1)).unwrap();
        let value = per_term.iter().fold(T::zero(), |a, &b| a + b) / n;
        Self {
            value,
            per_term,
            scheme,
            gradient: None,
            stderr: None,
            shots: None,
        }
    }
}
