use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optics::SymplecticOrthogonal;
use crate::Scalar;

/// Shells below this magnitude (once decreasing) end the summation.
pub const SERIES_SHELL_TOL: f64 = 1e-12;
/// Tail estimates above this raise [`Error::ConvergenceWarning`].
pub const SERIES_TAIL_WARN: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SeriesResult<T: Scalar = f64> {
    /// Full risk `C_ERM1 = 1 − series`.
    pub value: T,
    pub truncation_order: usize,
    /// Singular values of `O_U − O_V`, descending.
    pub singular_values: Vec<T>,
    pub error_estimate: T,
}

impl<T: Scalar> SeriesResult<T> {
    fn to_f64(&self) -> SeriesResult<f64> {
        SeriesResult {
            value: self.value.as_f64(),
            truncation_order: self.truncation_order,
            singular_values: self.singular_values.iter().map(|k| k.as_f64()).collect(),
            error_estimate: self.error_estimate.as_f64(),
        }
    }
}

/// `C_ERM1` from the sphere-moment expansion of `E[exp(−½ xᵀLx)]`.
///
/// With `κⱼ` the singular values of `O_U − O_V` and `x` uniform on the sphere of
/// radius `√(2E)` in `ℝ^{2M}`,
///
/// `1 − C = Σ_i (2E)^{|i|} Γ(M)/Γ(M+|i|) ∏ⱼ (−κⱼ²/2)^{iⱼ} Γ(iⱼ+½)/(√π iⱼ!)`.
///
/// Each total-degree shell `|i| = n` is the degree-`n` coefficient of the
/// product of the per-`κ` power series, so shells are built by polynomial
/// convolution instead of enumerating multi-indices.
pub fn series_full_risk<T: Scalar>(
    ou: &SymplecticOrthogonal<T>,
    ov: &SymplecticOrthogonal<T>,
    energy: T,
    modes: usize,
    order: usize,
) -> Result<SeriesResult<T>> {
    if order < 1 {
        return Err(Error::InvalidParameter("series order must be ≥ 1".into()));
    }
    if ou.mode_count() != modes || ov.mode_count() != modes {
        return Err(Error::DimensionMismatch {
            expected: 2 * modes,
            found: 2 * ou.mode_count(),
        });
    }
    if energy < T::zero() {
        return Err(Error::InvalidParameter("energy must be ≥ 0".into()));
    }
    let mut kappa: Vec<T> = (ou.matrix() - ov.matrix()).singular_values().iter().copied().collect();
    kappa.sort_by(|a, b| b.partial_cmp(a).unwrap());

    let half = T::lit(0.5);
    let mut poly = vec![T::zero(); order + 1];
    poly[0] = T::one();
    for &k in &kappa {
        let ratio = -k * k * half;
        let mut coeff = vec![T::zero(); order + 1];
        coeff[0] = T::one();
        for a in 0..order {
            let af = T::from_usize(a).unwrap();
            coeff[a + 1] = coeff[a] * ratio * (af + half) / (af + T::one());
        }
        let mut next = vec![T::zero(); order + 1];
        for (i, &p) in poly.iter().enumerate() {
            if p == T::zero() {
                continue;
            }
            for (j, &c) in coeff.iter().take(order + 1 - i).enumerate() {
                next[i + j] += p * c;
            }
        }
        poly = next;
    }

    let two_e = energy * T::lit(2.0);
    let m = T::from_usize(modes).unwrap();
    let mut weight = T::one();
    let mut sum = T::zero();
    let mut last = T::zero();
    let mut used = order;
    for (n, &p) in poly.iter().enumerate() {
        let shell = weight * p;
        sum += shell;
        let mag = shell.abs();
        if n >= 1 && mag < T::lit(SERIES_SHELL_TOL) && mag <= last {
            last = mag;
            used = n;
            break;
        }
        last = mag;
        weight = weight * two_e / (m + T::from_usize(n).unwrap());
    }
    let value = (T::one() - sum).max(T::zero()).min(T::one());
    let result = SeriesResult {
        value,
        truncation_order: used,
        singular_values: kappa,
        error_estimate: last,
    };
    if last.as_f64() > SERIES_TAIL_WARN {
        return Err(Error::ConvergenceWarning(Box::new(result.to_f64())));
    }
    Ok(result)
}
