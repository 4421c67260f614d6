use nalgebra::DMatrix;
use num_complex::Complex;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{ComplexTransfer, SymplecticOrthogonal};
use crate::error::{Error, Result};
use crate::Scalar;

/// A linear optical k-junta: `inner` acts on the modes in `junta_modes` and
/// the remaining modes see the identity.
///
/// Modes are 0-based in the API. The JSON form `{"M":…, "J":[…], "inner":[[…]]}`
/// lists 1-based mode labels.
#[derive(Debug, Clone, PartialEq)]
pub struct JuntaSpec<T: Scalar = f64> {
    mode_count: usize,
    junta_modes: Vec<usize>,
    inner: SymplecticOrthogonal<T>,
}

impl<T: Scalar> JuntaSpec<T> {
    pub fn new(mode_count: usize, junta_modes: Vec<usize>, inner: SymplecticOrthogonal<T>) -> Result<Self> {
        let modes = check_modes(mode_count, junta_modes)?;
        if inner.mode_count() != modes.len() && !modes.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: 2 * modes.len(),
                found: inner.matrix().nrows(),
            });
        }
        Ok(Self {
            mode_count,
            junta_modes: modes,
            inner,
        })
    }

    pub fn mode_count(&self) -> usize {
        self.mode_count
    }

    pub fn junta_modes(&self) -> &[usize] {
        &self.junta_modes
    }

    pub fn inner(&self) -> &SymplecticOrthogonal<T> {
        &self.inner
    }

    pub fn k(&self) -> usize {
        self.junta_modes.len()
    }
}

fn check_modes(mode_count: usize, mut modes: Vec<usize>) -> Result<Vec<usize>> {
    if let Some(&bad) = modes.iter().find(|&&m| m >= mode_count) {
        return Err(Error::ModeIndexOutOfRange {
            mode: bad,
            modes: mode_count,
        });
    }
    modes.sort_unstable();
    let before = modes.len();
    modes.dedup();
    if modes.len() != before {
        return Err(Error::InvalidParameter("repeated junta mode".into()));
    }
    Ok(modes)
}

#[derive(Serialize, Deserialize)]
struct JuntaRepr<T> {
    #[serde(rename = "M")]
    m: usize,
    #[serde(rename = "J")]
    j: Vec<usize>,
    inner: Vec<Vec<T>>,
}

impl<T: Scalar> Serialize for JuntaSpec<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        JuntaRepr {
            m: self.mode_count,
            j: self.junta_modes.iter().map(|m| m + 1).collect(),
            inner: super::to_rows(self.inner.matrix()),
        }
        .serialize(s)
    }
}

impl<'de, T: Scalar> Deserialize<'de> for JuntaSpec<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let repr = JuntaRepr::<T>::deserialize(d)?;
        if repr.j.contains(&0) {
            return Err(D::Error::custom("junta mode labels are 1-based"));
        }
        let inner = super::from_rows(&repr.inner).map_err(D::Error::custom)?;
        let inner = if inner.nrows() == 0 {
            SymplecticOrthogonal::from_matrix_unchecked(inner)
        } else {
            SymplecticOrthogonal::new(inner).map_err(D::Error::custom)?
        };
        Self::new(repr.m, repr.j.iter().map(|m| m - 1).collect(), inner).map_err(D::Error::custom)
    }
}

/// Full `2M × 2M` matrix `T ⊕ I`: the inner block placed on the junta modes'
/// `q` and `p` rows and columns, identity elsewhere.
pub fn embed_junta<T: Scalar>(spec: &JuntaSpec<T>) -> SymplecticOrthogonal<T> {
    let m = spec.mode_count;
    let k = spec.k();
    let inner = spec.inner.matrix();
    let mut out = DMatrix::identity(2 * m, 2 * m);
    // inner index a < k is q of junta_modes[a], a >= k is p of junta_modes[a - k]
    let full = |a: usize| {
        if a < k {
            spec.junta_modes[a]
        } else {
            m + spec.junta_modes[a - k]
        }
    };
    for a in 0..2 * k {
        for b in 0..2 * k {
            out[(full(a), full(b))] = inner[(a, b)];
        }
    }
    SymplecticOrthogonal::from_matrix_unchecked(out)
}

/// Complex-side embedding: `inner` on `modes`, identity elsewhere.
pub fn embed_transfer<T: Scalar>(
    mode_count: usize,
    modes: &[usize],
    inner: &ComplexTransfer<T>,
) -> Result<ComplexTransfer<T>> {
    if inner.mode_count() != modes.len() {
        return Err(Error::DimensionMismatch {
            expected: modes.len(),
            found: inner.mode_count(),
        });
    }
    if let Some(&bad) = modes.iter().find(|&&m| m >= mode_count) {
        return Err(Error::ModeIndexOutOfRange {
            mode: bad,
            modes: mode_count,
        });
    }
    let mut g: DMatrix<Complex<T>> = DMatrix::identity(mode_count, mode_count);
    for (a, &i) in modes.iter().enumerate() {
        for (b, &j) in modes.iter().enumerate() {
            g[(i, j)] = inner.entries()[(a, b)];
        }
    }
    Ok(ComplexTransfer::new(g))
}
