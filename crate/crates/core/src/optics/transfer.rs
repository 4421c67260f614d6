use nalgebra::DMatrix;
use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{from_rows, to_rows};
use crate::scalar::UNITARITY_TOL;
use crate::Scalar;

/// Complex `M × M` transfer matrix `G = Re G + i Im G`.
///
/// This is the optimizer's raw variable: it is unitary at solutions but is
/// not required to be unitary in general.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexTransfer<T: Scalar = f64> {
    entries: DMatrix<Complex<T>>,
}

impl<T: Scalar> ComplexTransfer<T> {
    pub fn new(entries: DMatrix<Complex<T>>) -> Self {
        assert!(entries.is_square(), "transfer matrix must be square");
        Self { entries }
    }

    pub fn identity(modes: usize) -> Self {
        Self::new(DMatrix::identity(modes, modes))
    }

    pub fn from_parts(re: &DMatrix<T>, im: &DMatrix<T>) -> Self {
        assert_eq!(re.shape(), im.shape());
        Self::new(DMatrix::from_fn(re.nrows(), re.ncols(), |i, j| {
            Complex::new(re[(i, j)], im[(i, j)])
        }))
    }

    /// Inverse of [`ComplexTransfer::params`].
    pub fn from_params(modes: usize, params: &[T]) -> Self {
        assert_eq!(params.len(), 2 * modes * modes);
        let (re, im) = params.split_at(modes * modes);
        Self::new(DMatrix::from_fn(modes, modes, |i, j| {
            Complex::new(re[i * modes + j], im[i * modes + j])
        }))
    }

    /// Real parameter vector: row-major real parts followed by row-major
    /// imaginary parts (`2M²` entries). Gradients use the same layout.
    pub fn params(&self) -> Vec<T> {
        let m = self.mode_count();
        let mut out = Vec::with_capacity(2 * m * m);
        for i in 0..m {
            for j in 0..m {
                out.push(self.entries[(i, j)].re);
            }
        }
        for i in 0..m {
            for j in 0..m {
                out.push(self.entries[(i, j)].im);
            }
        }
        out
    }

    pub fn mode_count(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<Complex<T>> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<Complex<T>> {
        self.entries
    }

    pub fn re(&self) -> DMatrix<T> {
        self.entries.map(|z| z.re)
    }

    pub fn im(&self) -> DMatrix<T> {
        self.entries.map(|z| z.im)
    }

    pub fn adjoint(&self) -> Self {
        Self::new(self.entries.adjoint())
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self::new(&self.entries * &other.entries)
    }

    /// `‖G†G − I‖²_F`.
    pub fn unitarity_residual(&self) -> T {
        let m = self.mode_count();
        let gram = self.entries.adjoint() * &self.entries - DMatrix::identity(m, m);
        gram.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr())
    }

    pub fn is_unitary(&self) -> bool {
        self.unitarity_residual().as_f64() <= UNITARITY_TOL
    }

    pub fn cast<U: Scalar>(&self) -> ComplexTransfer<U> {
        ComplexTransfer::new(
            self.entries
                .map(|z| Complex::new(U::lit(z.re.as_f64()), U::lit(z.im.as_f64()))),
        )
    }
}

#[derive(Serialize, Deserialize)]
struct TransferRepr<T> {
    re: Vec<Vec<T>>,
    im: Vec<Vec<T>>,
}

impl<T: Scalar> Serialize for ComplexTransfer<T> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        TransferRepr {
            re: to_rows(&self.re()),
            im: to_rows(&self.im()),
        }
        .serialize(s)
    }
}

impl<'de, T: Scalar> Deserialize<'de> for ComplexTransfer<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let repr = TransferRepr::<T>::deserialize(d)?;
        let re = from_rows(&repr.re).map_err(serde::de::Error::custom)?;
        let im = from_rows(&repr.im).map_err(serde::de::Error::custom)?;
        if re.shape() != im.shape() || !re.is_square() {
            return Err(serde::de::Error::custom("re/im must be equal square matrices"));
        }
        Ok(Self::from_parts(&re, &im))
    }
}

/// Haar-random `M × M` unitary.
///
/// QR-orthonormalizes a complex standard-Gaussian matrix and multiplies each
/// column by the phase of the matching diagonal entry of `R`, which makes the
/// distribution exactly Haar.
pub fn haar_unitary<T: Scalar, R: Rng + ?Sized>(modes: usize, rng: &mut R) -> ComplexTransfer<T> {
    assert!(modes >= 1);
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let ginibre: DMatrix<Complex<f64>> = DMatrix::from_fn(modes, modes, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex::new(re * scale, im * scale)
    });
    let qr = ginibre.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..modes {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { Complex::new(1.0, 0.0) };
        for i in 0..modes {
            q[(i, j)] *= phase;
        }
    }
    ComplexTransfer::new(q.map(|z| Complex::new(T::lit(z.re), T::lit(z.im))))
}
