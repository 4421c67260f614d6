//! Supervised learning of M-mode linear optical circuits from coherent-state
//! training data.
//!
//! A linear optical unitary acts on coherent-state mean vectors through a
//! real symplectic orthogonal matrix, so every fidelity this crate needs has a
//! closed Gaussian form. The pieces are:
//!
//! * [`optics`]: quadrature conventions, the `U(M) ↔ K(2M)` correspondence,
//!   Haar sampling, junta embeddings and the coherent-state fidelity.
//! * [`training`]: energy-constrained training sets (ERM1, ERM1', ERM2).
//! * [`risk`]: empirical and full risks, analytic gradients, the sphere-moment
//!   series and a shot-noise SWAP-test estimator.
//! * [`optimizer`]: penalty-method minimization over raw matrix entries.
//! * [`junta`]: adaptive junta discovery and semiclassical junta identification.
//! * [`bounds`]: generalization-bound calculators and empirical checks.
//! * [`fock`]: a truncated Fock-space brute-force oracle for M ≤ 2.
//!
//! The numerical core is generic over the floating-point type through
//! [`Scalar`]; `f64` aliases are exported at the crate root.

pub mod bounds;
pub mod error;
pub mod fock;
pub mod junta;
pub mod optics;
pub mod optimizer;
pub mod rng;
pub mod risk;
pub mod scalar;
pub mod training;

pub use error::{Error, Result};
pub use optics::{
    complexify, embed_junta, fidelity, random_linear_optical, realify, ComplexTransfer,
    Conventions, JuntaSpec, MeanVector, SymplecticOrthogonal,
};
pub use risk::{RiskReport, SeriesResult, ShotModel};
pub use scalar::Scalar;
pub use training::{SchemeTag, TrainingSet};

pub type SymplecticOrthogonal64 = SymplecticOrthogonal<f64>;
pub type SymplecticOrthogonal32 = SymplecticOrthogonal<f32>;
pub type ComplexTransfer64 = ComplexTransfer<f64>;
pub type ComplexTransfer32 = ComplexTransfer<f32>;
pub type MeanVector64 = MeanVector<f64>;
pub type MeanVector32 = MeanVector<f32>;
pub type TrainingSet64 = TrainingSet<f64>;
pub type TrainingSet32 = TrainingSet<f32>;
pub type JuntaSpec64 = JuntaSpec<f64>;
pub type RiskReport64 = RiskReport<f64>;
pub type SeriesResult64 = SeriesResult<f64>;
