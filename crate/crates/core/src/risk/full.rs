use nalgebra::DVector;
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optics::SymplecticOrthogonal;
use crate::training::sample_sphere;
use crate::{rng, SchemeTag, Scalar};

/// Samples per RNG substream. Part of the reproducibility contract: results
/// are a pure function of `(seed, samples)` given this chunk size.
pub const MC_CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub samples: usize,
}

/// Draws the block a single risk term sees under `scheme`.
struct BlockSampler {
    dim: usize,
    radius: f64,
    rest: Option<Gamma<f64>>,
}

impl BlockSampler {
    fn new(scheme: SchemeTag, modes: usize, size: usize, energy: f64) -> Result<Self> {
        let dim = 2 * modes;
        let (radius, rest) = match scheme {
            SchemeTag::Erm1 => ((2.0 * energy).sqrt(), None),
            SchemeTag::Erm1Prime => ((2.0 * energy / size as f64).sqrt(), None),
            SchemeTag::Erm2 if size == 1 => ((2.0 * energy).sqrt(), None),
            // squared norm of the other 2M(T−1) Gaussian coordinates is χ² = Γ(M(T−1), 2)
            SchemeTag::Erm2 => (
                (2.0 * energy).sqrt(),
                Some(
                    Gamma::new((modes * (size - 1)) as f64, 2.0)
                        .map_err(|e| Error::InvalidParameter(e.to_string()))?,
                ),
            ),
        };
        Ok(Self { dim, radius, rest })
    }

    fn sample<T: Scalar, R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<T> {
        match &self.rest {
            None => sample_sphere(self.dim, self.radius, rng),
            Some(chi2) => loop {
                let g: Vec<f64> = (0..self.dim).map(|_| rng.sample(StandardNormal)).collect();
                let head = g.iter().map(|v| v * v).sum::<f64>();
                let total = head + chi2.sample(rng);
                if total > 0.0 {
                    let s = self.radius / total.sqrt();
                    return DVector::from_iterator(self.dim, g.iter().map(|v| T::lit(s * v)));
                }
            },
        }
    }
}

/// Monte-Carlo estimate of the full risk `C_scheme(V)`.
///
/// ERM1 averages over the sphere of radius `√(2E)` in `ℝ^{2M}`, ERM1' over
/// radius `√(2E/T)`, and ERM2 averages the first-block term over the sphere of
/// radius `√(2E)` in `ℝ^{2MT}`. `stderr` is the sample standard deviation over
/// `√samples`.
#[allow(clippy::too_many_arguments)]
pub fn full_risk_mc<T: Scalar>(
    scheme: SchemeTag,
    ou: &SymplecticOrthogonal<T>,
    ov: &SymplecticOrthogonal<T>,
    modes: usize,
    size: usize,
    energy: f64,
    samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    check_mc_args(modes, size, energy, samples, &[ou, ov])?;
    let diff = ou.matrix() - ov.matrix();
    let sampler = BlockSampler::new(scheme, modes, size, energy)?;
    Ok(mc_mean(&sampler, samples, seed, |x: &DVector<T>| {
        1.0 - (-0.5 * (&diff * x).norm_squared().as_f64()).exp()
    }))
}

/// Paired Monte-Carlo estimate of `C_scheme(W) − C_scheme(V)` against the
/// target `O_U`, both risks evaluated on the same samples.
#[allow(clippy::too_many_arguments)]
pub fn full_risk_difference_mc<T: Scalar>(
    scheme: SchemeTag,
    ou: &SymplecticOrthogonal<T>,
    ow: &SymplecticOrthogonal<T>,
    ov: &SymplecticOrthogonal<T>,
    modes: usize,
    size: usize,
    energy: f64,
    samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    check_mc_args(modes, size, energy, samples, &[ou, ow, ov])?;
    let (dw, dv) = (ou.matrix() - ow.matrix(), ou.matrix() - ov.matrix());
    let sampler = BlockSampler::new(scheme, modes, size, energy)?;
    Ok(mc_mean(&sampler, samples, seed, |x: &DVector<T>| {
        let fw = (-0.5 * (&dw * x).norm_squared().as_f64()).exp();
        let fv = (-0.5 * (&dv * x).norm_squared().as_f64()).exp();
        fv - fw
    }))
}

fn check_mc_args<T: Scalar>(
    modes: usize,
    size: usize,
    energy: f64,
    samples: usize,
    circuits: &[&SymplecticOrthogonal<T>],
) -> Result<()> {
    if samples < 2 {
        return Err(Error::InvalidParameter("need at least 2 samples".into()));
    }
    if modes == 0 || size == 0 || !(energy >= 0.0 && energy.is_finite()) {
        return Err(Error::InvalidParameter(format!("M = {modes}, T = {size}, E = {energy}")));
    }
    if let Some(bad) = circuits.iter().find(|o| o.mode_count() != modes) {
        return Err(Error::DimensionMismatch {
            expected: 2 * modes,
            found: 2 * bad.mode_count(),
        });
    }
    Ok(())
}

fn mc_mean<T: Scalar, F>(sampler: &BlockSampler, samples: usize, seed: u64, term: F) -> McEstimate
where
    F: Fn(&DVector<T>) -> f64 + Sync,
{
    let chunks = samples.div_ceil(MC_CHUNK);
    let partial: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = rng::substream(seed, c as u64);
            let n = MC_CHUNK.min(samples - c * MC_CHUNK);
            let (mut s, mut s2) = (0.0, 0.0);
            for _ in 0..n {
                let v = term(&sampler.sample(&mut rng));
                s += v;
                s2 += v * v;
            }
            (s, s2)
        })
        .collect();
    let (s, s2) = partial.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let n = samples as f64;
    let mean = s / n;
    let var = ((s2 - n * mean * mean) / (n - 1.0)).max(0.0);
    McEstimate {
        estimate: mean,
        stderr: (var / n).sqrt(),
        samples,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optics::random_linear_optical;

    #[test]
    fn equal_circuits_give_zero() {
        let u = random_linear_optical::<f64>(2, 3);
        for scheme in SchemeTag::ALL {
            let est = full_risk_mc(scheme, &u, &u, 2, 3, 1.0, 1000, 1).unwrap();
            assert_eq!((est.estimate, est.stderr), (0.0, 0.0));
        }
    }

    #[test]
    fn erm2_single_block_matches_erm1() {
        let (u, v) = (random_linear_optical::<f64>(2, 3), random_linear_optical::<f64>(2, 4));
        let a = full_risk_mc(SchemeTag::Erm1, &u, &v, 2, 1, 1.0, 200_000, 5).unwrap();
        let b = full_risk_mc(SchemeTag::Erm2, &u, &v, 2, 1, 1.0, 200_000, 6).unwrap();
        let tol = 3.0 * (a.stderr.powi(2) + b.stderr.powi(2)).sqrt();
        assert!((a.estimate - b.estimate).abs() < tol, "{a:?} {b:?}");
    }

    #[test]
    fn erm2_block_sampler_matches_full_parent() {
        // shortcut via χ² versus slicing a full parent vector
        let (u, v) = (random_linear_optical::<f64>(1, 1), random_linear_optical::<f64>(1, 2));
        let fast = full_risk_mc(SchemeTag::Erm2, &u, &v, 1, 4, 2.0, 200_000, 7).unwrap();
        let mut rng = rng::seeded(8);
        let diff = u.matrix() - v.matrix();
        let n = 200_000;
        let mut s = 0.0;
        for _ in 0..n {
            let x: DVector<f64> = sample_sphere(8, 2.0, &mut rng);
            let r = &diff * x.rows(0, 2);
            s += 1.0 - (-0.5 * r.norm_squared()).exp();
        }
        let slow = s / n as f64;
        assert!((fast.estimate - slow).abs() < 4.0 * fast.stderr * 2f64.sqrt(), "{fast:?} {slow}");
    }

    #[test]
    fn deterministic_and_validated() {
        let (u, v) = (random_linear_optical::<f64>(2, 3), random_linear_optical::<f64>(2, 4));
        let a = full_risk_mc(SchemeTag::Erm2, &u, &v, 2, 3, 1.0, 10_000, 5).unwrap();
        let b = full_risk_mc(SchemeTag::Erm2, &u, &v, 2, 3, 1.0, 10_000, 5).unwrap();
        assert_eq!(a, b);
        assert!(full_risk_mc(SchemeTag::Erm1, &u, &v, 2, 3, 1.0, 1, 5).is_err());
        assert!(full_risk_mc(SchemeTag::Erm1, &u, &v, 2, 3, -1.0, 10, 5).is_err());
    }
}
