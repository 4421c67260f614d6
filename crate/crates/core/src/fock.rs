//! Truncated Fock-space brute force for one or two modes.
//!
//! Basis states `|n_0, n_1⟩` are indexed with mode 0 most significant, each
//! mode truncated at `cutoff` photons. Coherent states are built by
//! exponentiating the displacement generator `α a† − ᾱ a` mode by mode, and a
//! linear optical unitary by exponentiating `Σ K_ij a_i† a_j` with
//! `K = log conj(G)`. That generator conserves total photon number, so it is
//! exponentiated one number sector at a time.

use nalgebra::{DMatrix, DVector, Schur};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::optics::{complexify, MeanVector, SymplecticOrthogonal};

type CMatrix = DMatrix<Complex64>;
type CVector = DVector<Complex64>;

#[derive(Debug, Clone)]
pub struct FockSpace {
    modes: usize,
    cutoff: usize,
    /// Single-mode annihilation operator on `cutoff + 1` levels.
    ladder: CMatrix,
}

impl FockSpace {
    pub fn new(modes: usize, cutoff: usize) -> Result<Self> {
        if !(1..=2).contains(&modes) {
            return Err(Error::UnsupportedRegime(format!("Fock oracle supports 1 or 2 modes, got {modes}")));
        }
        if cutoff < 2 {
            return Err(Error::InvalidParameter(format!("cutoff {cutoff} too small")));
        }
        let ladder = CMatrix::from_fn(cutoff + 1, cutoff + 1, |r, c| {
            if c == r + 1 {
                Complex64::new((c as f64).sqrt(), 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        Ok(Self { modes, cutoff, ladder })
    }

    /// Cutoff 40 for one mode, 25 per mode for two.
    pub fn with_default_cutoff(modes: usize) -> Result<Self> {
        Self::new(modes, if modes == 1 { 40 } else { 25 })
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn dim(&self) -> usize {
        (self.cutoff + 1).pow(self.modes as u32)
    }

    fn levels(&self) -> usize {
        self.cutoff + 1
    }

    fn occupations(&self, index: usize) -> [usize; 2] {
        if self.modes == 1 {
            [index, 0]
        } else {
            [index / self.levels(), index % self.levels()]
        }
    }

    fn index(&self, n: &[usize]) -> usize {
        n.iter().fold(0, |acc, &k| acc * self.levels() + k)
    }

    /// Annihilation operator of `mode` on the full space.
    pub fn annihilation(&self, mode: usize) -> Result<CMatrix> {
        if mode >= self.modes {
            return Err(Error::ModeIndexOutOfRange { mode, modes: self.modes });
        }
        let id = CMatrix::identity(self.levels(), self.levels());
        Ok(match (self.modes, mode) {
            (1, _) => self.ladder.clone(),
            (_, 0) => self.ladder.kronecker(&id),
            _ => id.kronecker(&self.ladder),
        })
    }

    /// Largest deviation of `[a, a†]` from the identity on the levels below the cutoff.
    pub fn commutator_defect(&self) -> f64 {
        let a = &self.ladder;
        let comm = a * a.adjoint() - a.adjoint() * a;
        let n = self.cutoff;
        max_abs(&(comm.view((0, 0), (n, n)) - CMatrix::identity(n, n)))
    }

    /// `N_M = ½ RᵀR` assembled from the truncated quadratures. It is diagonal;
    /// away from the top level of each mode its entries are `Σ n_j + M/2`.
    pub fn number_operator(&self) -> DVector<f64> {
        let c = self.cutoff;
        let single = |n: usize| if n == c { c as f64 / 2.0 } else { n as f64 + 0.5 };
        DVector::from_fn(self.dim(), |i, _| {
            let n = self.occupations(i);
            (0..self.modes).map(|j| single(n[j])).sum()
        })
    }

    /// `Σ_j a_j† a_j` (diagonal).
    pub fn photon_count(&self) -> DVector<f64> {
        DVector::from_fn(self.dim(), |i, _| {
            let n = self.occupations(i);
            n[..self.modes].iter().sum::<usize>() as f64
        })
    }
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn single_mode_displaced_vacuum(alpha: Complex64, space: &FockSpace) -> CVector {
    let a = &space.ladder;
    let generator = a.adjoint() * alpha - a * alpha.conj();
    generator.exp().column(0).into_owned()
}

/// `D(x)|0⟩` on the truncated space, with `α_j = (x_{q_j} + i x_{p_j})/√2`.
pub fn coherent_vector(x: &MeanVector<f64>, space: &FockSpace) -> Result<CVector> {
    let m = space.modes;
    if x.as_vector().len() != 2 * m {
        return Err(Error::DimensionMismatch { expected: 2 * m, found: x.as_vector().len() });
    }
    let energy = x.energy();
    if energy > space.cutoff as f64 / 4.0 {
        return Err(Error::TruncationRisk { energy, cutoff: space.cutoff });
    }
    let v = x.as_vector();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    (0..m)
        .map(|j| single_mode_displaced_vacuum(Complex64::new(v[j] * s, v[m + j] * s), space))
        .reduce(|acc, mode| acc.kronecker(&mode))
        .ok_or(Error::InvalidParameter("no modes".into()))
}

/// Principal logarithm of a unitary through its Schur form.
fn unitary_log(w: &CMatrix) -> Result<CMatrix> {
    let (q, t) = Schur::new(w.clone()).unpack();
    let n = w.nrows();
    let mut off_diagonal = 0.0f64;
    for r in 0..n {
        for c in (r + 1)..n {
            off_diagonal = off_diagonal.max(t[(r, c)].norm());
        }
    }
    if off_diagonal > 1e-8 {
        return Err(Error::LogarithmBranchFailure(format!("Schur form not diagonal ({off_diagonal:e})")));
    }
    let logs = DVector::from_fn(n, |i, _| {
        let z = t[(i, i)];
        if (z + 1.0).norm() < 1e-9 {
            log::warn!("eigenvalue at -1 sits on the branch cut; using the principal branch");
        }
        z.ln()
    });
    let k = &q * CMatrix::from_diagonal(&logs) * q.adjoint();
    if max_abs(&(k.exp() - w)) > 1e-10 {
        return Err(Error::LogarithmBranchFailure("exp(log W) does not reproduce W".into()));
    }
    Ok(k)
}

/// A photon-number-conserving unitary stored as one block per number sector.
#[derive(Debug, Clone)]
pub struct SectorUnitary {
    dim: usize,
    sectors: Vec<(Vec<usize>, CMatrix)>,
}

impl SectorUnitary {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn apply(&self, v: &CVector) -> CVector {
        let mut out = CVector::zeros(self.dim);
        for (idx, block) in &self.sectors {
            let local = CVector::from_iterator(idx.len(), idx.iter().map(|&i| v[i]));
            let image = block * local;
            for (k, &i) in idx.iter().enumerate() {
                out[i] = image[k];
            }
        }
        out
    }

    pub fn to_dense(&self) -> CMatrix {
        let mut u = CMatrix::zeros(self.dim, self.dim);
        for (idx, block) in &self.sectors {
            for (r, &i) in idx.iter().enumerate() {
                for (c, &j) in idx.iter().enumerate() {
                    u[(i, j)] = block[(r, c)];
                }
            }
        }
        u
    }
}

/// Fock representation of the linear optical unitary with `U|x⟩ = |O x⟩`.
pub fn gaussian_unitary(o: &SymplecticOrthogonal<f64>, space: &FockSpace) -> Result<SectorUnitary> {
    let m = space.modes;
    if o.mode_count() != m {
        return Err(Error::DimensionMismatch { expected: m, found: o.mode_count() });
    }
    // α ↦ conj(G) α on coherent amplitudes
    let w = complexify(o)?.entries().map(|z| z.conj());
    let k = unitary_log(&w)?;
    let c = space.cutoff;
    let mut by_sector: Vec<Vec<usize>> = vec![Vec::new(); m * c + 1];
    for i in 0..space.dim() {
        let n = space.occupations(i);
        by_sector[n[..m].iter().sum::<usize>()].push(i);
    }
    let sectors = by_sector
        .into_iter()
        .map(|idx| {
            let pos = |i: usize| idx.iter().position(|&s| s == i);
            let mut h = CMatrix::zeros(idx.len(), idx.len());
            for (col, &state) in idx.iter().enumerate() {
                let n = space.occupations(state);
                for i in 0..m {
                    for j in 0..m {
                        if i == j {
                            h[(col, col)] += k[(i, i)] * n[i] as f64;
                        } else if n[j] > 0 && n[i] < c {
                            let mut target = n;
                            target[j] -= 1;
                            target[i] += 1;
                            let row = pos(space.index(&target[..m])).expect("same sector");
                            h[(row, col)] += k[(i, j)] * ((n[j] * (n[i] + 1)) as f64).sqrt();
                        }
                    }
                }
            }
            (idx, h.exp())
        })
        .collect();
    Ok(SectorUnitary { dim: space.dim(), sectors })
}

/// `|⟨x|U†V|x⟩|²` evaluated in the truncated Fock space.
pub fn oracle_fidelity(
    x: &MeanVector<f64>,
    ou: &SymplecticOrthogonal<f64>,
    ov: &SymplecticOrthogonal<f64>,
    space: &FockSpace,
) -> Result<f64> {
    let psi = coherent_vector(x, space)?;
    let u = gaussian_unitary(ou, space)?.apply(&psi);
    let v = gaussian_unitary(ov, space)?.apply(&psi);
    Ok(u.dotc(&v).norm_sqr())
}
