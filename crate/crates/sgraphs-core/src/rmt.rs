//! Gaussian random-matrix ensembles and the coupled-block ensemble modeling
//! two conjugate subgraphs joined by a single pair of bonds.
//!
//! Variance conventions: every classical ensemble is built as H = (X + X^t)/2
//! (or the adjoint for complex entries) from iid standard Gaussian data, so
//! off-diagonal entries have variance 1/2 and diagonal entries variance 1
//! (GOE) or 1/2 (GUE block construction). Spectra are always unfolded before
//! statistics are taken, which makes every downstream result independent of
//! this choice. The one place where absolute scales matter is the coupled
//! block ensemble: there the GUE blocks are scaled to unit mean level spacing
//! at the band center and the coupling vectors follow the fixed density
//! exp(-pi |psi|^2), so the coupling strength relative to the spacing is not
//! a free parameter.

use nalgebra::{Complex, DMatrix};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use thiserror::Error;

use crate::seeding::stream_rng;

#[derive(Debug, Error, PartialEq)]
pub enum RmtError {
    #[error("GSE needs an even dimension, got {0}")]
    OddGseDimension(usize),
    #[error("coupled-block ensemble needs coupled_block_params")]
    MissingCoupledParams,
    #[error("dimension must equal 2 * sub_dim = {expected}, got {got}")]
    CoupledDimensionMismatch { expected: usize, got: usize },
    #[error("dimension must be positive")]
    ZeroDimension,
    #[error("Kramers pairing failed: gap {gap} at pair {pair} exceeds tolerance {tol}")]
    NotDoublyDegenerate { pair: usize, gap: f64, tol: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnsembleKind {
    Goe,
    Gue,
    Gse,
    CoupledBlock,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoupledBlockParams {
    pub sub_dim: usize,
    pub coupling_scale: f64,
}

/// Description of a matrix ensemble plus the seed that makes every
/// realization reproducible.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSpec {
    pub kind: EnsembleKind,
    pub dim: usize,
    pub realizations: usize,
    pub seed: u64,
    pub coupled: Option<CoupledBlockParams>,
}

impl EnsembleSpec {
    pub fn validate(&self) -> Result<(), RmtError> {
        if self.dim == 0 {
            return Err(RmtError::ZeroDimension);
        }
        match self.kind {
            EnsembleKind::Gse if self.dim % 2 != 0 => Err(RmtError::OddGseDimension(self.dim)),
            EnsembleKind::CoupledBlock => {
                let p = self.coupled.ok_or(RmtError::MissingCoupledParams)?;
                if self.dim != 2 * p.sub_dim {
                    return Err(RmtError::CoupledDimensionMismatch {
                        expected: 2 * p.sub_dim,
                        got: self.dim,
                    });
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// One Hermitian sample; realization index selects the RNG stream, so
    /// samples can be generated in any order or in parallel.
    pub fn sample(&self, realization: usize) -> Result<DMatrix<Complex<f64>>, RmtError> {
        self.validate()?;
        let mut rng = stream_rng(self.seed, realization as u64);
        let m = match self.kind {
            EnsembleKind::Goe => goe(self.dim, &mut rng),
            EnsembleKind::Gue => gue(self.dim, &mut rng),
            EnsembleKind::Gse => gse(self.dim, &mut rng),
            EnsembleKind::CoupledBlock => {
                let p = self.coupled.expect("validated");
                coupled_block(p.sub_dim, p.coupling_scale, &mut rng)
            }
        };
        Ok(m)
    }

    /// Sorted eigenvalues of one realization.
    pub fn eigenvalues(&self, realization: usize) -> Result<Vec<f64>, RmtError> {
        let m = self.sample(realization)?;
        let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().cloned().collect();
        ev.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(ev)
    }

    /// Eigenvalues of every realization, computed in parallel. The output
    /// order is by realization index regardless of the thread schedule.
    pub fn all_eigenvalues(&self) -> Result<Vec<Vec<f64>>, RmtError> {
        self.validate()?;
        (0..self.realizations)
            .into_par_iter()
            .map(|r| self.eigenvalues(r))
            .collect()
    }
}

fn randn(rng: &mut impl Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn randn_c(rng: &mut impl Rng, scale: f64) -> Complex<f64> {
    Complex::new(scale * randn(rng), scale * randn(rng))
}

fn goe(n: usize, rng: &mut impl Rng) -> DMatrix<Complex<f64>> {
    let mut h = DMatrix::<Complex<f64>>::zeros(n, n);
    for i in 0..n {
        h[(i, i)] = Complex::new(randn(rng), 0.0);
        for j in (i + 1)..n {
            let v = Complex::new(0.5 * (randn(rng) + randn(rng)), 0.0);
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
    }
    h
}

fn gue(n: usize, rng: &mut impl Rng) -> DMatrix<Complex<f64>> {
    // (X + X^dagger)/2 with X iid standard complex Gaussian
    let mut h = DMatrix::<Complex<f64>>::zeros(n, n);
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..n {
        h[(i, i)] = Complex::new(inv_sqrt2 * randn(rng), 0.0);
        for j in (i + 1)..n {
            let v = randn_c(rng, 0.5);
            h[(i, j)] = v;
            h[(j, i)] = v.conj();
        }
    }
    h
}

/// GSE in the 2n x 2n complex representation: blocks [[A, B], [-conj(B), conj(A)]]
/// with A Hermitian and B antisymmetric. Every eigenvalue is doubly degenerate.
fn gse(dim: usize, rng: &mut impl Rng) -> DMatrix<Complex<f64>> {
    let n = dim / 2;
    let mut a = DMatrix::<Complex<f64>>::zeros(n, n);
    let mut b = DMatrix::<Complex<f64>>::zeros(n, n);
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..n {
        a[(i, i)] = Complex::new(inv_sqrt2 * randn(rng), 0.0);
        for j in (i + 1)..n {
            let va = randn_c(rng, 0.5);
            a[(i, j)] = va;
            a[(j, i)] = va.conj();
            let vb = randn_c(rng, 0.5);
            b[(i, j)] = vb;
            b[(j, i)] = -vb;
        }
    }
    quaternion_blocks(&a, &b)
}

/// Assemble [[A, B], [-conj(B), conj(A)]]; Hermitian when A = A^dagger and
/// B = -B^t, and then commuting with the antiunitary C tau_y (Kramers pairs).
fn quaternion_blocks(a: &DMatrix<Complex<f64>>, b: &DMatrix<Complex<f64>>) -> DMatrix<Complex<f64>> {
    let n = a.nrows();
    let mut h = DMatrix::<Complex<f64>>::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            h[(i, j)] = a[(i, j)];
            h[(i + n, j + n)] = a[(i, j)].conj();
            h[(i, j + n)] = b[(i, j)];
            h[(i + n, j)] = -b[(i, j)].conj();
        }
    }
    h
}

/// Coupled-block Hamiltonian: H0 a GUE block scaled to unit mean spacing at
/// the band center, its complex conjugate on the other diagonal block, and an
/// antisymmetric coupling built from wavefunction values at the two coupling
/// points, V_nm = psi_n1 psi_m2 - psi_n2 psi_m1.
fn coupled_block(n: usize, coupling_scale: f64, rng: &mut impl Rng) -> DMatrix<Complex<f64>> {
    // center-of-band mean spacing of this block convention is pi sqrt(v)/sqrt(n)
    // with v the off-diagonal variance; v = n/pi^2 makes the spacing 1
    let comp_std = (n as f64).sqrt() / std::f64::consts::PI;
    let mut h0 = DMatrix::<Complex<f64>>::zeros(n, n);
    for i in 0..n {
        h0[(i, i)] = Complex::new(comp_std * randn(rng), 0.0);
        for j in (i + 1)..n {
            let v = randn_c(rng, comp_std * std::f64::consts::FRAC_1_SQRT_2);
            h0[(i, j)] = v;
            h0[(j, i)] = v.conj();
        }
    }
    // psi components have density exp(-pi |psi|^2), i.e. <|psi|^2> = 1/pi
    let psi_std = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    let psi1: Vec<Complex<f64>> = (0..n).map(|_| randn_c(rng, psi_std)).collect();
    let psi2: Vec<Complex<f64>> = (0..n).map(|_| randn_c(rng, psi_std)).collect();
    let mut v = DMatrix::<Complex<f64>>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            v[(i, j)] = coupling_scale * (psi1[i] * psi2[j] - psi2[i] * psi1[j]);
        }
    }
    quaternion_blocks(&h0, &v)
}

/// Middle ceil(fraction * N) values of a sorted slice.
pub fn central_fraction(values: &[f64], fraction: f64) -> Vec<f64> {
    assert!(!values.is_empty(), "central_fraction of empty input");
    assert!(fraction > 0.0 && fraction <= 1.0);
    let n = values.len();
    let m = ((fraction * n as f64).ceil() as usize).clamp(1, n);
    let start = (n - m) / 2;
    values[start..start + m].to_vec()
}

/// Collapse a doubly degenerate sorted spectrum to one value per Kramers
/// pair (the pair mean). Errors if any pair gap exceeds `rel_tol` times the
/// spectral width.
pub fn resolve_kramers_pairs(sorted: &[f64], rel_tol: f64) -> Result<Vec<f64>, RmtError> {
    assert!(sorted.len() % 2 == 0, "doublet spectrum must have even length");
    let width = sorted[sorted.len() - 1] - sorted[0];
    let tol = rel_tol * width.max(f64::MIN_POSITIVE);
    let mut out = Vec::with_capacity(sorted.len() / 2);
    for (pair, chunk) in sorted.chunks_exact(2).enumerate() {
        let gap = chunk[1] - chunk[0];
        if gap > tol {
            return Err(RmtError::NotDoublyDegenerate { pair, gap, tol });
        }
        out.push(0.5 * (chunk[0] + chunk[1]));
    }
    Ok(out)
}
