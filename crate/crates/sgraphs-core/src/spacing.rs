//! Closed-form level-spacing laws: the Wigner surmises for the three
//! classical ensembles, the Bessel-K1 density of the squared coupling
//! between two conjugate subgraphs, and the spacing distribution of the
//! single-pair-of-bonds model built from both.
//!
//! The single-pair law comes from a rank-4 model of two conjugate GUE levels
//! at distance `a` coupled through one pair of bonds. Each resulting Kramers
//! doublet sits at distance s = sqrt(a^2 + z) from its neighbor, where
//! z = 4 |V|^2 is the squared coupling matrix element. With p_a the unit-mean
//! GUE surmise and p_V the Bessel-K1 density, the polar substitution
//! a = s cos(phi), sqrt(z) = s sin(phi) maps the quadrant a, z >= 0 onto
//! phi in [0, pi/2] and leaves
//!
//! ```text
//! p0(s) = 16 s^4 int_0^{pi/2} dphi sin(phi) cos^2(phi)
//!         exp(-(4/pi) s^2 cos^2(phi)) K1hat(pi s sin(phi))
//! ```
//!
//! (extending the integral to [0, pi] doubles the mass, since the spacing
//! density of the decoupled levels lives on a >= 0 only). The law carries
//! quartic repulsion but mean 1.32417..., and is rescaled to unit mean as
//! p(s) = sbar p0(sbar s).

use std::sync::OnceLock;
use thiserror::Error;

use crate::numeric::bessel::khat1;
use crate::numeric::quad::{gauss_legendre, integrate_adaptive, integrate_gl_with};

#[derive(Debug, Error, PartialEq)]
pub enum SpacingError {
    #[error("density argument must be nonnegative, got {0}")]
    NegativeArgument(f64),
    #[error("quadrature needs at least 200 nodes, got {0}")]
    TooFewNodes(usize),
}

/// Wigner surmise for the GOE: (pi/2) s exp(-pi s^2 / 4).
pub fn wigner_goe_pdf(s: f64) -> f64 {
    if s < 0.0 {
        return 0.0;
    }
    0.5 * std::f64::consts::PI * s * (-0.25 * std::f64::consts::PI * s * s).exp()
}

/// Wigner surmise for the GUE: (32/pi^2) s^2 exp(-4 s^2 / pi).
pub fn wigner_gue_pdf(s: f64) -> f64 {
    if s < 0.0 {
        return 0.0;
    }
    let pi = std::f64::consts::PI;
    32.0 / (pi * pi) * s * s * (-4.0 * s * s / pi).exp()
}

/// Wigner surmise for the GSE: (2^18 / 3^6 pi^3) s^4 exp(-64 s^2 / (9 pi)).
pub fn wigner_gse_pdf(s: f64) -> f64 {
    if s < 0.0 {
        return 0.0;
    }
    let pi = std::f64::consts::PI;
    let norm = 262144.0 / (729.0 * pi * pi * pi);
    norm * s.powi(4) * (-64.0 * s * s / (9.0 * pi)).exp()
}

/// Density of the squared coupling z = 4 |V|^2:
/// p_V(z) = (pi^3 / 4) sqrt(z) K1(pi sqrt(z)), finite at z = 0 where it
/// equals pi^2 / 4.
pub fn coupling_density_pv(z: f64) -> Result<f64, SpacingError> {
    if z < 0.0 {
        return Err(SpacingError::NegativeArgument(z));
    }
    Ok(pv_unchecked(z))
}

fn pv_unchecked(z: f64) -> f64 {
    let pi = std::f64::consts::PI;
    // pi^3/4 sqrt(z) K1(pi sqrt(z)) = pi^2/4 * K1hat(pi sqrt(z))
    0.25 * pi * pi * khat1(pi * z.sqrt())
}

/// Beyond this point every law in this module carries less than 1e-9 mass.
pub const SPACING_CUTOFF: f64 = 8.0;

const DEFAULT_NODES: usize = 256;

fn default_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(DEFAULT_NODES))
}

fn p0_with_rule(s: f64, rule: &(Vec<f64>, Vec<f64>)) -> f64 {
    if s < 0.0 {
        return 0.0;
    }
    let pi = std::f64::consts::PI;
    let integrand = |phi: f64| {
        let (sin, cos) = phi.sin_cos();
        sin * cos * cos * (-(4.0 / pi) * s * s * cos * cos).exp() * khat1(pi * s * sin)
    };
    16.0 * s.powi(4) * integrate_gl_with(&integrand, 0.0, 0.5 * pi, rule)
}

/// Single-pair spacing law before rescaling; normalized to unit mass but with
/// mean 1.32417...
pub fn single_pair_pdf_unscaled(s: f64) -> f64 {
    p0_with_rule(s, default_rule())
}

/// Same with an explicit Gauss-Legendre node count (>= 200).
pub fn single_pair_pdf_unscaled_with_nodes(s: f64, nodes: usize) -> Result<f64, SpacingError> {
    if nodes < 200 {
        return Err(SpacingError::TooFewNodes(nodes));
    }
    Ok(p0_with_rule(s, &gauss_legendre(nodes)))
}

/// Mean of the unscaled single-pair law, computed once by adaptive quadrature.
pub fn single_pair_mean() -> f64 {
    static MEAN: OnceLock<f64> = OnceLock::new();
    *MEAN.get_or_init(|| {
        integrate_adaptive(&|s| s * single_pair_pdf_unscaled(s), 0.0, SPACING_CUTOFF, 1e-10)
    })
}

/// Single-pair spacing law rescaled to unit mean: p(s) = sbar p0(sbar s).
pub fn single_pair_pdf(s: f64) -> f64 {
    let sbar = single_pair_mean();
    sbar * single_pair_pdf_unscaled(sbar * s)
}

/// The spacing laws exposed to statistics and exports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpacingLawKind {
    WignerGoe,
    WignerGue,
    WignerGse,
    SinglePairBonds,
}

impl SpacingLawKind {
    pub fn pdf(&self, s: f64) -> f64 {
        match self {
            SpacingLawKind::WignerGoe => wigner_goe_pdf(s),
            SpacingLawKind::WignerGue => wigner_gue_pdf(s),
            SpacingLawKind::WignerGse => wigner_gse_pdf(s),
            SpacingLawKind::SinglePairBonds => single_pair_pdf(s),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            SpacingLawKind::WignerGoe => "wigner-goe",
            SpacingLawKind::WignerGue => "wigner-gue",
            SpacingLawKind::WignerGse => "wigner-gse",
            SpacingLawKind::SinglePairBonds => "single-pair-bonds",
        }
    }
}

/// Cumulative distribution I(s) of a pdf on a supplied grid, by segment-wise
/// quadrature. The grid must be increasing and start at or above zero.
pub fn integrated_distribution<F: Fn(f64) -> f64>(pdf: F, grid: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(grid.len());
    let mut acc = 0.0;
    let mut prev = 0.0;
    for &s in grid {
        assert!(s >= prev, "grid must be nondecreasing");
        acc += integrate_adaptive(&|x| pdf(x), prev, s, 1e-11);
        out.push(acc);
        prev = s;
    }
    out
}

/// Empirical CDF of a sample evaluated on a grid.
pub fn empirical_cdf(samples: &[f64], grid: &[f64]) -> Vec<f64> {
    assert!(!samples.is_empty(), "empirical CDF of empty sample");
    let mut sorted = samples.to_vec();
    sorted.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len() as f64;
    grid.iter()
        .map(|&s| sorted.partition_point(|&x| x <= s) as f64 / n)
        .collect()
}

/// Supremum distance between two functions on a uniform probe grid.
pub fn sup_norm_distance<F: Fn(f64) -> f64, G: Fn(f64) -> f64>(
    f: F,
    g: G,
    lo: f64,
    hi: f64,
    probes: usize,
) -> f64 {
    (0..=probes)
        .map(|i| {
            let s = lo + (hi - lo) * i as f64 / probes as f64;
            (f(s) - g(s)).abs()
        })
        .fold(0.0, f64::max)
}

/// Sup-norm distance between the distribution functions of two densities
/// (the Kolmogorov distance), by cumulative quadrature of their difference.
pub fn distribution_distance<F: Fn(f64) -> f64, G: Fn(f64) -> f64>(
    f: F,
    g: G,
    hi: f64,
    probes: usize,
) -> f64 {
    let mut sup = 0.0f64;
    let mut acc = 0.0;
    let mut prev = 0.0;
    for i in 1..=probes {
        let s = hi * i as f64 / probes as f64;
        acc += integrate_adaptive(&|x| f(x) - g(x), prev, s, 1e-11);
        prev = s;
        sup = sup.max(acc.abs());
    }
    sup
}
