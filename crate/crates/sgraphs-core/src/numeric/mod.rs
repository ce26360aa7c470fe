//! Shared numerical building blocks: special functions, quadrature,
//! histograms and least-squares fits.

pub mod bessel;
pub mod fit;
pub mod histogram;
pub mod quad;
