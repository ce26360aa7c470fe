//! Spectra and spectral statistics of metric graphs with antiunitary
//! symmetries.
//!
//! The crate builds metric graphs whose secular matrix commutes with an
//! antiunitary operator squaring to -1, computes their spectra (Kramers
//! doublets included) by Hermitian eigenvalue tracking, simulates the
//! open-system scattering used to measure such spectra, and compares the
//! resulting statistics against the Gaussian ensembles, a coupled-block
//! random-matrix model and the closed-form spacing laws derived from it.
//!
//! Modules follow the processing chain: [`graph`] defines the systems,
//! [`secular`] solves them, [`scattering`] opens them to ports, [`rmt`] and
//! [`spacing`] supply the random-matrix side, and [`stats`] turns either
//! source into observable curves.

pub mod config;
pub mod curve;
pub mod export;
pub mod graph;
pub mod numeric;
pub mod rmt;
pub mod scattering;
pub mod secular;
pub mod seeding;
pub mod spacing;
pub mod stats;
