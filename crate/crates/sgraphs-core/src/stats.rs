//! Spectral observables on unfolded spectra: nearest-neighbor spacings,
//! two-point correlation R2(L), the spectral form factor K(tau), number
//! variance Sigma^2(L), spectral rigidity Delta_3(L), and small-s repulsion
//! slopes, plus the closed-form GSE reference curves.
//!
//! Unfolding conventions for degenerate graph spectra follow the two uses in
//! the source experiments: `ResolvedPairs` treats each Kramers doublet as one
//! level and unfolds by the doublet density (spacing statistics of doublets,
//! unit mean), while `IndividualLevels` counts both members, doubling the
//! unfolding density; half of all nearest-neighbor spacings then collapse
//! onto a delta peak at zero and the doublet spacings move to mean two.

use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::curve::ObservableCurve;
use crate::numeric::fit::{linear_fit, PolyFit};
use crate::numeric::quad::integrate_adaptive;
use crate::secular::Spectrum;
use crate::seeding::stream_rng;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("total length must be positive to unfold a graph spectrum")]
    UnknownLength,
    #[error("need at least {needed} values, got {got}")]
    TooFewValues { needed: usize, got: usize },
    #[error("need at least {needed} spacings in the fit range, got {got}")]
    TooFewSpacings { needed: usize, got: usize },
    #[error("spectral window {window} is too short for max abscissa {requested}")]
    WindowTooShort { window: f64, requested: f64 },
    #[error("ensemble is empty")]
    EmptyEnsemble,
    #[error("fraction must lie in (0, 1), got {0}")]
    BadFraction(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DoubletMode {
    /// One value per Kramers doublet; unfold by the doublet density.
    ResolvedPairs,
    /// Each doublet contributes two identical values; unfold by the full
    /// level density (twice the doublet density).
    IndividualLevels,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceTag {
    Graph,
    Rmt,
    External,
}

/// A spectrum rescaled to unit mean spacing.
#[derive(Debug, Clone)]
pub struct UnfoldedSpectrum {
    pub values: Vec<f64>,
    pub source: SourceTag,
    pub doublet_mode: DoubletMode,
}

impl UnfoldedSpectrum {
    pub fn spacings(&self) -> Vec<f64> {
        self.values.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn mean_spacing(&self) -> f64 {
        let n = self.values.len();
        if n < 2 {
            return f64::NAN;
        }
        (self.values[n - 1] - self.values[0]) / (n - 1) as f64
    }

    pub fn window(&self) -> (f64, f64) {
        (
            *self.values.first().unwrap_or(&0.0),
            *self.values.last().unwrap_or(&0.0),
        )
    }
}

/// Unfold a graph spectrum using the Weyl density L/pi (individual levels)
/// or the doublet density (resolved pairs). For a graph scaled to total
/// length pi the individual-level unfolding is the identity.
pub fn unfold_graph_spectrum(
    spec: &Spectrum,
    total_length: f64,
    mode: DoubletMode,
) -> Result<UnfoldedSpectrum, StatsError> {
    if !(total_length > 0.0) {
        return Err(StatsError::UnknownLength);
    }
    if spec.values.is_empty() {
        return Err(StatsError::TooFewValues { needed: 1, got: 0 });
    }
    let weyl_density = total_length / std::f64::consts::PI;
    let level_count: usize = spec.multiplicities.iter().map(|&m| m as usize).sum();
    let values = match mode {
        DoubletMode::ResolvedPairs => {
            let density = weyl_density * spec.values.len() as f64 / level_count as f64;
            spec.values.iter().map(|&k| k * density).collect()
        }
        DoubletMode::IndividualLevels => {
            let mut v = Vec::with_capacity(level_count);
            for (&k, &m) in spec.values.iter().zip(&spec.multiplicities) {
                for _ in 0..m {
                    v.push(k * weyl_density);
                }
            }
            v
        }
    };
    Ok(UnfoldedSpectrum { values, source: SourceTag::Graph, doublet_mode: mode })
}

/// Smooth counting function fitted to one or more realizations of an RMT
/// spectrum: a degree-`degree` polynomial least-squares fit of the staircase
/// over the central fraction of each spectrum.
#[derive(Debug, Clone)]
pub struct UnfoldingMap {
    poly: PolyFit,
    lo: f64,
    hi: f64,
}

impl UnfoldingMap {
    /// Fit to the pooled staircase of an ensemble. With R realizations the
    /// pooled rank divided by R estimates the per-realization counting
    /// function, so one shared map unfolds every realization without
    /// absorbing realization-specific fluctuations.
    pub fn fit(
        realizations: &[Vec<f64>],
        degree: usize,
        central_fraction: f64,
    ) -> Result<UnfoldingMap, StatsError> {
        if realizations.is_empty() {
            return Err(StatsError::EmptyEnsemble);
        }
        if !(central_fraction > 0.0 && central_fraction <= 1.0) {
            return Err(StatsError::BadFraction(central_fraction));
        }
        let r = realizations.len() as f64;
        let mut pooled: Vec<f64> = realizations.iter().flatten().cloned().collect();
        pooled.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
        let n = pooled.len();
        if n <= degree + 1 {
            return Err(StatsError::TooFewValues { needed: degree + 2, got: n });
        }
        let keep = ((central_fraction * n as f64).ceil() as usize).clamp(degree + 2, n);
        let start = (n - keep) / 2;
        let x: Vec<f64> = pooled[start..start + keep].to_vec();
        let y: Vec<f64> = (start..start + keep).map(|i| (i as f64 + 0.5) / r).collect();
        let poly = PolyFit::fit(&x, &y, degree);
        Ok(UnfoldingMap { poly, lo: x[0], hi: x[keep - 1] })
    }

    /// Map a sorted spectrum through the smooth counting function, keeping
    /// only values inside the fitted window.
    pub fn apply(&self, values: &[f64], source: SourceTag, mode: DoubletMode) -> UnfoldedSpectrum {
        let mut out: Vec<f64> = values
            .iter()
            .filter(|&&v| v >= self.lo && v <= self.hi)
            .map(|&v| self.poly.eval(v))
            .collect();
        out.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
        UnfoldedSpectrum { values: out, source, doublet_mode: mode }
    }
}

/// Unfold a single RMT spectrum with its own degree-5 polynomial fit.
pub fn unfold_rmt_spectrum(
    values: &[f64],
    degree: usize,
    central_fraction: f64,
) -> Result<UnfoldedSpectrum, StatsError> {
    let map = UnfoldingMap::fit(std::slice::from_ref(&values.to_vec()), degree, central_fraction)?;
    Ok(map.apply(values, SourceTag::Rmt, DoubletMode::ResolvedPairs))
}

/// Randomly drop a fraction of levels, emulating missed resonances. The
/// unfolding is left untouched, exactly as in a measurement that cannot know
/// which levels it lost.
pub fn drop_random_levels(
    u: &UnfoldedSpectrum,
    fraction: f64,
    seed: u64,
) -> Result<UnfoldedSpectrum, StatsError> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(StatsError::BadFraction(fraction));
    }
    let mut rng = stream_rng(seed, 0x6d697373);
    let values: Vec<f64> = u
        .values
        .iter()
        .cloned()
        .filter(|_| rng.gen::<f64>() >= fraction)
        .collect();
    Ok(UnfoldedSpectrum { values, source: u.source, doublet_mode: u.doublet_mode })
}

/// Normalized nearest-neighbor spacing histogram over [0, hi).
pub fn nn_spacing_histogram(
    spacings: &[f64],
    bins: usize,
    hi: f64,
) -> Result<ObservableCurve, StatsError> {
    if spacings.is_empty() {
        return Err(StatsError::TooFewValues { needed: 1, got: 0 });
    }
    let hist = crate::numeric::histogram::Histogram::from_samples(spacings, 0.0, hi, bins);
    let density = hist.density();
    let n = hist.total_in_range() as f64;
    let w = hist.bin_width();
    let sigma: Vec<f64> = hist
        .counts
        .iter()
        .map(|&c| (c as f64).sqrt() / (n * w))
        .collect();
    Ok(ObservableCurve::new(
        (0..bins).map(|i| hist.bin_center(i)).collect(),
        density,
        hist.counts.clone(),
        sigma,
    ))
}

fn per_realization_curve_average(
    per_realization: Vec<Vec<f64>>,
    abscissa: Vec<f64>,
) -> ObservableCurve {
    let r = per_realization.len();
    let npts = abscissa.len();
    let mut mean = vec![0.0; npts];
    for row in &per_realization {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in mean.iter_mut() {
        *m /= r as f64;
    }
    let mut sigma = vec![0.0; npts];
    if r > 1 {
        for row in &per_realization {
            for ((s, v), m) in sigma.iter_mut().zip(row).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        for s in sigma.iter_mut() {
            *s = (*s / ((r - 1) as f64 * r as f64)).sqrt();
        }
    }
    ObservableCurve::new(abscissa, mean, vec![r as u64; npts], sigma)
}

/// Two-point correlation R2(L) on uniform bins up to `l_max`, estimated by
/// pair-distance counts with reference levels restricted to the interior of
/// each spectrum so every reference sees a full window on both sides.
pub fn two_point_correlation(
    ensemble: &[&[f64]],
    l_max: f64,
    bins: usize,
) -> Result<ObservableCurve, StatsError> {
    if ensemble.is_empty() {
        return Err(StatsError::EmptyEnsemble);
    }
    let w = l_max / bins as f64;
    let per: Vec<Vec<f64>> = ensemble
        .par_iter()
        .filter_map(|values| {
            let n = values.len();
            if n < 4 {
                return None;
            }
            let (lo, hi) = (values[0], values[n - 1]);
            if hi - lo <= 2.0 * l_max {
                return None;
            }
            let mut counts = vec![0.0f64; bins];
            let mut refs = 0usize;
            for (i, &e) in values.iter().enumerate() {
                if e < lo + l_max || e > hi - l_max {
                    continue;
                }
                refs += 1;
                for &f in &values[i + 1..] {
                    let d = f - e;
                    if d >= l_max {
                        break;
                    }
                    counts[(d / w) as usize] += 1.0;
                }
                // pairs below the reference
                for &f in values[..i].iter().rev() {
                    let d = e - f;
                    if d >= l_max {
                        break;
                    }
                    counts[(d / w) as usize] += 1.0;
                }
            }
            if refs == 0 {
                return None;
            }
            // both signs counted: normalize per reference and per unit L,
            // dividing by 2 so an uncorrelated unit-density spectrum gives 1
            Some(counts.iter().map(|c| c / (2.0 * refs as f64 * w)).collect())
        })
        .collect();
    if per.is_empty() {
        let span = ensemble
            .iter()
            .map(|v| if v.len() < 2 { 0.0 } else { v[v.len() - 1] - v[0] })
            .fold(0.0, f64::max);
        return Err(StatsError::WindowTooShort { window: span, requested: 2.0 * l_max });
    }
    let centers = (0..bins).map(|i| (i as f64 + 0.5) * w).collect();
    Ok(per_realization_curve_average(per, centers))
}

/// Spectral form factor K(tau) = <|sum_n exp(2 pi i tau u_n)|^2> / N,
/// ensemble averaged. With `keep_diagonal` false the self term (exactly one)
/// is subtracted.
pub fn form_factor(
    ensemble: &[&[f64]],
    tau_grid: &[f64],
    keep_diagonal: bool,
) -> Result<ObservableCurve, StatsError> {
    if ensemble.is_empty() {
        return Err(StatsError::EmptyEnsemble);
    }
    let per: Vec<Vec<f64>> = ensemble
        .par_iter()
        .map(|values| {
            let n = values.len() as f64;
            tau_grid
                .iter()
                .map(|&tau| {
                    let mut re = 0.0;
                    let mut im = 0.0;
                    for &u in values.iter() {
                        let (s, c) = (2.0 * std::f64::consts::PI * tau * u).sin_cos();
                        re += c;
                        im += s;
                    }
                    let k = (re * re + im * im) / n;
                    if keep_diagonal {
                        k
                    } else {
                        k - 1.0
                    }
                })
                .collect()
        })
        .collect();
    Ok(per_realization_curve_average(per, tau_grid.to_vec()))
}

fn stratified_starts(lo: f64, hi: f64, l: f64, n: usize) -> Vec<f64> {
    let span = hi - lo - l;
    (0..n).map(|i| lo + span * (i as f64 + 0.5) / n as f64).collect()
}

/// Margin keeping sliding windows away from the spectrum edges. The first
/// and last values of a finite spectrum are themselves levels; windows close
/// to them see a conditioned (non-stationary) environment whose count
/// deficit decays only like the tail of the two-level cluster function, so
/// a buffer of several mean spacings is needed for unbiased moments.
const EDGE_MARGIN_SPACINGS: f64 = 10.0;

fn interior_bounds(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    let (lo, hi) = (values[0], values[n - 1]);
    let margin = EDGE_MARGIN_SPACINGS * (hi - lo) / (n - 1) as f64;
    (lo + margin, hi - margin)
}

/// Window-position count: enough starts to cover the spectrum at roughly
/// four windows per length L, capped to keep the cost bounded.
fn start_count(span: f64, l: f64) -> usize {
    ((4.0 * span / l.max(0.5)) as usize).clamp(256, 4096)
}

/// Number variance Sigma^2(L): variance of the level count in a window of
/// length L, sampled over stratified window positions and averaged over the
/// ensemble. The count fluctuation is taken around the grand mean over the
/// whole ensemble; subtracting each realization's own window mean would bias
/// the variance low by Var(mean)/m.
pub fn number_variance(
    ensemble: &[&[f64]],
    l_grid: &[f64],
) -> Result<ObservableCurve, StatsError> {
    if ensemble.is_empty() {
        return Err(StatsError::EmptyEnsemble);
    }
    let l_max = l_grid.iter().cloned().fold(0.0, f64::max);
    // per realization and L: (mean count, mean squared count)
    let moments: Vec<Vec<(f64, f64)>> = ensemble
        .par_iter()
        .filter_map(|values| {
            let n = values.len();
            if n < 4 {
                return None;
            }
            let (lo, hi) = interior_bounds(values);
            if hi - lo <= 2.0 * l_max {
                return None;
            }
            let row = l_grid
                .iter()
                .map(|&l| {
                    let starts = stratified_starts(lo, hi, l, start_count(hi - lo, l));
                    let mut sum = 0.0;
                    let mut sum2 = 0.0;
                    for &x in &starts {
                        let a = values.partition_point(|&v| v < x);
                        let b = values.partition_point(|&v| v < x + l);
                        let c = (b - a) as f64;
                        sum += c;
                        sum2 += c * c;
                    }
                    let m = starts.len() as f64;
                    (sum / m, sum2 / m)
                })
                .collect();
            Some(row)
        })
        .collect();
    if moments.is_empty() {
        let span = ensemble
            .iter()
            .map(|v| if v.len() < 2 { 0.0 } else { v[v.len() - 1] - v[0] })
            .fold(0.0, f64::max);
        return Err(StatsError::WindowTooShort { window: span, requested: 2.0 * l_max });
    }
    let r = moments.len() as f64;
    let grand_mean: Vec<f64> = (0..l_grid.len())
        .map(|i| moments.iter().map(|row| row[i].0).sum::<f64>() / r)
        .collect();
    let per: Vec<Vec<f64>> = moments
        .iter()
        .map(|row| {
            row.iter()
                .zip(&grand_mean)
                .map(|(&(m1, m2), &mu)| (m2 - 2.0 * mu * m1 + mu * mu).max(0.0))
                .collect()
        })
        .collect();
    Ok(per_realization_curve_average(per, l_grid.to_vec()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RigidityMethod {
    /// Least-squares residual of a straight-line fit to the counting
    /// function over each sliding window, computed in closed form.
    DirectFit,
    /// Integral transform of the Sigma^2 estimate:
    /// Delta_3(L) = (2/L^4) int_0^L (L^3 - 2 L^2 E + E^3) Sigma^2(E) dE.
    FromSigma2,
}

/// Closed-form least-squares deviation of the counting staircase from its
/// best linear fit over [x, x+l]; `ts` are the level offsets within the
/// window, sorted.
fn rigidity_window(ts: &[f64], l: f64) -> f64 {
    let mut s0 = 0.0;
    let mut s1 = 0.0;
    for &t in ts {
        s0 += l - t;
        s1 += 0.5 * (l * l - t * t);
    }
    let mut s2 = 0.0;
    for (j, pair) in ts.windows(2).enumerate() {
        let h = pair[1] - pair[0];
        let count = (j + 1) as f64;
        s2 += count * count * h;
    }
    if !ts.is_empty() {
        let count = ts.len() as f64;
        s2 += count * count * (l - ts[ts.len() - 1]);
    }
    let a = (12.0 * s1 - 6.0 * l * s0) / (l * l * l);
    let b = (s0 - 0.5 * a * l * l) / l;
    ((s2 - a * s1 - b * s0) / l).max(0.0)
}

/// Spectral rigidity Delta_3(L) by either the direct sliding-window fit or
/// the integral transform of the number variance.
pub fn spectral_rigidity(
    ensemble: &[&[f64]],
    l_grid: &[f64],
    method: RigidityMethod,
) -> Result<ObservableCurve, StatsError> {
    match method {
        RigidityMethod::DirectFit => rigidity_direct(ensemble, l_grid),
        RigidityMethod::FromSigma2 => rigidity_from_sigma2(ensemble, l_grid),
    }
}

fn rigidity_direct(
    ensemble: &[&[f64]],
    l_grid: &[f64],
) -> Result<ObservableCurve, StatsError> {
    if ensemble.is_empty() {
        return Err(StatsError::EmptyEnsemble);
    }
    let l_max = l_grid.iter().cloned().fold(0.0, f64::max);
    let per: Vec<Vec<f64>> = ensemble
        .par_iter()
        .filter_map(|values| {
            let n = values.len();
            if n < 4 {
                return None;
            }
            let (lo, hi) = interior_bounds(values);
            if hi - lo <= 2.0 * l_max {
                return None;
            }
            let row = l_grid
                .iter()
                .map(|&l| {
                    let starts = stratified_starts(lo, hi, l, start_count(hi - lo, l));
                    let mut acc = 0.0;
                    let mut ts = Vec::new();
                    for &x in &starts {
                        let a = values.partition_point(|&v| v < x);
                        let b = values.partition_point(|&v| v < x + l);
                        ts.clear();
                        ts.extend(values[a..b].iter().map(|&v| v - x));
                        acc += rigidity_window(&ts, l);
                    }
                    acc / starts.len() as f64
                })
                .collect();
            Some(row)
        })
        .collect();
    if per.is_empty() {
        let span = ensemble
            .iter()
            .map(|v| if v.len() < 2 { 0.0 } else { v[v.len() - 1] - v[0] })
            .fold(0.0, f64::max);
        return Err(StatsError::WindowTooShort { window: span, requested: 2.0 * l_max });
    }
    Ok(per_realization_curve_average(per, l_grid.to_vec()))
}

fn rigidity_from_sigma2(
    ensemble: &[&[f64]],
    l_grid: &[f64],
) -> Result<ObservableCurve, StatsError> {
    let l_max = l_grid.iter().cloned().fold(0.0, f64::max);
    // dense Sigma^2 table on (0, l_max]
    let dense_n = 256;
    let dense: Vec<f64> = (1..=dense_n)
        .map(|i| l_max * i as f64 / dense_n as f64)
        .collect();
    let sigma2 = number_variance(ensemble, &dense)?;
    let table = move |e: f64| -> f64 {
        if e <= 0.0 {
            return 0.0;
        }
        let pos = e / l_max * dense_n as f64;
        let idx = pos.floor() as usize;
        if idx == 0 {
            sigma2.value[0] * pos
        } else if idx >= dense_n {
            sigma2.value[dense_n - 1]
        } else {
            let frac = pos - idx as f64;
            sigma2.value[idx - 1] * (1.0 - frac) + sigma2.value[idx] * frac
        }
    };
    let value: Vec<f64> = l_grid
        .iter()
        .map(|&l| rigidity_transform(&table, l))
        .collect();
    Ok(ObservableCurve::new(
        l_grid.to_vec(),
        value,
        vec![ensemble.len() as u64; l_grid.len()],
        vec![0.0; l_grid.len()],
    ))
}

/// The smoothing transform from number variance to rigidity.
pub fn rigidity_transform<F: Fn(f64) -> f64>(sigma2: &F, l: f64) -> f64 {
    let integrand = |e: f64| (l * l * l - 2.0 * l * l * e + e * e * e) * sigma2(e);
    2.0 / l.powi(4) * integrate_adaptive(&integrand, 0.0, l, 1e-9 * l.powi(4))
}

/// Least-squares slope of log I(s) against log s over `fit_range`, where
/// I is the empirical CDF of the spacing sample. Requires at least 30
/// spacings inside the range. Returns (slope, standard error).
pub fn repulsion_slope(
    spacings: &[f64],
    fit_range: (f64, f64),
) -> Result<(f64, f64), StatsError> {
    let mut sorted = spacings.to_vec();
    sorted.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len() as f64;
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (i, &s) in sorted.iter().enumerate() {
        if s >= fit_range.0 && s <= fit_range.1 && s > 0.0 {
            x.push(s.ln());
            y.push(((i as f64 + 1.0) / n).ln());
        }
    }
    if x.len() < 30 {
        return Err(StatsError::TooFewSpacings { needed: 30, got: x.len() });
    }
    let (slope, _, stderr) = linear_fit(&x, &y);
    Ok((slope, stderr))
}

// ---------------------------------------------------------------------------
// closed-form GSE references
// ---------------------------------------------------------------------------

/// Ensemble-averaged GSE form factor:
/// K(tau) = |tau|/2 - (|tau|/4) ln|1 - |tau|| for |tau| <= 2, and 1 beyond.
/// Diverges logarithmically at |tau| = 1.
pub fn gse_form_factor(tau: f64) -> f64 {
    let t = tau.abs();
    if t > 2.0 {
        1.0
    } else {
        0.5 * t - 0.25 * t * (1.0 - t).abs().ln()
    }
}

/// GSE number variance from the form factor:
/// Sigma^2(L) = (2/pi^2) int_0^inf K(tau) sin^2(pi tau L) / tau^2 dtau.
pub fn gse_number_variance(l: f64) -> f64 {
    if l <= 0.0 {
        return 0.0;
    }
    let pi = std::f64::consts::PI;
    let f = |tau: f64| gse_form_factor(tau) * (pi * tau * l).sin().powi(2) / (tau * tau);
    // split at the integrable log singularity and the kink at 2
    let cut = 200.0;
    let body = integrate_adaptive(&f, 0.0, 1.0, 1e-9)
        + integrate_adaptive(&f, 1.0, 2.0, 1e-9)
        + integrate_adaptive(&f, 2.0, cut, 1e-9);
    // tail where K = 1: int_T^inf sin^2(pi tau L)/tau^2 dtau
    let b = 2.0 * pi * l;
    let tail = 0.5 / cut + (b * cut).sin() / (2.0 * b * cut * cut);
    2.0 / (pi * pi) * (body + tail)
}

/// GSE spectral rigidity via the smoothing transform of the closed-form
/// number variance.
pub fn gse_spectral_rigidity(l: f64) -> f64 {
    rigidity_transform(&gse_number_variance, l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rmt::{EnsembleKind, EnsembleSpec};

    /// Unit-density Poisson spectrum: unit-rate exponential gaps.
    fn poisson_spectrum(n: usize, seed: u64, stream: u64) -> Vec<f64> {
        let mut rng = stream_rng(seed, stream);
        let mut acc = 0.0;
        (0..n)
            .map(|_| {
                let u: f64 = rng.gen::<f64>();
                acc += -(1.0 - u).ln();
                acc
            })
            .collect()
    }

    fn picket_fence(n: usize) -> Vec<f64> {
        (0..n).map(|i| i as f64 + 0.25).collect()
    }

    #[test]
    fn unfold_graph_identity_for_normalized_length() {
        let spec = Spectrum {
            values: vec![1.0, 2.5, 4.0],
            multiplicities: vec![1, 1, 1],
            doublet_splits: vec![0.0; 3],
            k_range: (0.5, 5.0),
            diagnostics: crate::secular::SolverDiagnostics {
                method: "test".into(),
                grid_step: 0.0,
                refine_tol: 0.0,
                pole_guard: 0.0,
                weyl_expected: 0.0,
                weyl_warning: false,
            },
        };
        let u = unfold_graph_spectrum(&spec, std::f64::consts::PI, DoubletMode::IndividualLevels)
            .unwrap();
        assert_eq!(u.values, vec![1.0, 2.5, 4.0]);
        // the same spectrum in resolved mode is also the identity
        let u = unfold_graph_spectrum(&spec, std::f64::consts::PI, DoubletMode::ResolvedPairs)
            .unwrap();
        assert_eq!(u.values, vec![1.0, 2.5, 4.0]);
        assert!(unfold_graph_spectrum(&spec, 0.0, DoubletMode::ResolvedPairs).is_err());
    }

    #[test]
    fn unfold_doublets_by_mode() {
        let spec = Spectrum {
            values: vec![2.0, 4.0, 6.0, 8.0],
            multiplicities: vec![2, 2, 2, 2],
            doublet_splits: vec![0.0; 4],
            k_range: (1.0, 9.0),
            diagnostics: crate::secular::SolverDiagnostics {
                method: "test".into(),
                grid_step: 0.0,
                refine_tol: 0.0,
                pole_guard: 0.0,
                weyl_expected: 0.0,
                weyl_warning: false,
            },
        };
        // doublets every 2 in k with L = pi: doublet density 1/2 per unit k
        let resolved =
            unfold_graph_spectrum(&spec, std::f64::consts::PI, DoubletMode::ResolvedPairs).unwrap();
        let sp = resolved.spacings();
        assert!(sp.iter().all(|&s| (s - 1.0).abs() < 1e-12));
        let individual =
            unfold_graph_spectrum(&spec, std::f64::consts::PI, DoubletMode::IndividualLevels)
                .unwrap();
        let sp = individual.spacings();
        let zeros = sp.iter().filter(|&&s| s == 0.0).count();
        assert_eq!(zeros, 4); // exactly half of all spacings vanish
        assert!((individual.mean_spacing() - 6.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn rmt_unfolding_gives_unit_mean_spacing() {
        let spec = EnsembleSpec {
            kind: EnsembleKind::Gue,
            dim: 300,
            realizations: 4,
            seed: 3,
            coupled: None,
        };
        let eigs = spec.all_eigenvalues().unwrap();
        let map = UnfoldingMap::fit(&eigs, 5, 0.8).unwrap();
        for e in &eigs {
            let u = map.apply(e, SourceTag::Rmt, DoubletMode::ResolvedPairs);
            assert!((u.mean_spacing() - 1.0).abs() < 0.02, "{}", u.mean_spacing());
        }
        let single = unfold_rmt_spectrum(&eigs[0], 5, 0.8).unwrap();
        assert!((single.mean_spacing() - 1.0).abs() < 0.02);
    }

    #[test]
    fn picket_fence_spacing_histogram_concentrates_at_one() {
        let u = UnfoldedSpectrum {
            values: picket_fence(500),
            source: SourceTag::External,
            doublet_mode: DoubletMode::ResolvedPairs,
        };
        let h = nn_spacing_histogram(&u.spacings(), 20, 2.0).unwrap();
        let mass: f64 = h.value.iter().sum::<f64>() * 0.1;
        assert!((mass - 1.0).abs() < 1e-10);
        for (i, (&c, &v)) in h.abscissa.iter().zip(&h.value).enumerate() {
            if (c - 1.05).abs() < 1e-9 {
                assert!(v > 9.9, "bin {i} should hold all mass");
            } else {
                assert_eq!(v, 0.0);
            }
        }
    }

    #[test]
    fn poisson_spacings_match_exponential_within_3_sigma() {
        let u = poisson_spectrum(40000, 5, 0);
        let spacings: Vec<f64> = u.windows(2).map(|w| w[1] - w[0]).collect();
        let h = nn_spacing_histogram(&spacings, 30, 5.0).unwrap();
        let n = spacings.len() as f64;
        let w = 5.0 / 30.0;
        for i in 0..h.len() {
            let a = i as f64 * w;
            let p = (-a as f64).exp() - (-(a + w) as f64).exp();
            let expect = p / w;
            let sigma = (n * p).sqrt() / (n * w);
            assert!(
                (h.value[i] - expect).abs() < 3.5 * sigma + 1e-12,
                "bin {i}: {} vs {expect}",
                h.value[i]
            );
        }
    }

    #[test]
    fn r2_is_flat_for_poisson_and_spiky_for_picket_fence() {
        let spectra: Vec<Vec<f64>> = (0..40).map(|s| poisson_spectrum(3000, 9, s)).collect();
        let refs: Vec<&[f64]> = spectra.iter().map(|v| v.as_slice()).collect();
        let r2 = two_point_correlation(&refs, 4.0, 16).unwrap();
        for i in 0..r2.len() {
            let sigma = r2.sigma[i].max(1e-6);
            assert!(
                (r2.value[i] - 1.0).abs() < 3.5 * sigma,
                "bin {i}: {} +- {sigma}",
                r2.value[i]
            );
        }
        let fence = picket_fence(3000);
        let r2 = two_point_correlation(&[&fence], 3.5, 35).unwrap();
        // delta spikes exactly at integer distances, zero in between
        let spikes: Vec<usize> = (0..r2.len()).filter(|&i| r2.value[i] > 1.0).collect();
        assert_eq!(spikes.len(), 3, "{spikes:?}");
        for (rank, &i) in spikes.iter().enumerate() {
            assert!((r2.abscissa[i] - (rank + 1) as f64).abs() < 0.1);
            assert!(r2.value[i] > 5.0);
        }
        for i in 0..r2.len() {
            if !spikes.contains(&i) {
                assert!(r2.value[i] < 0.2, "expected gap at {}", r2.abscissa[i]);
            }
        }
    }

    #[test]
    fn window_too_short_is_reported() {
        let short = poisson_spectrum(20, 1, 0);
        assert!(matches!(
            two_point_correlation(&[&short], 50.0, 10),
            Err(StatsError::WindowTooShort { .. })
        ));
        assert!(matches!(
            number_variance(&[&short], &[30.0]),
            Err(StatsError::WindowTooShort { .. })
        ));
    }

    #[test]
    fn form_factor_diagonal_offset_is_exactly_one() {
        let spectra: Vec<Vec<f64>> = (0..10).map(|s| poisson_spectrum(400, 2, s)).collect();
        let refs: Vec<&[f64]> = spectra.iter().map(|v| v.as_slice()).collect();
        let taus: Vec<f64> = (1..=30).map(|i| 0.1 * i as f64).collect();
        let kept = form_factor(&refs, &taus, true).unwrap();
        let removed = form_factor(&refs, &taus, false).unwrap();
        for i in 0..taus.len() {
            assert!((kept.value[i] - removed.value[i] - 1.0).abs() < 1e-12);
        }
        // Poisson spectra are uncorrelated: K(tau) ~ 1 for tau away from 0
        let avg: f64 = kept.value[9..].iter().sum::<f64>() / (kept.len() - 9) as f64;
        assert!((avg - 1.0).abs() < 0.1, "avg = {avg}");
    }

    #[test]
    fn number_variance_poisson_and_picket_fence() {
        let spectra: Vec<Vec<f64>> = (0..60).map(|s| poisson_spectrum(4000, 12, s)).collect();
        let refs: Vec<&[f64]> = spectra.iter().map(|v| v.as_slice()).collect();
        let grid = [0.5, 1.0, 2.0, 3.0];
        let s2 = number_variance(&refs, &grid).unwrap();
        for (i, &l) in grid.iter().enumerate() {
            assert!(
                (s2.value[i] - l).abs() < 0.05 * l,
                "Sigma2({l}) = {}",
                s2.value[i]
            );
        }
        let fence = picket_fence(4000);
        let s2 = number_variance(&[&fence], &grid).unwrap();
        for v in &s2.value {
            assert!(*v <= 0.3, "picket fence Sigma2 = {v}");
        }
    }

    #[test]
    fn rigidity_poisson_value_and_method_agreement() {
        let spectra: Vec<Vec<f64>> = (0..100).map(|s| poisson_spectrum(8000, 33, s)).collect();
        let refs: Vec<&[f64]> = spectra.iter().map(|v| v.as_slice()).collect();
        let grid = [1.0, 2.0, 3.0];
        let direct = spectral_rigidity(&refs, &grid, RigidityMethod::DirectFit).unwrap();
        let via_s2 = spectral_rigidity(&refs, &grid, RigidityMethod::FromSigma2).unwrap();
        for (i, &l) in grid.iter().enumerate() {
            assert!(
                (direct.value[i] - l / 15.0).abs() < 0.05 * l / 15.0,
                "Delta3({l}) = {}",
                direct.value[i]
            );
            let rel = (direct.value[i] - via_s2.value[i]).abs() / direct.value[i];
            assert!(rel < 0.02, "methods disagree at L = {l}: rel {rel}");
        }
    }

    #[test]
    fn rigidity_transform_of_linear_sigma2_is_l_over_15() {
        let v = rigidity_transform(&|e| e, 2.4);
        assert!((v - 2.4 / 15.0).abs() < 1e-9);
    }

    #[test]
    fn estimators_are_shift_invariant() {
        let base = poisson_spectrum(2000, 8, 1);
        let shifted: Vec<f64> = base.iter().map(|v| v + 137.25).collect();
        let grid = [0.5, 1.5];
        let a = number_variance(&[&base], &grid).unwrap();
        let b = number_variance(&[&shifted], &grid).unwrap();
        for i in 0..grid.len() {
            assert!((a.value[i] - b.value[i]).abs() < 1e-9);
        }
        let taus = [0.4, 1.3];
        let fa = form_factor(&[&base], &taus, true).unwrap();
        let fb = form_factor(&[&shifted], &taus, true).unwrap();
        for i in 0..taus.len() {
            assert!((fa.value[i] - fb.value[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn repulsion_slope_recovers_power_law() {
        // I(s) = s^3 on [0, 1]: spacings s_i = (i/n)^(1/3)
        let n = 20000;
        let spacings: Vec<f64> = (1..=n).map(|i| (i as f64 / n as f64).powf(1.0 / 3.0)).collect();
        let (slope, err) = repulsion_slope(&spacings, (0.05, 0.3)).unwrap();
        assert!((slope - 3.0).abs() < 0.05, "slope = {slope} +- {err}");
        assert!(matches!(
            repulsion_slope(&spacings[..40], (0.90, 0.95)),
            Err(StatsError::TooFewSpacings { .. })
        ));
    }

    #[test]
    fn gse_form_factor_reference_points() {
        // value computed from the closed form at tau = 1.5
        let expected = 0.75 - 0.375 * 0.5f64.ln();
        assert!((gse_form_factor(1.5) - expected).abs() < 1e-15);
        assert_eq!(gse_form_factor(3.0), 1.0);
        assert!((gse_form_factor(2.0) - 1.0).abs() < 1e-12);
        assert!(gse_form_factor(0.999) > 2.0 * gse_form_factor(0.8));
    }

    #[test]
    fn gse_number_variance_is_small_and_increasing_slowly() {
        let s1 = gse_number_variance(1.0);
        let s2 = gse_number_variance(2.0);
        // rigid spectra: far below the Poisson value, slowly growing
        assert!(s1 > 0.05 && s1 < 0.3, "Sigma2(1) = {s1}");
        assert!(s2 > s1 && s2 < 0.4, "Sigma2(2) = {s2}");
        let d1 = gse_spectral_rigidity(1.0);
        assert!(d1 > 0.01 && d1 < 0.1, "Delta3(1) = {d1}");
    }

    #[test]
    fn dropping_levels_keeps_order_and_rate() {
        let u = UnfoldedSpectrum {
            values: poisson_spectrum(20000, 3, 2),
            source: SourceTag::External,
            doublet_mode: DoubletMode::ResolvedPairs,
        };
        let dropped = drop_random_levels(&u, 0.085, 7).unwrap();
        let kept = dropped.values.len() as f64 / u.values.len() as f64;
        assert!((kept - 0.915).abs() < 0.01, "kept fraction {kept}");
        assert!(dropped.values.windows(2).all(|w| w[1] >= w[0]));
        assert!(drop_random_levels(&u, 1.5, 0).is_err());
    }
}
