//! Uniform-bin histograms and the chi-square goodness-of-fit test.

use special::Gamma;

/// Histogram over uniform bins on [lo, hi). Samples outside the range are
/// tallied separately so goodness-of-fit tests can account for the tail.
#[derive(Debug, Clone)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
    pub below: u64,
    pub above: u64,
}

impl Histogram {
    pub fn from_samples(samples: &[f64], lo: f64, hi: f64, bins: usize) -> Self {
        assert!(bins > 0 && hi > lo);
        let mut counts = vec![0u64; bins];
        let (mut below, mut above) = (0u64, 0u64);
        let w = (hi - lo) / bins as f64;
        for &s in samples {
            if s < lo {
                below += 1;
            } else if s >= hi {
                above += 1;
            } else {
                let idx = (((s - lo) / w) as usize).min(bins - 1);
                counts[idx] += 1;
            }
        }
        Histogram { lo, hi, counts, below, above }
    }

    pub fn bin_width(&self) -> f64 {
        (self.hi - self.lo) / self.counts.len() as f64
    }

    pub fn bin_center(&self, i: usize) -> f64 {
        self.lo + (i as f64 + 0.5) * self.bin_width()
    }

    pub fn total_in_range(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Density estimate normalized over the in-range samples, so that
    /// sum(density) * bin_width = 1.
    pub fn density(&self) -> Vec<f64> {
        let n = self.total_in_range() as f64;
        let w = self.bin_width();
        self.counts.iter().map(|&c| c as f64 / (n * w)).collect()
    }
}

/// Upper tail of the chi-square distribution: P(X >= x) with k degrees of freedom.
pub fn chi_square_sf(x: f64, k: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    (1.0 - (0.5 * x).inc_gamma(0.5 * k)).clamp(0.0, 1.0)
}

/// Result of a chi-square goodness-of-fit test.
#[derive(Debug, Clone, Copy)]
pub struct GofResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    pub merged_bins: usize,
}

/// Chi-square test of a histogram against a density supported on
/// [hist.lo, infinity), integrating the density over each bin with a small
/// fixed rule. Mass above the range goes into a tail cell. Bins with expected
/// count under `min_expected` (conventionally 5) are merged with their right
/// neighbor before the test.
pub fn chi_square_gof<F: Fn(f64) -> f64>(hist: &Histogram, pdf: F, min_expected: f64) -> GofResult {
    let n_total = (hist.total_in_range() + hist.below + hist.above) as f64;
    let w = hist.bin_width();
    let bin_prob = |i: usize| {
        let a = hist.lo + i as f64 * w;
        crate::numeric::quad::integrate_gl(&|s| pdf(s), a, a + w, 12)
    };

    // observed/expected including the two tail cells
    let mut observed: Vec<f64> = Vec::with_capacity(hist.counts.len() + 2);
    let mut expected: Vec<f64> = Vec::with_capacity(hist.counts.len() + 2);
    let mut in_range_prob = 0.0;
    observed.push(hist.below as f64);
    for (i, &c) in hist.counts.iter().enumerate() {
        let p = bin_prob(i);
        in_range_prob += p;
        observed.push(c as f64);
        expected.push(n_total * p);
    }
    observed.push(hist.above as f64);
    expected.insert(0, 0.0);
    expected.push(n_total * (1.0 - in_range_prob).max(0.0));

    // merge low-expectation cells left-to-right
    let mut obs_m: Vec<f64> = Vec::new();
    let mut exp_m: Vec<f64> = Vec::new();
    let mut acc_o = 0.0;
    let mut acc_e = 0.0;
    let mut merged = 0usize;
    for (o, e) in observed.iter().zip(&expected) {
        acc_o += o;
        acc_e += e;
        if acc_e >= min_expected {
            obs_m.push(acc_o);
            exp_m.push(acc_e);
            acc_o = 0.0;
            acc_e = 0.0;
        } else {
            merged += 1;
        }
    }
    if acc_e > 0.0 || acc_o > 0.0 {
        // fold the remainder into the last kept cell
        if let (Some(o), Some(e)) = (obs_m.last_mut(), exp_m.last_mut()) {
            *o += acc_o;
            *e += acc_e;
        }
    }

    let statistic: f64 = obs_m
        .iter()
        .zip(&exp_m)
        .map(|(o, e)| (o - e) * (o - e) / e)
        .sum();
    let dof = obs_m.len().saturating_sub(1).max(1);
    GofResult {
        statistic,
        dof,
        p_value: chi_square_sf(statistic, dof as f64),
        merged_bins: merged,
    }
}
