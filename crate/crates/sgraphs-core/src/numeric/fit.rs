//! Small least-squares helpers: straight lines and low-degree polynomials.

use nalgebra::{DMatrix, DVector};

/// Ordinary least-squares line y = slope*x + intercept.
/// Returns (slope, intercept, stderr_of_slope).
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    assert!(x.len() >= 2);
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        sxx += (xi - mx) * (xi - mx);
        sxy += (xi - mx) * (yi - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let mut ss_res = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        let r = yi - slope * xi - intercept;
        ss_res += r * r;
    }
    let stderr = if x.len() > 2 {
        (ss_res / ((n - 2.0) * sxx)).sqrt()
    } else {
        0.0
    };
    (slope, intercept, stderr)
}

/// Polynomial fitted by least squares in a rescaled variable
/// t = (x - shift) / scale, which keeps the normal equations well conditioned.
#[derive(Debug, Clone)]
pub struct PolyFit {
    coeffs: Vec<f64>,
    shift: f64,
    scale: f64,
}

impl PolyFit {
    /// Fit a degree-`degree` polynomial to (x, y) pairs.
    pub fn fit(x: &[f64], y: &[f64], degree: usize) -> PolyFit {
        assert_eq!(x.len(), y.len());
        assert!(x.len() > degree, "need more points than coefficients");
        let lo = x.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let shift = 0.5 * (lo + hi);
        let scale = (0.5 * (hi - lo)).max(f64::MIN_POSITIVE);
        let m = x.len();
        let cols = degree + 1;
        let mut a = DMatrix::<f64>::zeros(m, cols);
        for (r, &xi) in x.iter().enumerate() {
            let t = (xi - shift) / scale;
            let mut p = 1.0;
            for c in 0..cols {
                a[(r, c)] = p;
                p *= t;
            }
        }
        let b = DVector::from_column_slice(y);
        let svd = a.svd(true, true);
        let sol = svd.solve(&b, 1e-12).expect("least squares solve");
        PolyFit { coeffs: sol.iter().cloned().collect(), shift, scale }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let t = (x - self.shift) / self.scale;
        let mut acc = 0.0;
        for &c in self.coeffs.iter().rev() {
            acc = acc * t + c;
        }
        acc
    }
}
