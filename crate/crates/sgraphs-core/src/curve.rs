//! Common container for estimated or theoretical observable curves.

/// A sampled observable: abscissa (s, L or tau), value, per-point sample
/// count and scatter-based one-sigma error (zero where not applicable).
#[derive(Debug, Clone, PartialEq)]
pub struct ObservableCurve {
    pub abscissa: Vec<f64>,
    pub value: Vec<f64>,
    pub counts: Vec<u64>,
    pub sigma: Vec<f64>,
}

impl ObservableCurve {
    pub fn new(abscissa: Vec<f64>, value: Vec<f64>, counts: Vec<u64>, sigma: Vec<f64>) -> Self {
        assert_eq!(abscissa.len(), value.len());
        assert_eq!(abscissa.len(), counts.len());
        assert_eq!(abscissa.len(), sigma.len());
        ObservableCurve { abscissa, value, counts, sigma }
    }

    pub fn len(&self) -> usize {
        self.abscissa.len()
    }

    pub fn is_empty(&self) -> bool {
        self.abscissa.is_empty()
    }

    /// Value at the grid point closest to `x`.
    pub fn value_near(&self, x: f64) -> f64 {
        let mut best = 0;
        let mut dist = f64::INFINITY;
        for (i, &a) in self.abscissa.iter().enumerate() {
            if (a - x).abs() < dist {
                dist = (a - x).abs();
                best = i;
            }
        }
        self.value[best]
    }
}
