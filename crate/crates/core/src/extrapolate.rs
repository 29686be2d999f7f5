//! Limit estimates from dyadic subsequences x_N, N = 2^j.

use serde::Serialize;

/// Values of a sequence sampled at N = 2^j.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dyadic {
    pub samples: Vec<(usize, f64)>,
}

impl Dyadic {
    pub fn new(samples: Vec<(usize, f64)>) -> Self {
        Self { samples }
    }

    pub fn last(&self) -> Option<f64> {
        self.samples.last().map(|s| s.1)
    }

    /// Ratios x_N / x_{N/2} for the last `count` doublings, newest first.
    pub fn ratios(&self, count: usize) -> Vec<f64> {
        self.samples
            .windows(2)
            .rev()
            .take(count)
            .map(|w| w[1].1 / w[0].1)
            .collect()
    }

    /// Relative changes (x_N - x_{N/2}) / |x_{N/2}| for the last `count`
    /// doublings, newest first.
    pub fn relative_changes(&self, count: usize) -> Vec<f64> {
        self.samples
            .windows(2)
            .rev()
            .take(count)
            .map(|w| (w[1].1 - w[0].1) / w[0].1.abs())
            .collect()
    }

    /// Ratio of the last increment to the one before it.
    pub fn increment_ratio(&self) -> Option<f64> {
        let n = self.samples.len();
        if n < 3 {
            return None;
        }
        let d1 = self.samples[n - 2].1 - self.samples[n - 3].1;
        let d2 = self.samples[n - 1].1 - self.samples[n - 2].1;
        Some(d2 / d1)
    }

    /// Richardson-type extrapolation; see [`richardson`].
    pub fn extrapolate(&self) -> Option<f64> {
        let v: Vec<f64> = self.samples.iter().map(|s| s.1).collect();
        richardson(&v)
    }
}

/// Extrapolates the limit of a sequence sampled at geometric indices.
///
/// With the last three values x0, x1, x2 the increments are assumed to
/// shrink by a constant factor r = (x2 - x1) / (x1 - x0); the tail sum is then
/// x2 + (x2 - x1) r / (1 - r). When r is not in (0, 1) (constant, oscillating
/// or non-contracting increments) the last value is returned unchanged.
pub fn richardson(values: &[f64]) -> Option<f64> {
    let n = values.len();
    let last = *values.last()?;
    if n < 3 {
        return Some(last);
    }
    let d1 = values[n - 2] - values[n - 3];
    let d2 = last - values[n - 2];
    let r = d2 / d1;
    if r.is_finite() && r > 0.0 && r < 1.0 {
        Some(last + d2 * r / (1.0 - r))
    } else {
        Some(last)
    }
}
