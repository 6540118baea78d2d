//! Midpoint-convexity scans over uniform parameter grids.

use rayon::prelude::*;

use crate::error::Result;

/// `n` equally spaced points on `[-1, 1]`.
pub fn t_grid(n: usize) -> Vec<f64> {
    assert!(n >= 2);
    (0..n).map(|i| -1.0 + 2.0 * i as f64 / (n - 1) as f64).collect()
}

/// Largest midpoint-convexity violation `f(t_i) - (f(t_{i-k}) + f(t_{i+k}))/2`
/// over all symmetric index triples of a uniform grid. Non-positive for a
/// convex sequence.
pub fn max_midpoint_violation(values: &[f64]) -> f64 {
    let n = values.len();
    let mut worst = f64::NEG_INFINITY;
    for i in 1..n.saturating_sub(1) {
        for k in 1..=i.min(n - 1 - i) {
            worst = worst.max(values[i] - 0.5 * (values[i - k] + values[i + k]));
        }
    }
    worst
}

/// Scale used to normalize violations: largest absolute value on the grid.
pub fn value_scale(values: &[f64]) -> f64 {
    values.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Result of a convexity scan along a one-parameter family.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ConvexityScan {
    pub t: Vec<f64>,
    pub values: Vec<f64>,
    pub max_violation: f64,
    pub scale: f64,
}

impl ConvexityScan {
    pub fn new(t: Vec<f64>, values: Vec<f64>) -> Self {
        let max_violation = max_midpoint_violation(&values);
        let scale = value_scale(&values);
        ConvexityScan { t, values, max_violation, scale }
    }

    /// Passes when the violation is at most `abs_tol`.
    pub fn passes(&self, abs_tol: f64) -> bool {
        self.max_violation <= abs_tol
    }

    /// Violation relative to the largest value on the grid.
    pub fn relative_violation(&self) -> f64 {
        self.max_violation / self.scale.max(f64::MIN_POSITIVE)
    }
}

/// Evaluates `f` on every grid point (in parallel) and scans the result.
pub fn scan_fn(t: &[f64], f: impl Fn(f64) -> Result<f64> + Sync) -> Result<ConvexityScan> {
    let values = t.par_iter().map(|&x| f(x)).collect::<Result<Vec<_>>>()?;
    Ok(ConvexityScan::new(t.to_vec(), values))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn detects_concavity() {
        let t = t_grid(41);
        let convex: Vec<f64> = t.iter().map(|x| x * x + x.abs()).collect();
        assert!(max_midpoint_violation(&convex) <= 1e-15);
        let concave: Vec<f64> = t.iter().map(|x| -x * x).collect();
        assert!(max_midpoint_violation(&concave) > 0.5);
    }
}
