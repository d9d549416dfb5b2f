//! Probability-simplex weight vectors (`Σ w_v = 1`, `w_v ≥ 0`).

use crate::error::{Error, Result};

/// Tolerance used when validating caller-provided simplex weights.
pub const SIMPLEX_TOL: f64 = 1e-9;

pub fn uniform(len: usize) -> Vec<f64> {
    vec![1.0 / len as f64; len]
}

pub fn is_on_simplex(w: &[f64], tol: f64) -> bool {
    !w.is_empty()
        && w.iter().all(|&x| x.is_finite() && x >= -tol)
        && (w.iter().sum::<f64>() - 1.0).abs() <= tol
}

pub fn check(w: &[f64], what: &'static str) -> Result<()> {
    if is_on_simplex(w, SIMPLEX_TOL) {
        Ok(())
    } else {
        Err(Error::OffSimplex {
            what,
            sum: w.iter().sum(),
            min: w.iter().copied().fold(f64::INFINITY, f64::min),
        })
    }
}

/// Euclidean projection onto the simplex (sort-and-threshold).
pub fn project(v: &[f64]) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut tau = 0.0;
    for (k, &x) in sorted.iter().enumerate() {
        cumsum += x;
        let t = (cumsum - 1.0) / (k + 1) as f64;
        if x - t > 0.0 {
            tau = t;
        }
    }
    v.iter().map(|&x| (x - tau).max(0.0)).collect()
}
