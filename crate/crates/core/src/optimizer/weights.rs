//! Pairwise coordinate descent for the simplex-constrained weight
//! subproblems
//!
//! ```text
//! W(β) = βᵀHβ + γ_B‖β‖² − hᵀβ      W(θ) = sᵀθ + γ_C‖θ‖²
//! ```
//!
//! Each step picks a pair `(i, j)`, keeps `β_i + β_j` fixed and moves to the
//! exact minimizer on that segment, clipping at the endpoints. Pairs are
//! visited in index order `(0,1), (0,2), …, (V−2,V−1)`.

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::simplex;

/// Sweeps stop once no weight moves by more than this.
pub const SWEEP_TOL: f64 = 1e-10;
pub const SWEEP_CAP: usize = 10_000;

pub fn beta_objective(h_matrix: &Matrix, h: &[f64], beta: &[f64], gamma_b: f64) -> f64 {
    let v = beta.len();
    let mut quad = 0.0;
    for i in 0..v {
        for j in 0..v {
            quad += beta[i] * h_matrix[(i, j)] * beta[j];
        }
    }
    let norm: f64 = beta.iter().map(|b| b * b).sum();
    let lin: f64 = h.iter().zip(beta).map(|(a, b)| a * b).sum();
    quad + gamma_b * norm - lin
}

pub fn theta_objective(s: &[f64], theta: &[f64], gamma_c: f64) -> f64 {
    let lin: f64 = s.iter().zip(theta).map(|(a, b)| a * b).sum();
    lin + gamma_c * theta.iter().map(|t| t * t).sum::<f64>()
}

fn check_inputs(weights: &[f64], gamma: f64, name: &'static str, what: &'static str) -> Result<()> {
    if gamma.is_nan() || gamma <= 0.0 {
        return Err(Error::param(name, format!("must be positive, got {gamma}")));
    }
    simplex::check(weights, what)
}

/// One clipped pair update for `β`; returns the new `(β_i, β_j)`.
fn beta_pair(h_matrix: &Matrix, h: &[f64], beta: &[f64], gamma_b: f64, i: usize, j: usize) -> (f64, f64) {
    let total = beta[i] + beta[j];
    let curvature = h_matrix[(i, i)] - h_matrix[(j, i)] - h_matrix[(i, j)] + h_matrix[(j, j)];
    let cross = |p: usize, q: usize| -> f64 {
        (0..beta.len())
            .map(|k| (h_matrix[(p, k)] - h_matrix[(q, k)]) * beta[k])
            .sum()
    };
    let t_ij = curvature * beta[i] - cross(i, j);
    let t_ji = curvature * beta[j] - cross(j, i);
    let num_i = 2.0 * gamma_b * total + (h[i] - h[j]) + 2.0 * t_ij;
    let num_j = 2.0 * gamma_b * total + (h[j] - h[i]) + 2.0 * t_ji;
    if num_i <= 0.0 {
        (0.0, total)
    } else if num_j <= 0.0 {
        (total, 0.0)
    } else {
        let bi = (num_i / (2.0 * curvature + 4.0 * gamma_b)).clamp(0.0, total);
        (bi, total - bi)
    }
}

fn theta_pair(s: &[f64], theta: &[f64], gamma_c: f64, i: usize, j: usize) -> (f64, f64) {
    let total = theta[i] + theta[j];
    let num_i = 2.0 * gamma_c * total + (s[j] - s[i]);
    let num_j = 2.0 * gamma_c * total + (s[i] - s[j]);
    if num_i <= 0.0 {
        (0.0, total)
    } else if num_j <= 0.0 {
        (total, 0.0)
    } else {
        let ti = (num_i / (4.0 * gamma_c)).clamp(0.0, total);
        (ti, total - ti)
    }
}

fn sweep<F>(weights: &[f64], mut pair: F) -> Vec<f64>
where
    F: FnMut(&[f64], usize, usize) -> (f64, f64),
{
    let mut w = weights.to_vec();
    let v = w.len();
    for _ in 0..SWEEP_CAP {
        let mut moved = 0.0f64;
        for i in 0..v {
            for j in (i + 1)..v {
                let (wi, wj) = pair(&w, i, j);
                moved = moved.max((wi - w[i]).abs()).max((wj - w[j]).abs());
                w[i] = wi;
                w[j] = wj;
            }
        }
        if moved < SWEEP_TOL {
            break;
        }
    }
    w
}

/// Minimizes `W(β)` over the simplex starting from `beta`.
pub fn update_beta(h_matrix: &Matrix, h: &[f64], beta: &[f64], gamma_b: f64) -> Result<Vec<f64>> {
    check_inputs(beta, gamma_b, "gamma_b", "beta")?;
    let v = beta.len();
    if h_matrix.shape() != (v, v) || h.len() != v {
        return Err(Error::DimensionMismatch {
            context: "update_beta",
            expected: v,
            actual: h.len(),
        });
    }
    Ok(sweep(beta, |w, i, j| beta_pair(h_matrix, h, w, gamma_b, i, j)))
}

/// Minimizes `W(θ)` over the simplex starting from `theta`.
pub fn update_theta(s: &[f64], theta: &[f64], gamma_c: f64) -> Result<Vec<f64>> {
    check_inputs(theta, gamma_c, "gamma_c", "theta")?;
    if s.len() != theta.len() {
        return Err(Error::DimensionMismatch {
            context: "update_theta",
            expected: theta.len(),
            actual: s.len(),
        });
    }
    Ok(sweep(theta, |w, i, j| theta_pair(s, w, gamma_c, i, j)))
}

/// Runs single pair updates and reports the objective after each, for
/// monotonicity checks.
#[doc(hidden)]
pub fn beta_pair_trace(h_matrix: &Matrix, h: &[f64], beta: &[f64], gamma_b: f64, sweeps: usize) -> Vec<f64> {
    let mut w = beta.to_vec();
    let mut trace = vec![beta_objective(h_matrix, h, &w, gamma_b)];
    for _ in 0..sweeps {
        for i in 0..w.len() {
            for j in (i + 1)..w.len() {
                let (wi, wj) = beta_pair(h_matrix, h, &w, gamma_b, i, j);
                w[i] = wi;
                w[j] = wj;
                trace.push(beta_objective(h_matrix, h, &w, gamma_b));
            }
        }
    }
    trace
}

#[doc(hidden)]
pub fn theta_pair_trace(s: &[f64], theta: &[f64], gamma_c: f64, sweeps: usize) -> Vec<f64> {
    let mut w = theta.to_vec();
    let mut trace = vec![theta_objective(s, &w, gamma_c)];
    for _ in 0..sweeps {
        for i in 0..w.len() {
            for j in (i + 1)..w.len() {
                let (wi, wj) = theta_pair(s, &w, gamma_c, i, j);
                w[i] = wi;
                w[j] = wj;
                trace.push(theta_objective(s, &w, gamma_c));
            }
        }
    }
    trace
}
