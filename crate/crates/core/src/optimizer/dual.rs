//! The box- and balance-constrained dual QP
//!
//! ```text
//! max  μᵀ1 − ½ μᵀ S μ   s.t.  0 ≤ μ_ij ≤ c_ij,  Σ_i y_ij μ_ij = 0  ∀ j
//! ```
//!
//! solved by accelerated projected gradient with an exact projection onto
//! the feasible set, plus periodic active-set polishing that solves the
//! equality-constrained KKT system on the free coordinates.

use nalgebra::SVD;

use super::Selector;
use crate::error::{Error, Result};
use crate::linalg::{max_eigenvalue, Matrix, Vector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualOptions {
    pub max_iter: usize,
    /// Tolerance on the gradient-mapping residual (see [`kkt_residual`]).
    pub tol: f64,
    /// Attempt an active-set polish every this many iterations.
    pub polish_every: usize,
}

impl Default for DualOptions {
    fn default() -> Self {
        DualOptions {
            max_iter: 10_000,
            tol: 1e-8,
            polish_every: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualVariables {
    pub mu: Vector,
    pub iterations: usize,
    pub residual: f64,
}

/// Dual objective `μᵀ1 − ½ μᵀ S μ` (to be maximized).
pub fn dual_objective(s: &Matrix, mu: &Vector) -> f64 {
    mu.sum() - 0.5 * mu.dot(&(s * mu))
}

fn upper_bounds(sel: &Selector) -> Vec<f64> {
    let c = sel.box_bound();
    sel.targets().iter().map(|&y| if y == 0.0 { 0.0 } else { c }).collect()
}

/// Projects `z` onto `{0 ≤ μ ≤ c, Σ_{i} y_ij μ_ij = 0}`. The constraint
/// blocks of different labels are disjoint, so each label is handled by
/// locating the root of a monotone piecewise-linear function of the
/// balance multiplier.
pub fn project_feasible(z: &Vector, sel: &Selector) -> Vector {
    let upper = upper_bounds(sel);
    let mut out = Vector::zeros(z.len());
    project_into(z, sel, &upper, &mut out);
    out
}

fn project_into(z: &Vector, sel: &Selector, upper: &[f64], out: &mut Vector) {
    let n = sel.n_labels();
    let y = sel.targets();
    let mut idx = Vec::with_capacity(sel.n_labeled());
    let mut breaks = Vec::with_capacity(2 * sel.n_labeled());
    for j in 0..n {
        idx.clear();
        idx.extend((0..sel.n_labeled()).map(|i| i * n + j).filter(|&k| upper[k] > 0.0));
        for k in (0..sel.n_labeled()).map(|i| i * n + j) {
            if upper[k] == 0.0 {
                out[k] = 0.0;
            }
        }
        if idx.is_empty() {
            continue;
        }
        // μ_k(ν) = clip(z_k − ν y_k, 0, c_k); φ(ν) = Σ y_k μ_k(ν) is nonincreasing
        let phi = |nu: f64| -> f64 {
            idx.iter()
                .map(|&k| y[k] * (z[k] - nu * y[k]).clamp(0.0, upper[k]))
                .sum()
        };
        breaks.clear();
        // μ_k leaves 0 at ν = y_k z_k and saturates at ν = y_k (z_k − c_k)
        for &k in &idx {
            breaks.push(y[k] * z[k]);
            breaks.push(y[k] * (z[k] - upper[k]));
        }
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let nu = if phi(breaks[0]) <= 0.0 {
            breaks[0]
        } else if phi(breaks[breaks.len() - 1]) >= 0.0 {
            breaks[breaks.len() - 1]
        } else {
            // φ(breaks[lo]) > 0 ≥ φ(breaks[hi]); φ is linear in between
            let (mut lo, mut hi) = (0, breaks.len() - 1);
            while hi - lo > 1 {
                let mid = (lo + hi) / 2;
                if phi(breaks[mid]) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let (a, b) = (breaks[lo], breaks[hi]);
            let (fa, fb) = (phi(a), phi(b));
            if fa == fb {
                b
            } else {
                (a + fa * (b - a) / (fa - fb)).clamp(a, b)
            }
        };
        for &k in &idx {
            out[k] = (z[k] - nu * y[k]).clamp(0.0, upper[k]);
        }
    }
}

/// `‖μ − P(μ − ∇f(μ))‖_∞` for `f(μ) = ½ μᵀSμ − μᵀ1`; zero exactly at the
/// constrained optimum.
pub fn kkt_residual(s: &Matrix, mu: &Vector, sel: &Selector) -> f64 {
    let grad = s * mu - Vector::from_element(mu.len(), 1.0);
    let stepped = mu - grad;
    (mu - project_feasible(&stepped, sel)).amax()
}

/// Maximizes the dual; deterministic for fixed inputs.
pub fn solve_dual_mu(
    s: &Matrix,
    sel: &Selector,
    warm_start: Option<&Vector>,
    opts: &DualOptions,
) -> Result<DualVariables> {
    let dim = sel.dual_len();
    if s.shape() != (dim, dim) {
        return Err(Error::DimensionMismatch {
            context: "solve_dual_mu",
            expected: dim,
            actual: s.nrows(),
        });
    }
    let upper = upper_bounds(sel);
    let ones = Vector::from_element(dim, 1.0);
    let lipschitz = max_eigenvalue(s).max(1e-12);
    let step = 1.0 / lipschitz;

    let mut mu = match warm_start {
        Some(w) if w.len() == dim => project_feasible(w, sel),
        _ => Vector::zeros(dim),
    };
    let objective = |m: &Vector| 0.5 * m.dot(&(s * m)) - m.sum();

    let mut best_residual = kkt_residual(s, &mu, sel);
    if best_residual <= opts.tol {
        return Ok(DualVariables {
            mu,
            iterations: 0,
            residual: best_residual,
        });
    }
    if let Some(polished) = polish(s, &mu, sel, &upper) {
        let r = kkt_residual(s, &polished, sel);
        if r <= opts.tol {
            return Ok(DualVariables {
                mu: polished,
                iterations: 0,
                residual: r,
            });
        }
    }

    let mut extrapolated = mu.clone();
    let mut momentum = 1.0f64;
    let mut current = objective(&mu);
    let mut next = Vector::zeros(dim);
    for iter in 1..=opts.max_iter {
        let grad = s * &extrapolated - &ones;
        let z = &extrapolated - grad * step;
        project_into(&z, sel, &upper, &mut next);
        let value = objective(&next);
        if value > current {
            // adaptive restart: drop momentum and take a plain step
            momentum = 1.0;
            let grad = s * &mu - &ones;
            let z = &mu - grad * step;
            project_into(&z, sel, &upper, &mut next);
            extrapolated.copy_from(&next);
            mu.copy_from(&next);
            current = objective(&mu);
        } else {
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt());
            let beta = (momentum - 1.0) / t_next;
            extrapolated = &next + (&next - &mu) * beta;
            mu.copy_from(&next);
            momentum = t_next;
            current = value;
        }

        if iter % opts.polish_every == 0 || iter == opts.max_iter {
            let r = kkt_residual(s, &mu, sel);
            best_residual = best_residual.min(r);
            if r <= opts.tol {
                return Ok(DualVariables {
                    mu,
                    iterations: iter,
                    residual: r,
                });
            }
            if let Some(polished) = polish(s, &mu, sel, &upper) {
                let rp = kkt_residual(s, &polished, sel);
                if rp <= opts.tol {
                    return Ok(DualVariables {
                        mu: polished,
                        iterations: iter,
                        residual: rp,
                    });
                }
            }
        }
    }
    Err(Error::NonConvergence {
        solver: "dual QP",
        iterations: opts.max_iter,
        residual: best_residual,
    })
}

/// Guesses the active set from `mu` and solves the equality-constrained
/// QP on the free coordinates. Returns `None` when the guess is infeasible.
fn polish(s: &Matrix, mu: &Vector, sel: &Selector, upper: &[f64]) -> Option<Vector> {
    let n = sel.n_labels();
    let y = sel.targets();
    let dim = mu.len();
    let eps = 1e-9 * sel.box_bound();
    let free: Vec<usize> = (0..dim)
        .filter(|&k| upper[k] > 0.0 && mu[k] > eps && mu[k] < upper[k] - eps)
        .collect();
    let mut fixed = Vector::zeros(dim);
    for k in 0..dim {
        if upper[k] > 0.0 && mu[k] >= upper[k] - eps {
            fixed[k] = upper[k];
        }
    }
    if free.is_empty() {
        return Some(fixed);
    }
    let labels: Vec<usize> = {
        let mut ls: Vec<usize> = free.iter().map(|&k| k % n).collect();
        ls.sort_unstable();
        ls.dedup();
        ls
    };
    let nf = free.len();
    let size = nf + labels.len();
    let mut kkt = Matrix::zeros(size, size);
    let mut rhs = Vector::zeros(size);
    let s_fixed = s * &fixed;
    for (r, &k) in free.iter().enumerate() {
        for (c, &m) in free.iter().enumerate() {
            kkt[(r, c)] = s[(k, m)];
        }
        rhs[r] = 1.0 - s_fixed[k];
        let li = labels.binary_search(&(k % n)).expect("label of a free coordinate");
        kkt[(r, nf + li)] = y[k];
        kkt[(nf + li, r)] = y[k];
    }
    for (li, &j) in labels.iter().enumerate() {
        let fixed_balance: f64 = (0..sel.n_labeled()).map(|i| i * n + j).map(|k| y[k] * fixed[k]).sum();
        rhs[nf + li] = -fixed_balance;
    }
    let svd = SVD::new(kkt, true, true);
    let sol = svd.solve(&rhs, 1e-12).ok()?;
    let mut out = fixed;
    let slack = 1e-12 * sel.box_bound();
    for (r, &k) in free.iter().enumerate() {
        let v = sol[r];
        if !v.is_finite() || v < -slack || v > upper[k] + slack {
            return None;
        }
        out[k] = v.clamp(0.0, upper[k]);
    }
    Some(out)
}
