//! Inner solvers of the alternating optimization.
//!
//! All vector-valued quantities are stacked sample-major with the `l`
//! labeled samples first, so the selector `J` keeps the leading `n·l`
//! coordinates of an `n·N` vector.

mod dual;
mod sylvester;
mod weights;

pub use dual::{dual_objective, kkt_residual, project_feasible, solve_dual_mu, DualOptions, DualVariables};
pub use sylvester::{solve_vvlrls_sylvester, sylvester_residual};
pub use weights::{
    beta_objective, beta_pair_trace, theta_objective, theta_pair_trace, update_beta, update_theta, SWEEP_CAP,
    SWEEP_TOL,
};

use nalgebra::LU;

use crate::error::{Error, Result};
use crate::linalg::{ensure_square, median, symmetrize, Matrix, Vector};

/// Loss used in the data-fit term.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Loss {
    Hinge,
    LeastSquares,
}

impl std::fmt::Display for Loss {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Loss::Hinge => "hinge",
            Loss::LeastSquares => "least_squares",
        })
    }
}

impl std::str::FromStr for Loss {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hinge" => Ok(Loss::Hinge),
            "least_squares" | "ls" | "leastsquares" => Ok(Loss::LeastSquares),
            other => Err(Error::param("loss", format!("unknown loss `{other}` (expected hinge or least_squares)"))),
        }
    }
}

/// The block selector `J = [I 0]` and the diagonal `Y_d` of labeled targets.
#[derive(Debug, Clone, PartialEq)]
pub struct Selector {
    n_labels: usize,
    n_labeled: usize,
    n_samples: usize,
    /// `diag(Y_d)`: `y_ij` at index `i·n + j`; zero marks a missing entry.
    targets: Vec<f64>,
}

impl Selector {
    /// Builds the selector from an `N × n` label matrix whose first
    /// `n_labeled` rows are the labeled samples.
    pub fn new(labels: &Matrix, n_labeled: usize) -> Result<Self> {
        let (n_samples, n_labels) = labels.shape();
        if n_labeled == 0 || n_labeled > n_samples {
            return Err(Error::param(
                "n_labeled",
                format!("need 1 <= l <= N (l = {n_labeled}, N = {n_samples})"),
            ));
        }
        if n_labels == 0 {
            return Err(Error::InvalidData("label matrix has no columns".into()));
        }
        let mut targets = Vec::with_capacity(n_labeled * n_labels);
        for i in 0..n_labeled {
            for j in 0..n_labels {
                let y = labels[(i, j)];
                if y != 1.0 && y != -1.0 && y != 0.0 {
                    return Err(Error::InvalidData(format!(
                        "label ({i}, {j}) must be +1, -1 or 0, got {y}"
                    )));
                }
                targets.push(y);
            }
        }
        Ok(Selector {
            n_labels,
            n_labeled,
            n_samples,
            targets,
        })
    }

    pub fn n_labels(&self) -> usize {
        self.n_labels
    }

    pub fn n_labeled(&self) -> usize {
        self.n_labeled
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    /// `n·l`, the number of dual variables.
    pub fn dual_len(&self) -> usize {
        self.n_labels * self.n_labeled
    }

    /// `n·N`, the length of the coefficient vector.
    pub fn primal_len(&self) -> usize {
        self.n_labels * self.n_samples
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    /// Upper bound `1/(nl)` of the dual box.
    pub fn box_bound(&self) -> f64 {
        1.0 / self.dual_len() as f64
    }

    /// `Jᵀ Y_d μ`.
    pub fn lift(&self, mu: &Vector) -> Vector {
        let mut out = Vector::zeros(self.primal_len());
        for (k, (&y, &m)) in self.targets.iter().zip(mu.iter()).enumerate() {
            out[k] = y * m;
        }
        out
    }

    /// `Jᵀ Y_d` as a dense `nN × nl` matrix.
    pub fn lift_matrix(&self) -> Matrix {
        let mut out = Matrix::zeros(self.primal_len(), self.dual_len());
        for (k, &y) in self.targets.iter().enumerate() {
            out[(k, k)] = y;
        }
        out
    }
}

/// `2γ_A I + 2γ_I M G`, factored once and shared by `S` and `a`.
pub struct ReducedSystem {
    lu: LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    gram: Matrix,
}

impl ReducedSystem {
    pub fn new(gram: &Matrix, laplacian: &Matrix, gamma_a: f64, gamma_i: f64) -> Result<Self> {
        ensure_square(gram, "reduced system (G)")?;
        ensure_square(laplacian, "reduced system (M)")?;
        if gram.shape() != laplacian.shape() {
            return Err(Error::DimensionMismatch {
                context: "reduced system",
                expected: gram.nrows(),
                actual: laplacian.nrows(),
            });
        }
        if gamma_a.is_nan() || gamma_a <= 0.0 {
            return Err(Error::param("gamma_a", "must be positive"));
        }
        if gamma_i.is_nan() || gamma_i < 0.0 {
            return Err(Error::param("gamma_i", "must be nonnegative"));
        }
        let dim = gram.nrows();
        let mut system = laplacian * gram * (2.0 * gamma_i);
        for k in 0..dim {
            system[(k, k)] += 2.0 * gamma_a;
        }
        let lu = system.lu();
        if !lu.is_invertible() {
            return Err(Error::SingularSystem("2γ_A I + 2γ_I M G"));
        }
        Ok(ReducedSystem {
            lu,
            gram: gram.clone(),
        })
    }

    /// `S = Y_d J G (2γ_A I + 2γ_I M G)^{-1} Jᵀ Y_d`, symmetrized.
    pub fn dual_hessian(&self, sel: &Selector) -> Result<Matrix> {
        self.check(sel)?;
        let x = self
            .lu
            .solve(&sel.lift_matrix())
            .ok_or(Error::SingularSystem("build_S"))?;
        let nl = sel.dual_len();
        let gx = self.gram.rows(0, nl) * x;
        let y = sel.targets();
        let mut s = Matrix::from_fn(nl, nl, |r, c| y[r] * gx[(r, c)]);
        symmetrize(&mut s);
        if s.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularSystem("build_S"));
        }
        Ok(s)
    }

    /// `a = (2γ_A I + 2γ_I M G)^{-1} Jᵀ Y_d μ`.
    pub fn coefficients(&self, mu: &Vector, sel: &Selector) -> Result<Vector> {
        self.check(sel)?;
        if mu.len() != sel.dual_len() {
            return Err(Error::DimensionMismatch {
                context: "solve_a (mu)",
                expected: sel.dual_len(),
                actual: mu.len(),
            });
        }
        let a = self
            .lu
            .solve(&sel.lift(mu))
            .ok_or(Error::SingularSystem("solve_a"))?;
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularSystem("solve_a"));
        }
        Ok(a)
    }

    fn check(&self, sel: &Selector) -> Result<()> {
        if self.gram.nrows() != sel.primal_len() {
            return Err(Error::DimensionMismatch {
                context: "selector vs Gram matrix",
                expected: self.gram.nrows(),
                actual: sel.primal_len(),
            });
        }
        Ok(())
    }
}

pub fn build_s(gram: &Matrix, laplacian: &Matrix, gamma_a: f64, gamma_i: f64, sel: &Selector) -> Result<Matrix> {
    ReducedSystem::new(gram, laplacian, gamma_a, gamma_i)?.dual_hessian(sel)
}

pub fn solve_a(
    gram: &Matrix,
    laplacian: &Matrix,
    mu: &Vector,
    gamma_a: f64,
    gamma_i: f64,
    sel: &Selector,
) -> Result<Vector> {
    ReducedSystem::new(gram, laplacian, gamma_a, gamma_i)?.coefficients(mu, sel)
}

/// Per-label bias: median of `y_ij − f_j(x_i)` over in-box support vectors,
/// falling back to all labeled entries of that label, or 0 when there are
/// none. `scores` is the stacked `f = G a` (at least the first `nl` entries).
pub fn compute_bias(scores: &Vector, mu: &Vector, sel: &Selector) -> Vec<f64> {
    let n = sel.n_labels();
    let upper = sel.box_bound() - 1e-10;
    let y = sel.targets();
    (0..n)
        .map(|j| {
            let mut in_box = Vec::new();
            let mut all = Vec::new();
            for i in 0..sel.n_labeled() {
                let k = i * n + j;
                if y[k] == 0.0 {
                    continue;
                }
                let residual = y[k] - scores[k];
                all.push(residual);
                if mu[k] > 1e-10 && mu[k] < upper {
                    in_box.push(residual);
                }
            }
            median(&mut in_box)
                .or_else(|| median(&mut all))
                .unwrap_or(0.0)
        })
        .collect()
}

/// Coefficients of the β- and θ-subproblems for fixed `(a, μ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubproblemData {
    /// `H_ij = γ_I aᵀ G_i M G_j a`.
    pub h_matrix: Matrix,
    /// `h_v = aᵀ G_v Jᵀ Y_d μ − γ_A aᵀ G_v a`.
    pub h: Vec<f64>,
    /// `s_v = γ_I aᵀ G M_v G a`.
    pub s: Vec<f64>,
}

/// Builds `H`, `h` and `s`. `dual_term` is `Jᵀ Y_d μ` for the hinge loss
/// (or its least-squares analogue).
#[allow(clippy::too_many_arguments)]
pub fn compute_subproblem_data(
    a: &Vector,
    dual_term: &Vector,
    grams: &[Matrix],
    gram: &Matrix,
    laplacians: &[Matrix],
    laplacian: &Matrix,
    gamma_a: f64,
    gamma_i: f64,
) -> Result<SubproblemData> {
    let dim = a.len();
    let shapes_ok = grams.iter().chain(laplacians).chain([gram, laplacian]).all(|m| m.shape() == (dim, dim))
        && dual_term.len() == dim;
    if !shapes_ok || grams.len() != laplacians.len() || grams.is_empty() {
        return Err(Error::DimensionMismatch {
            context: "compute_subproblem_data",
            expected: dim,
            actual: grams.first().map(|g| g.nrows()).unwrap_or(0),
        });
    }
    let views = grams.len();
    let projected: Vec<Vector> = grams.iter().map(|g| g * a).collect();
    let smoothed: Vec<Vector> = projected.iter().map(|z| laplacian * z).collect();
    let mut h_matrix = Matrix::from_fn(views, views, |i, j| gamma_i * projected[i].dot(&smoothed[j]));
    symmetrize(&mut h_matrix);
    let h = projected
        .iter()
        .map(|z| z.dot(dual_term) - gamma_a * a.dot(z))
        .collect();
    let fitted = gram * a;
    let s = laplacians
        .iter()
        .map(|m| gamma_i * fitted.dot(&(m * &fitted)))
        .collect();
    Ok(SubproblemData { h_matrix, h, s })
}

/// Regularization weights and loss of the primal objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveWeights {
    pub gamma_a: f64,
    pub gamma_i: f64,
    pub gamma_b: f64,
    pub gamma_c: f64,
    pub loss: Loss,
}

/// Primal objective. Hinge: `(1/nl) Σ ξ_ij` with
/// `ξ_ij = max(0, 1 − y_ij (f_j(x_i) + b_j))`; least squares:
/// `(1/l) Σ (f_j(x_i) − y_ij)²`. Both add `γ_A aᵀGa + γ_I aᵀGMGa +
/// γ_B‖β‖² + γ_C‖θ‖²`.
#[allow(clippy::too_many_arguments)]
pub fn objective_value(
    a: &Vector,
    bias: &[f64],
    beta: &[f64],
    theta: &[f64],
    gram: &Matrix,
    laplacian: &Matrix,
    sel: &Selector,
    w: &ObjectiveWeights,
) -> f64 {
    let fitted = gram * a;
    let n = sel.n_labels();
    let y = sel.targets();
    let data = match w.loss {
        Loss::Hinge => {
            let total: f64 = y
                .iter()
                .enumerate()
                .filter(|(_, &t)| t != 0.0)
                .map(|(k, &t)| (1.0 - t * (fitted[k] + bias[k % n])).max(0.0))
                .sum();
            total / sel.dual_len() as f64
        }
        Loss::LeastSquares => {
            let total: f64 = y
                .iter()
                .enumerate()
                .filter(|(_, &t)| t != 0.0)
                .map(|(k, &t)| {
                    let r = fitted[k] + bias[k % n] - t;
                    r * r
                })
                .sum();
            total / sel.n_labeled() as f64
        }
    };
    let norm_sq = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>();
    data + w.gamma_a * a.dot(&fitted)
        + w.gamma_i * fitted.dot(&(laplacian * &fitted))
        + w.gamma_b * norm_sq(beta)
        + w.gamma_c * norm_sq(theta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn col(values: &[f64]) -> Matrix {
        Matrix::from_column_slice(values.len(), 1, values)
    }

    #[test]
    fn s_collapses_without_manifold_term() {
        let sel = Selector::new(&col(&[1.0]), 1).unwrap();
        let s = build_s(&Matrix::identity(1, 1), &Matrix::zeros(1, 1), 0.25, 0.0, &sel).unwrap();
        assert_abs_diff_eq!(s[(0, 0)], 2.0, epsilon = 1e-15);

        let labels = Matrix::from_row_slice(3, 2, &[1.0, -1.0, -1.0, 1.0, 0.0, 0.0]);
        let sel = Selector::new(&labels, 2).unwrap();
        let s = build_s(&Matrix::identity(6, 6), &Matrix::zeros(6, 6), 0.5, 0.3, &sel).unwrap();
        assert!((s - Matrix::identity(4, 4)).abs().max() < 1e-15);
    }

    #[test]
    fn a_examples() {
        let sel = Selector::new(&col(&[1.0]), 1).unwrap();
        let mu = Vector::from_vec(vec![0.5]);
        let a = solve_a(&Matrix::identity(1, 1), &Matrix::zeros(1, 1), &mu, 0.25, 0.0, &sel).unwrap();
        assert_abs_diff_eq!(a[0], 1.0, epsilon = 1e-15);
        let a = solve_a(&Matrix::identity(1, 1), &Matrix::zeros(1, 1), &Vector::zeros(1), 0.25, 0.0, &sel).unwrap();
        assert_eq!(a[0], 0.0);
    }

    #[test]
    fn reduced_system_rejects_bad_gamma() {
        let g = Matrix::identity(2, 2);
        assert!(ReducedSystem::new(&g, &g, 0.0, 1.0).is_err());
        assert!(ReducedSystem::new(&g, &g, 1.0, -1.0).is_err());
    }

    #[test]
    fn selector_rejects_bad_labels() {
        assert!(Selector::new(&col(&[0.5]), 1).is_err());
        assert!(Selector::new(&col(&[1.0]), 2).is_err());
        assert!(Selector::new(&col(&[1.0]), 0).is_err());
    }

    #[test]
    fn bias_examples() {
        // three labeled samples, one label, box bound 1/3
        let sel = Selector::new(&col(&[1.0, -1.0, 1.0]), 3).unwrap();
        let scores = Vector::from_vec(vec![0.7, -1.3, 0.7]);
        let mu = Vector::from_vec(vec![0.1, 0.2, 0.1]);
        assert_abs_diff_eq!(compute_bias(&scores, &mu, &sel)[0], 0.3, epsilon = 1e-15);

        // no in-box support vectors: falls back to the median of {-1, 0, 1}
        let scores = Vector::from_vec(vec![2.0, -1.0, 0.0]);
        let mu = Vector::from_vec(vec![0.0, 1.0 / 3.0, 0.0]);
        assert_eq!(compute_bias(&scores, &mu, &sel)[0], 0.0);

        // a label with no labeled entries
        let labels = Matrix::from_row_slice(1, 2, &[1.0, 0.0]);
        let sel = Selector::new(&labels, 1).unwrap();
        let b = compute_bias(&Vector::zeros(2), &Vector::zeros(2), &sel);
        assert_eq!(b[1], 0.0);
    }

    #[test]
    fn subproblem_data_vanishes_at_zero() {
        let g = Matrix::identity(2, 2);
        let d = compute_subproblem_data(
            &Vector::zeros(2),
            &Vector::zeros(2),
            &[g.clone(), g.clone()],
            &g,
            &[g.clone(), g.clone()],
            &g,
            0.1,
            0.1,
        )
        .unwrap();
        assert_eq!(d.h_matrix, Matrix::zeros(2, 2));
        assert_eq!(d.h, vec![0.0, 0.0]);
        assert_eq!(d.s, vec![0.0, 0.0]);
    }

    #[test]
    fn subproblem_data_identical_views_are_symmetric() {
        let g = Matrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let m = Matrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]);
        let a = Vector::from_vec(vec![0.3, -0.7]);
        let dual = Vector::from_vec(vec![0.1, -0.2]);
        let d = compute_subproblem_data(&a, &dual, &[g.clone(), g.clone()], &g, &[m.clone(), m.clone()], &m, 0.1, 0.2)
            .unwrap();
        let h00 = d.h_matrix[(0, 0)];
        assert!(d.h_matrix.iter().all(|&v| v == h00));
        assert_eq!(d.h[0], d.h[1]);
        assert_eq!(d.s[0], d.s[1]);
    }

    #[test]
    fn objective_at_zero_is_hinge_plus_weight_penalties() {
        let labels = Matrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]);
        let sel = Selector::new(&labels, 2).unwrap();
        let w = ObjectiveWeights {
            gamma_a: 0.1,
            gamma_i: 0.1,
            gamma_b: 0.4,
            gamma_c: 0.2,
            loss: Loss::Hinge,
        };
        let g = Matrix::identity(4, 4);
        let value = objective_value(&Vector::zeros(4), &[0.0, 0.0], &[0.5, 0.5], &[0.5, 0.5], &g, &g, &sel, &w);
        assert_abs_diff_eq!(value, 1.0 + 0.5 * (0.4 + 0.2), epsilon = 1e-15);
    }

    #[test]
    fn objective_hinge_vanishes_on_separated_toy() {
        let sel = Selector::new(&col(&[1.0, -1.0]), 2).unwrap();
        let w = ObjectiveWeights {
            gamma_a: 0.0,
            gamma_i: 0.0,
            gamma_b: 0.0,
            gamma_c: 0.0,
            loss: Loss::Hinge,
        };
        let g = Matrix::identity(2, 2);
        let a = Vector::from_vec(vec![1.5, -2.0]);
        let value = objective_value(&a, &[0.0], &[1.0], &[1.0], &g, &Matrix::zeros(2, 2), &sel, &w);
        assert_eq!(value, 0.0);
    }
}
