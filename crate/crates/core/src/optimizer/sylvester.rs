//! Least-squares (RLS) coefficients from the Sylvester equation
//!
//! ```text
//! −(1/(lγ_A)) (J G + lγ_I L G) A Q − A + (1/(lγ_A)) Y = 0
//! ```
//!
//! With `Q = U Λ Uᵀ` and `Ã = A U`, column `m` of `Ã` solves
//! `(λ_m B + lγ_A I) ã_m = (Y U)_m` where `B = J G + lγ_I L G`, so the
//! `nN × nN` problem splits into `n` independent `N × N` solves.

use crate::error::{Error, Result};
use crate::linalg::{ensure_square, solve_general_vec, symmetrize, Matrix};

fn left_operator(gram: &Matrix, laplacian: &Matrix, gamma_i: f64, n_labeled: usize) -> Matrix {
    let n = gram.nrows();
    let mut b = laplacian * gram * (n_labeled as f64 * gamma_i);
    for i in 0..n_labeled {
        for j in 0..n {
            b[(i, j)] += gram[(i, j)];
        }
    }
    b
}

fn check(gram: &Matrix, laplacian: &Matrix, q: &Matrix, labels: &Matrix, gamma_a: f64, n_labeled: usize) -> Result<()> {
    ensure_square(gram, "sylvester (G)")?;
    ensure_square(q, "sylvester (Q)")?;
    if laplacian.shape() != gram.shape() {
        return Err(Error::DimensionMismatch {
            context: "sylvester (L)",
            expected: gram.nrows(),
            actual: laplacian.nrows(),
        });
    }
    if labels.shape() != (gram.nrows(), q.nrows()) {
        return Err(Error::DimensionMismatch {
            context: "sylvester (Y)",
            expected: gram.nrows() * q.nrows(),
            actual: labels.nrows() * labels.ncols(),
        });
    }
    if gamma_a.is_nan() || gamma_a <= 0.0 {
        return Err(Error::param("gamma_a", "must be positive"));
    }
    if n_labeled == 0 || n_labeled > gram.nrows() {
        return Err(Error::param("n_labeled", "need 1 <= l <= N"));
    }
    Ok(())
}

/// Returns the `N × n` coefficient matrix `A`; `a = vec(Aᵀ)` is its
/// row-major flattening.
pub fn solve_vvlrls_sylvester(
    gram: &Matrix,
    laplacian: &Matrix,
    q: &Matrix,
    labels: &Matrix,
    gamma_a: f64,
    gamma_i: f64,
    n_labeled: usize,
) -> Result<Matrix> {
    check(gram, laplacian, q, labels, gamma_a, n_labeled)?;
    let n = gram.nrows();
    let b = left_operator(gram, laplacian, gamma_i, n_labeled);
    let mut q_sym = q.clone();
    symmetrize(&mut q_sym);
    let eig = q_sym.symmetric_eigen();
    let rotated_rhs = labels * &eig.eigenvectors;
    let shift = n_labeled as f64 * gamma_a;
    let mut rotated = Matrix::zeros(n, q.nrows());
    for (m, &lambda) in eig.eigenvalues.iter().enumerate() {
        let mut system = &b * lambda;
        for i in 0..n {
            system[(i, i)] += shift;
        }
        let col = solve_general_vec(&system, &rotated_rhs.column(m).into_owned(), "Sylvester equation")?;
        rotated.set_column(m, &col);
    }
    Ok(rotated * eig.eigenvectors.transpose())
}

/// The left-hand side of the Sylvester equation evaluated at `A`.
#[allow(clippy::too_many_arguments)]
pub fn sylvester_residual(
    gram: &Matrix,
    laplacian: &Matrix,
    q: &Matrix,
    labels: &Matrix,
    coefficients: &Matrix,
    gamma_a: f64,
    gamma_i: f64,
    n_labeled: usize,
) -> Matrix {
    let scale = 1.0 / (n_labeled as f64 * gamma_a);
    let b = left_operator(gram, laplacian, gamma_i, n_labeled);
    -(b * coefficients * q) * scale - coefficients + labels * scale
}
