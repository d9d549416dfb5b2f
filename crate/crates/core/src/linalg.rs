//! Small dense linear-algebra helpers shared across modules.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Replaces `m` with `(m + mᵀ) / 2`.
pub fn symmetrize(m: &mut Matrix) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

pub fn max_asymmetry(m: &Matrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// Smallest eigenvalue of the symmetric part of `m`.
pub fn min_eigenvalue(m: &Matrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let mut s = m.clone();
    symmetrize(&mut s);
    s.symmetric_eigenvalues().min()
}

/// Largest eigenvalue of the symmetric part of `m`.
pub fn max_eigenvalue(m: &Matrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let mut s = m.clone();
    symmetrize(&mut s);
    s.symmetric_eigenvalues().max()
}

/// Solves `a x = b` with partial-pivot LU, rejecting (near-)singular systems.
pub fn solve_general(a: &Matrix, b: &Matrix, context: &'static str) -> Result<Matrix> {
    let lu = a.clone().lu();
    let x = lu.solve(b).ok_or(Error::SingularSystem(context))?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularSystem(context));
    }
    Ok(x)
}

pub fn solve_general_vec(a: &Matrix, b: &Vector, context: &'static str) -> Result<Vector> {
    let lu = a.clone().lu();
    let x = lu.solve(b).ok_or(Error::SingularSystem(context))?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularSystem(context));
    }
    Ok(x)
}

pub fn ensure_square(m: &Matrix, context: &'static str) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch {
            context,
            expected: m.nrows(),
            actual: m.ncols(),
        });
    }
    Ok(())
}

pub fn ensure_finite(m: &Matrix, what: &str) -> Result<()> {
    if let Some(pos) = m.iter().position(|v| !v.is_finite()) {
        let (r, c) = (pos % m.nrows(), pos / m.nrows());
        return Err(Error::InvalidData(format!(
            "{what} has a non-finite entry at ({r}, {c})"
        )));
    }
    Ok(())
}

/// Median of a nonempty slice (mean of the middle pair for even lengths).
pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    Some(if values.len() % 2 == 1 {
        values[mid]
    } else {
        0.5 * (values[mid - 1] + values[mid])
    })
}
