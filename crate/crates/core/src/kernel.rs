//! Per-view scalar kernels: distances, exponential and linear kernels,
//! unit-trace normalization and convex kernel combination.
//!
//! Training Gram matrices are normalized to unit trace and then ridged with
//! `ridge_scale · trace / N` on the diagonal. The bandwidth `λ` and the trace
//! scale are frozen on the training block so out-of-sample rows are
//! evaluated on the same scale.

use std::fmt;
use std::str::FromStr;

use log::warn;

use crate::error::{Error, Result};
use crate::linalg::{ensure_finite, ensure_square, Matrix};
use crate::simplex;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistanceMetric {
    L1,
    L2,
    ChiSquared,
    /// Not a distance: selects the linear kernel `xᵢᵀxⱼ`.
    PrecomputedLinear,
}

impl fmt::Display for DistanceMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DistanceMetric::L1 => "l1",
            DistanceMetric::L2 => "l2",
            DistanceMetric::ChiSquared => "chi2",
            DistanceMetric::PrecomputedLinear => "linear",
        })
    }
}

impl FromStr for DistanceMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l1" => Ok(DistanceMetric::L1),
            "l2" => Ok(DistanceMetric::L2),
            "chi2" | "chisquared" | "chi_squared" => Ok(DistanceMetric::ChiSquared),
            "linear" | "precomputed_linear" => Ok(DistanceMetric::PrecomputedLinear),
            other => Err(Error::param("metric", format!("unknown metric `{other}`"))),
        }
    }
}

fn check_features(a: &Matrix, what: &str) -> Result<()> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Err(Error::InvalidData(format!("{what} must have at least one row and column")));
    }
    ensure_finite(a, what)
}

fn check_nonnegative(a: &Matrix) -> Result<()> {
    for r in 0..a.nrows() {
        for c in 0..a.ncols() {
            let value = a[(r, c)];
            if value < 0.0 {
                return Err(Error::NegativeChiSquaredInput { row: r, col: c, value });
            }
        }
    }
    Ok(())
}

fn row_distance(a: &Matrix, i: usize, b: &Matrix, j: usize, metric: DistanceMetric) -> f64 {
    let d = a.ncols();
    match metric {
        DistanceMetric::L1 => (0..d).map(|k| (a[(i, k)] - b[(j, k)]).abs()).sum(),
        DistanceMetric::L2 => (0..d)
            .map(|k| {
                let diff = a[(i, k)] - b[(j, k)];
                diff * diff
            })
            .sum::<f64>()
            .sqrt(),
        DistanceMetric::ChiSquared => (0..d)
            .map(|k| {
                let (x, y) = (a[(i, k)], b[(j, k)]);
                let denom = x + y;
                if denom > 0.0 {
                    (x - y) * (x - y) / denom
                } else {
                    0.0
                }
            })
            .sum(),
        DistanceMetric::PrecomputedLinear => unreachable!("checked by caller"),
    }
}

/// Distance between every row of `a` and every row of `b`.
pub fn pairwise_distance(a: &Matrix, b: &Matrix, metric: DistanceMetric) -> Result<Matrix> {
    check_features(a, "feature matrix A")?;
    check_features(b, "feature matrix B")?;
    if a.ncols() != b.ncols() {
        return Err(Error::DimensionMismatch {
            context: "pairwise_distance",
            expected: a.ncols(),
            actual: b.ncols(),
        });
    }
    if metric == DistanceMetric::PrecomputedLinear {
        return Err(Error::param("metric", "the linear kernel has no distance"));
    }
    if metric == DistanceMetric::ChiSquared {
        check_nonnegative(a)?;
        check_nonnegative(b)?;
    }
    Ok(Matrix::from_fn(a.nrows(), b.nrows(), |i, j| {
        row_distance(a, i, b, j, metric)
    }))
}

/// Result of [`exp_kernel`]: the kernel block and the bandwidth used.
#[derive(Debug, Clone)]
pub struct ExpKernel {
    pub gram: Matrix,
    pub lambda: f64,
    /// Set when every distance is zero; the kernel is then all ones.
    pub degenerate: bool,
}

/// `k = exp(-D / λ)` with `λ = max D`.
pub fn exp_kernel(distances: &Matrix) -> Result<ExpKernel> {
    ensure_square(distances, "exp_kernel")?;
    ensure_finite(distances, "distance matrix")?;
    if distances.iter().any(|&d| d < 0.0) {
        return Err(Error::InvalidData("distances must be nonnegative".into()));
    }
    let lambda = distances.iter().copied().fold(0.0, f64::max);
    if lambda == 0.0 {
        if distances.nrows() > 1 {
            warn!("all pairwise distances are zero; using an all-ones kernel");
        }
        return Ok(ExpKernel {
            gram: Matrix::from_element(distances.nrows(), distances.ncols(), 1.0),
            lambda,
            degenerate: true,
        });
    }
    Ok(ExpKernel {
        gram: exp_kernel_with_bandwidth(distances, lambda),
        lambda,
        degenerate: false,
    })
}

/// Applies `exp(-D / λ)` with a frozen bandwidth; `λ = 0` yields ones.
pub fn exp_kernel_with_bandwidth(distances: &Matrix, lambda: f64) -> Matrix {
    if lambda == 0.0 {
        return Matrix::from_element(distances.nrows(), distances.ncols(), 1.0);
    }
    distances.map(|d| (-d / lambda).exp())
}

pub fn linear_kernel(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    check_features(a, "feature matrix A")?;
    check_features(b, "feature matrix B")?;
    if a.ncols() != b.ncols() {
        return Err(Error::DimensionMismatch {
            context: "linear_kernel",
            expected: a.ncols(),
            actual: b.ncols(),
        });
    }
    Ok(a * b.transpose())
}

pub fn unit_trace_normalize(g: &Matrix) -> Result<Matrix> {
    ensure_square(g, "unit_trace_normalize")?;
    let trace = g.trace();
    if trace.is_nan() || trace <= 0.0 {
        return Err(Error::NonPositiveTrace(trace));
    }
    Ok(g / trace)
}

/// Adds `ridge_scale · trace(G) / N` to the diagonal.
pub fn add_ridge(g: &mut Matrix, ridge_scale: f64) {
    let n = g.nrows();
    if n == 0 {
        return;
    }
    let ridge = ridge_scale * g.trace() / n as f64;
    for i in 0..n {
        g[(i, i)] += ridge;
    }
}

/// Convex combination `Σ_v β_v G_v`.
pub fn combine_kernels(grams: &[Matrix], beta: &[f64]) -> Result<Matrix> {
    combine_weighted(grams, beta, "beta", "combine_kernels")
}

pub(crate) fn combine_weighted(
    mats: &[Matrix],
    weights: &[f64],
    what: &'static str,
    context: &'static str,
) -> Result<Matrix> {
    if mats.is_empty() || mats.len() != weights.len() {
        return Err(Error::DimensionMismatch {
            context,
            expected: mats.len(),
            actual: weights.len(),
        });
    }
    simplex::check(weights, what)?;
    let shape = mats[0].shape();
    let mut out = Matrix::zeros(shape.0, shape.1);
    for (m, &w) in mats.iter().zip(weights) {
        if m.shape() != shape {
            return Err(Error::DimensionMismatch {
                context,
                expected: shape.0,
                actual: m.nrows(),
            });
        }
        out += m * w;
    }
    Ok(out)
}

/// How a view's scalar kernel is computed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelKind {
    /// `exp(-d/λ)` over the given distance, or the linear kernel for
    /// [`DistanceMetric::PrecomputedLinear`].
    Features(DistanceMetric),
    /// A user-supplied Gram matrix over all samples.
    Precomputed,
}

/// Frozen per-view kernel parameters needed to evaluate out-of-sample rows.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewKernel {
    pub kind: KernelKind,
    /// Exponential-kernel bandwidth (0 for linear and precomputed kernels).
    pub lambda: f64,
    /// Trace of the raw training block; all blocks are divided by it.
    pub trace: f64,
    /// Value added to the diagonal of the normalized training block.
    pub ridge: f64,
}

impl ViewKernel {
    /// Builds the normalized, ridged training Gram matrix from features.
    pub fn fit_features(
        features: &Matrix,
        metric: DistanceMetric,
        ridge_scale: f64,
    ) -> Result<(Self, Matrix)> {
        let (raw, lambda) = match metric {
            DistanceMetric::PrecomputedLinear => (linear_kernel(features, features)?, 0.0),
            m => {
                let d = pairwise_distance(features, features, m)?;
                let k = exp_kernel(&d)?;
                (k.gram, k.lambda)
            }
        };
        Self::finish(KernelKind::Features(metric), raw, lambda, ridge_scale)
    }

    /// Normalizes a precomputed training block.
    pub fn fit_precomputed(train_block: &Matrix, ridge_scale: f64) -> Result<(Self, Matrix)> {
        ensure_finite(train_block, "precomputed Gram matrix")?;
        Self::finish(KernelKind::Precomputed, train_block.clone(), 0.0, ridge_scale)
    }

    fn finish(kind: KernelKind, raw: Matrix, lambda: f64, ridge_scale: f64) -> Result<(Self, Matrix)> {
        let trace = raw.trace();
        let mut gram = unit_trace_normalize(&raw)?;
        let n = gram.nrows() as f64;
        let ridge = ridge_scale * gram.trace() / n;
        for i in 0..gram.nrows() {
            gram[(i, i)] += ridge;
        }
        Ok((
            ViewKernel {
                kind,
                lambda,
                trace,
                ridge,
            },
            gram,
        ))
    }

    /// Kernel block between query rows and the training rows, on the
    /// training scale and without the ridge.
    pub fn cross_features(&self, queries: &Matrix, train: &Matrix) -> Result<Matrix> {
        let raw = match self.kind {
            KernelKind::Features(DistanceMetric::PrecomputedLinear) => linear_kernel(queries, train)?,
            KernelKind::Features(m) => {
                let d = pairwise_distance(queries, train, m)?;
                exp_kernel_with_bandwidth(&d, self.lambda)
            }
            KernelKind::Precomputed => {
                return Err(Error::InvalidData(
                    "precomputed views need a Gram block, not features".into(),
                ))
            }
        };
        Ok(raw / self.trace)
    }

    /// Scales a raw precomputed query-vs-train block.
    pub fn cross_precomputed(&self, block: &Matrix) -> Result<Matrix> {
        ensure_finite(block, "precomputed Gram block")?;
        Ok(block / self.trace)
    }
}
