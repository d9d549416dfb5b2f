//! k-NN graphs, scalar and output-label Laplacians, and the Kronecker
//! expansions that lift scalar operators to vector-valued ones.
//!
//! Vector-valued quantities are stacked sample-major: entry `(i, m)` of an
//! `N × n` coefficient matrix lives at index `i·n + m`, which is the ordering
//! produced by `base ⊗ multiplier` with `base` indexed by samples.

use crate::error::{Error, Result};
use crate::kernel::combine_weighted;
use crate::linalg::{ensure_square, symmetrize, Matrix};

/// Relative cutoff below which eigenvalues are treated as zero in the
/// pseudo-inverse.
pub const PINV_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct AdjacencyGraph {
    pub weights: Matrix,
    pub k: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphLaplacian {
    pub matrix: Matrix,
    pub normalized: bool,
}

/// The output-coupling factor `Q = γ_O L_out⁺ + (1 − γ_O) I`.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputStructure {
    pub pinv: Matrix,
    pub q: Matrix,
    pub gamma_o: f64,
}

/// Indices of the `k` most similar other vertices, ties broken by index.
fn nearest(similarity: &Matrix, i: usize, k: usize) -> Vec<usize> {
    let mut others: Vec<usize> = (0..similarity.ncols()).filter(|&j| j != i).collect();
    others.sort_by(|&a, &b| {
        similarity[(i, b)]
            .total_cmp(&similarity[(i, a)])
            .then(a.cmp(&b))
    });
    others.truncate(k);
    others
}

/// Symmetric k-NN graph: an edge exists when either endpoint is among the
/// other's `k` nearest neighbours, weighted by the (nonnegative) similarity.
pub fn knn_adjacency(similarity: &Matrix, k: usize) -> Result<AdjacencyGraph> {
    ensure_square(similarity, "knn_adjacency")?;
    let n = similarity.nrows();
    if k == 0 || k >= n {
        return Err(Error::param(
            "k",
            format!("neighbour count must satisfy 1 <= k < N (k = {k}, N = {n})"),
        ));
    }
    let mut linked = vec![false; n * n];
    for i in 0..n {
        for j in nearest(similarity, i, k) {
            linked[i * n + j] = true;
            linked[j * n + i] = true;
        }
    }
    let weights = Matrix::from_fn(n, n, |i, j| {
        if linked[i * n + j] {
            0.5 * (similarity[(i, j)] + similarity[(j, i)]).max(0.0)
        } else {
            0.0
        }
    });
    Ok(AdjacencyGraph { weights, k })
}

/// `L = D − W`, or `I − D^{-1/2} W D^{-1/2}` when normalized. Isolated
/// vertices get an identity row (normalized) or a zero row (unnormalized).
pub fn scalar_laplacian(graph: &AdjacencyGraph, normalized: bool) -> GraphLaplacian {
    laplacian_from_weights(&graph.weights, normalized)
}

pub fn laplacian_from_weights(w: &Matrix, normalized: bool) -> GraphLaplacian {
    let n = w.nrows();
    let degree: Vec<f64> = (0..n).map(|i| w.row(i).sum()).collect();
    let matrix = if normalized {
        let inv_sqrt: Vec<f64> = degree
            .iter()
            .map(|&d| if d > 0.0 { 1.0 / d.sqrt() } else { 0.0 })
            .collect();
        Matrix::from_fn(n, n, |i, j| {
            let off = w[(i, j)] * inv_sqrt[i] * inv_sqrt[j];
            if i == j {
                1.0 - off
            } else {
                -off
            }
        })
    } else {
        Matrix::from_fn(n, n, |i, j| if i == j { degree[i] - w[(i, j)] } else { -w[(i, j)] })
    };
    GraphLaplacian { matrix, normalized }
}

/// Convex combination `Σ_v θ_v L_v`.
pub fn combine_laplacians(laplacians: &[GraphLaplacian], theta: &[f64]) -> Result<GraphLaplacian> {
    let normalized = laplacians.first().map(|l| l.normalized).unwrap_or(false);
    if laplacians.iter().any(|l| l.normalized != normalized) {
        return Err(Error::InvalidData(
            "cannot mix normalized and unnormalized Laplacians".into(),
        ));
    }
    let mats: Vec<Matrix> = laplacians.iter().map(|l| l.matrix.clone()).collect();
    let matrix = combine_weighted(&mats, theta, "theta", "combine_laplacians")?;
    Ok(GraphLaplacian { matrix, normalized })
}

/// Adjacency `Σ_v θ_v W_v` whose unnormalized Laplacian equals the
/// θ-combination of the per-view Laplacians.
pub fn combine_adjacency(graphs: &[AdjacencyGraph], theta: &[f64]) -> Result<Matrix> {
    let mats: Vec<Matrix> = graphs.iter().map(|g| g.weights.clone()).collect();
    combine_weighted(&mats, theta, "theta", "combine_adjacency")
}

/// Cosine similarity between label columns over rows with any nonzero
/// entry, clipped at zero. The diagonal is left at zero.
pub fn label_similarity(labels: &Matrix) -> Matrix {
    let n = labels.ncols();
    let rows: Vec<usize> = (0..labels.nrows())
        .filter(|&i| labels.row(i).iter().any(|&y| y != 0.0))
        .collect();
    let col = |j: usize| rows.iter().map(move |&i| labels[(i, j)]);
    let norms: Vec<f64> = (0..n).map(|j| col(j).map(|y| y * y).sum::<f64>().sqrt()).collect();
    Matrix::from_fn(n, n, |a, b| {
        if a == b || norms[a] == 0.0 || norms[b] == 0.0 {
            return 0.0;
        }
        let dot: f64 = col(a).zip(col(b)).map(|(x, y)| x * y).sum();
        (dot / (norms[a] * norms[b])).max(0.0)
    })
}

/// Moore–Penrose pseudo-inverse of a symmetric matrix via its
/// eigendecomposition; eigenvalues with `|λ| ≤ tol · max|λ|` are dropped.
pub fn symmetric_pinv(m: &Matrix, tol: f64) -> Result<Matrix> {
    ensure_square(m, "symmetric_pinv")?;
    let n = m.nrows();
    let mut s = m.clone();
    symmetrize(&mut s);
    let eig = s.symmetric_eigen();
    let largest = eig.eigenvalues.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let mut out = Matrix::zeros(n, n);
    if largest == 0.0 {
        return Ok(out);
    }
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda.abs() > tol * largest {
            let v = eig.eigenvectors.column(k);
            out += (v * v.transpose()) / lambda;
        }
    }
    symmetrize(&mut out);
    Ok(out)
}

/// Builds the label graph over the columns of `labels` and returns the
/// pseudo-inverse of its Laplacian.
pub fn output_laplacian_pinv(labels: &Matrix, k_out: usize, normalized: bool) -> Result<Matrix> {
    let n = labels.ncols();
    if !(0..labels.nrows()).any(|i| labels.row(i).iter().any(|&y| y != 0.0)) {
        return Err(Error::InvalidData("label matrix has no labeled rows".into()));
    }
    if k_out == 0 || k_out >= n {
        return Err(Error::param(
            "k_out",
            format!("output neighbour count must satisfy 1 <= k_out < n (k_out = {k_out}, n = {n})"),
        ));
    }
    let graph = knn_adjacency(&label_similarity(labels), k_out)?;
    symmetric_pinv(&scalar_laplacian(&graph, normalized).matrix, PINV_TOLERANCE)
}

pub fn build_q(pinv: &Matrix, gamma_o: f64) -> Result<OutputStructure> {
    ensure_square(pinv, "build_q")?;
    if !(0.0..=1.0).contains(&gamma_o) {
        return Err(Error::param("gamma_o", format!("must lie in [0, 1], got {gamma_o}")));
    }
    let n = pinv.nrows();
    let q = pinv * gamma_o + Matrix::identity(n, n) * (1.0 - gamma_o);
    Ok(OutputStructure {
        pinv: pinv.clone(),
        q,
        gamma_o,
    })
}

/// Kronecker product with block `(i, j)` equal to `base[i][j] · multiplier`.
pub fn kron_expand(base: &Matrix, multiplier: &Matrix) -> Matrix {
    base.kronecker(multiplier)
}
