//! Alternating optimization over the classifier `a`, the kernel weights `β`
//! and the graph weights `θ`, plus transductive and inductive prediction.
//!
//! Each outer iteration solves for `a` (and `b`) with `G` and `M` fixed,
//! then updates `β`, rebuilds `G`, and updates `θ`. A proposed `(β, θ)` is
//! accepted only if the primal objective at the re-solved classifier does
//! not increase; otherwise the step is halved towards the current weights.
//! Iteration stops when `|O_k − O_{k−1}| / |O_k − O_0|` drops below the
//! threshold.

use log::{debug, warn};

use crate::dataset::{Dataset, ViewData};
use crate::error::{Error, Result};
use crate::graph::{self, GraphLaplacian};
use crate::kernel::{combine_kernels, ViewKernel};
use crate::linalg::{Matrix, Vector};
use crate::optimizer::{
    self, compute_bias, compute_subproblem_data, objective_value, solve_dual_mu, DualOptions, Loss,
    ObjectiveWeights, ReducedSystem, Selector,
};
use crate::simplex;

/// Halvings tried before a rejected weight step is abandoned.
const MAX_BACKTRACK: usize = 8;
/// Relative slack when comparing successive objective values.
pub const MONOTONE_RTOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub gamma_a: f64,
    pub gamma_i: f64,
    pub gamma_b: f64,
    pub gamma_c: f64,
    pub gamma_o: f64,
    pub k_in: usize,
    pub k_out: usize,
    pub loss: Loss,
    pub normalized_laplacian: bool,
    pub stop_threshold: f64,
    pub max_outer_iter: usize,
    pub ridge_scale: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            gamma_a: 1e-2,
            gamma_i: 1e-2,
            gamma_b: 1e-4,
            gamma_c: 1e-4,
            gamma_o: 1.0,
            k_in: 10,
            k_out: 2,
            loss: Loss::Hinge,
            normalized_laplacian: true,
            stop_threshold: 1e-3,
            max_outer_iter: 50,
            ridge_scale: 1e-8,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("gamma_a", self.gamma_a),
            ("gamma_i", self.gamma_i),
            ("gamma_b", self.gamma_b),
            ("gamma_c", self.gamma_c),
            ("stop_threshold", self.stop_threshold),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::param(name, format!("must be positive and finite, got {value}")));
            }
        }
        if !(0.0..=1.0).contains(&self.gamma_o) {
            return Err(Error::param("gamma_o", format!("must lie in [0, 1], got {}", self.gamma_o)));
        }
        if !(self.ridge_scale >= 0.0 && self.ridge_scale.is_finite()) {
            return Err(Error::param("ridge_scale", "must be nonnegative and finite"));
        }
        if self.k_in == 0 {
            return Err(Error::param("k_in", "must be at least 1"));
        }
        if self.k_out == 0 {
            return Err(Error::param("k_out", "must be at least 1"));
        }
        if self.max_outer_iter == 0 {
            return Err(Error::param("max_outer_iter", "must be at least 1"));
        }
        Ok(())
    }

    fn objective_weights(&self) -> ObjectiveWeights {
        ObjectiveWeights {
            gamma_a: self.gamma_a,
            gamma_i: self.gamma_i,
            gamma_b: self.gamma_b,
            gamma_c: self.gamma_c,
            loss: self.loss,
        }
    }
}

/// Everything needed to evaluate a view's kernel against the training rows.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedView {
    pub name: String,
    pub kernel: ViewKernel,
    /// Training feature rows (`None` for precomputed Gram views).
    pub features: Option<Matrix>,
    /// Normalized, ridged training Gram matrix `G_v^k`.
    pub gram: Matrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    pub loss: Loss,
    pub n_labels: usize,
    /// Global dataset indices of the training rows, labeled first.
    pub train_indices: Vec<usize>,
    pub n_labeled: usize,
    /// Stacked coefficients `a` (sample-major, length `n·N`).
    pub coefficients: Vec<f64>,
    pub bias: Vec<f64>,
    pub beta: Vec<f64>,
    pub theta: Vec<f64>,
    pub q: Matrix,
    pub views: Vec<TrainedView>,
    /// Objective values `O_0, O_1, …`.
    pub objective_trace: Vec<f64>,
    pub stop: StopReason,
}

/// Why the outer loop ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// The objective-ratio test fell below the threshold.
    RatioRule,
    /// The weight updates returned the current weights.
    FixedPoint,
    /// No step towards the proposed weights lowered the objective.
    NoDescent,
    MaxIterations,
    /// Weights were frozen (uniform baseline).
    Frozen,
}

impl StopReason {
    pub fn converged(self) -> bool {
        matches!(self, StopReason::RatioRule | StopReason::FixedPoint)
    }
}

impl std::fmt::Display for StopReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            StopReason::RatioRule => "ratio_rule",
            StopReason::FixedPoint => "fixed_point",
            StopReason::NoDescent => "no_descent",
            StopReason::MaxIterations => "max_iterations",
            StopReason::Frozen => "frozen",
        })
    }
}

impl std::str::FromStr for StopReason {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ratio_rule" => Ok(StopReason::RatioRule),
            "fixed_point" => Ok(StopReason::FixedPoint),
            "no_descent" => Ok(StopReason::NoDescent),
            "max_iterations" => Ok(StopReason::MaxIterations),
            "frozen" => Ok(StopReason::Frozen),
            other => Err(Error::param("stop", format!("unknown stop reason `{other}`"))),
        }
    }
}

/// Initial `(β, θ)`.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightInit {
    Uniform,
    Given { beta: Vec<f64>, theta: Vec<f64> },
}

/// Precomputed per-view operators for one training run.
struct Problem {
    views: Vec<TrainedView>,
    laplacians: Vec<GraphLaplacian>,
    /// `G_v = G_v^k ⊗ Q`.
    vv_grams: Vec<Matrix>,
    /// `M_v = L_v ⊗ I_n`.
    vv_laplacians: Vec<Matrix>,
    q: Matrix,
    labels: Matrix,
    sel: Selector,
    train_indices: Vec<usize>,
}

/// Classifier solved for fixed weights.
struct Solution {
    a: Vector,
    mu: Option<Vector>,
    bias: Vec<f64>,
    objective: f64,
}

impl Problem {
    fn build(data: &Dataset, cfg: &TrainConfig) -> Result<Self> {
        data.validate()?;
        cfg.validate()?;
        let train_indices = data.split.training();
        let n_train = train_indices.len();
        let n_labels = data.n_labels();
        let n_labeled = data.split.labeled.len();
        if n_train < 2 {
            return Err(Error::InvalidData("need at least two training samples".into()));
        }
        let k_in = cfg.k_in.min(n_train - 1);
        if k_in < cfg.k_in {
            warn!("k_in = {} exceeds N - 1; using {k_in}", cfg.k_in);
        }

        let labels = Matrix::from_fn(n_train, n_labels, |r, c| data.labels[(train_indices[r], c)]);
        warn_degenerate_labels(&labels, n_labeled);

        let mut views = Vec::with_capacity(data.n_views());
        let mut laplacians = Vec::with_capacity(data.n_views());
        for view in &data.views {
            let (kernel, gram, features) = match &view.data {
                ViewData::Features { matrix, metric } => {
                    let rows = select_rows(matrix, &train_indices);
                    let (kernel, gram) = ViewKernel::fit_features(&rows, *metric, cfg.ridge_scale)?;
                    (kernel, gram, Some(rows))
                }
                ViewData::Gram(full) => {
                    let block = select_block(full, &train_indices, &train_indices);
                    let (kernel, gram) = ViewKernel::fit_precomputed(&block, cfg.ridge_scale)?;
                    (kernel, gram, None)
                }
            };
            let adjacency = graph::knn_adjacency(&gram, k_in)?;
            laplacians.push(graph::scalar_laplacian(&adjacency, cfg.normalized_laplacian));
            views.push(TrainedView {
                name: view.name.clone(),
                kernel,
                features,
                gram,
            });
        }

        let q = output_coupling(&labels, cfg)?;
        let eye = Matrix::identity(n_labels, n_labels);
        let vv_grams = views.iter().map(|v| graph::kron_expand(&v.gram, &q)).collect();
        let vv_laplacians = laplacians.iter().map(|l| graph::kron_expand(&l.matrix, &eye)).collect();
        let sel = Selector::new(&labels, n_labeled)?;
        Ok(Problem {
            views,
            laplacians,
            vv_grams,
            vv_laplacians,
            q,
            labels,
            sel,
            train_indices,
        })
    }

    fn combined(&self, beta: &[f64], theta: &[f64]) -> Result<(Matrix, Matrix)> {
        let grams: Vec<Matrix> = self.views.iter().map(|v| v.gram.clone()).collect();
        let gram = combine_kernels(&grams, beta)?;
        let laplacian = graph::combine_laplacians(&self.laplacians, theta)?;
        let n = self.sel.n_labels();
        Ok((
            graph::kron_expand(&gram, &self.q),
            graph::kron_expand(&laplacian.matrix, &Matrix::identity(n, n)),
        ))
    }

    fn solve(&self, beta: &[f64], theta: &[f64], cfg: &TrainConfig, warm: Option<&Vector>) -> Result<Solution> {
        let (gram, laplacian) = self.combined(beta, theta)?;
        let (a, mu, bias) = match cfg.loss {
            Loss::Hinge => {
                let system = ReducedSystem::new(&gram, &laplacian, cfg.gamma_a, cfg.gamma_i)?;
                let s = system.dual_hessian(&self.sel)?;
                let dual = solve_dual_mu(&s, &self.sel, warm, &DualOptions::default())?;
                let a = system.coefficients(&dual.mu, &self.sel)?;
                let bias = compute_bias(&(&gram * &a), &dual.mu, &self.sel);
                (a, Some(dual.mu), bias)
            }
            Loss::LeastSquares => {
                let grams: Vec<Matrix> = self.views.iter().map(|v| v.gram.clone()).collect();
                let gk = combine_kernels(&grams, beta)?;
                let lk = graph::combine_laplacians(&self.laplacians, theta)?;
                let coeffs = optimizer::solve_vvlrls_sylvester(
                    &gk,
                    &lk.matrix,
                    &self.q,
                    &self.labels,
                    cfg.gamma_a,
                    cfg.gamma_i,
                    self.sel.n_labeled(),
                )?;
                let a = Vector::from_iterator(coeffs.len(), coeffs.transpose().iter().copied());
                (a, None, vec![0.0; self.sel.n_labels()])
            }
        };
        let objective = objective_value(
            &a,
            &bias,
            beta,
            theta,
            &gram,
            &laplacian,
            &self.sel,
            &cfg.objective_weights(),
        );
        Ok(Solution { a, mu, bias, objective })
    }

    /// Proposes new `(β, θ)` from the current solution.
    fn propose(&self, sol: &Solution, beta: &[f64], theta: &[f64], cfg: &TrainConfig) -> Result<(Vec<f64>, Vec<f64>)> {
        let (gram, laplacian) = self.combined(beta, theta)?;
        let dual_term = match (&sol.mu, cfg.loss) {
            (Some(mu), Loss::Hinge) => self.sel.lift(mu),
            _ => {
                // least squares: 2 Jᵀ (y − ŷ) / (nl)
                let fitted = &gram * &sol.a;
                let mut term = Vector::zeros(sol.a.len());
                let scale = 2.0 / self.sel.dual_len() as f64;
                for (k, &y) in self.sel.targets().iter().enumerate() {
                    if y != 0.0 {
                        term[k] = scale * (y - fitted[k]);
                    }
                }
                term
            }
        };
        let data = compute_subproblem_data(
            &sol.a,
            &dual_term,
            &self.vv_grams,
            &gram,
            &self.vv_laplacians,
            &laplacian,
            cfg.gamma_a,
            cfg.gamma_i,
        )?;
        let new_beta = optimizer::update_beta(&data.h_matrix, &data.h, beta, cfg.gamma_b)?;
        // θ uses s recomputed with the updated Gram matrix
        let updated_gram = self.combined(&new_beta, theta)?.0;
        let data = compute_subproblem_data(
            &sol.a,
            &dual_term,
            &self.vv_grams,
            &updated_gram,
            &self.vv_laplacians,
            &laplacian,
            cfg.gamma_a,
            cfg.gamma_i,
        )?;
        let new_theta = optimizer::update_theta(&data.s, theta, cfg.gamma_c)?;
        Ok((new_beta, new_theta))
    }

    fn into_model(self, cfg: &TrainConfig, sol: Solution, beta: Vec<f64>, theta: Vec<f64>, trace: Vec<f64>, stop: StopReason) -> ModelState {
        ModelState {
            loss: cfg.loss,
            n_labels: self.sel.n_labels(),
            n_labeled: self.sel.n_labeled(),
            train_indices: self.train_indices,
            coefficients: sol.a.iter().copied().collect(),
            bias: sol.bias,
            beta,
            theta,
            q: self.q,
            views: self.views,
            objective_trace: trace,
            stop,
        }
    }
}

fn warn_degenerate_labels(labels: &Matrix, n_labeled: usize) {
    for j in 0..labels.ncols() {
        let col = (0..n_labeled).map(|i| labels[(i, j)]);
        let pos = col.clone().filter(|&y| y > 0.0).count();
        let neg = col.filter(|&y| y < 0.0).count();
        if pos == 0 || neg == 0 {
            warn!("label {j} has a single class among labeled rows; its dual block is forced to zero");
        }
    }
}

/// `Q` for the training labels. With a single label the output graph is
/// empty and `Q = [1]`.
fn output_coupling(labels: &Matrix, cfg: &TrainConfig) -> Result<Matrix> {
    let n = labels.ncols();
    if n == 1 || cfg.gamma_o == 0.0 {
        return Ok(Matrix::identity(n, n));
    }
    let k_out = cfg.k_out.min(n - 1);
    if k_out < cfg.k_out {
        warn!("k_out = {} exceeds n - 1; using {k_out}", cfg.k_out);
    }
    let pinv = graph::output_laplacian_pinv(labels, k_out, cfg.normalized_laplacian)?;
    Ok(graph::build_q(&pinv, cfg.gamma_o)?.q)
}

pub(crate) fn select_rows(m: &Matrix, rows: &[usize]) -> Matrix {
    Matrix::from_fn(rows.len(), m.ncols(), |r, c| m[(rows[r], c)])
}

pub(crate) fn select_block(m: &Matrix, rows: &[usize], cols: &[usize]) -> Matrix {
    Matrix::from_fn(rows.len(), cols.len(), |r, c| m[(rows[r], cols[c])])
}

fn stop_ratio(trace: &[f64]) -> f64 {
    let k = trace.len() - 1;
    let change = (trace[k] - trace[k - 1]).abs();
    let total = (trace[k] - trace[0]).abs();
    if change == 0.0 {
        0.0
    } else {
        change / total
    }
}

fn blend(from: &[f64], to: &[f64], t: f64) -> Vec<f64> {
    let mut w: Vec<f64> = from.iter().zip(to).map(|(a, b)| a + t * (b - a)).collect();
    // keep the sum exactly on the simplex after rounding
    let sum: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= sum);
    w
}

/// Learns `a`, `β` and `θ` starting from uniform weights.
pub fn fit(data: &Dataset, cfg: &TrainConfig) -> Result<ModelState> {
    fit_from(data, cfg, &WeightInit::Uniform)
}

pub fn fit_from(data: &Dataset, cfg: &TrainConfig, init: &WeightInit) -> Result<ModelState> {
    let problem = Problem::build(data, cfg)?;
    let views = data.n_views();
    let (mut beta, mut theta) = match init {
        WeightInit::Uniform => (simplex::uniform(views), simplex::uniform(views)),
        WeightInit::Given { beta, theta } => {
            if beta.len() != views || theta.len() != views {
                return Err(Error::DimensionMismatch {
                    context: "initial weights",
                    expected: views,
                    actual: beta.len().min(theta.len()),
                });
            }
            simplex::check(beta, "beta")?;
            simplex::check(theta, "theta")?;
            (beta.clone(), theta.clone())
        }
    };

    let mut sol = problem.solve(&beta, &theta, cfg, None)?;
    let mut trace = vec![sol.objective];
    let mut stop = StopReason::MaxIterations;
    for iter in 1..=cfg.max_outer_iter {
        let (prop_beta, prop_theta) = problem.propose(&sol, &beta, &theta, cfg)?;
        if prop_beta == beta && prop_theta == theta {
            stop = StopReason::FixedPoint;
            break;
        }
        let mut accepted = None;
        let mut step = 1.0;
        for _ in 0..=MAX_BACKTRACK {
            let b = if step == 1.0 { prop_beta.clone() } else { blend(&beta, &prop_beta, step) };
            let t = if step == 1.0 { prop_theta.clone() } else { blend(&theta, &prop_theta, step) };
            let candidate = problem.solve(&b, &t, cfg, sol.mu.as_ref())?;
            if candidate.objective <= sol.objective + MONOTONE_RTOL * sol.objective.abs() {
                accepted = Some((b, t, candidate));
                break;
            }
            debug!(
                "iteration {iter}: step {step} raises the objective ({} > {}), halving",
                candidate.objective, sol.objective
            );
            step *= 0.5;
        }
        let Some((b, t, candidate)) = accepted else {
            stop = StopReason::NoDescent;
            break;
        };
        beta = b;
        theta = t;
        sol = candidate;
        trace.push(sol.objective);
        debug!("iteration {iter}: objective {}, beta {beta:?}, theta {theta:?}", sol.objective);
        if stop_ratio(&trace) < cfg.stop_threshold {
            stop = StopReason::RatioRule;
            break;
        }
    }
    Ok(problem.into_model(cfg, sol, beta, theta, trace, stop))
}

/// Same pipeline with `β` and `θ` frozen at `1/V`: a single classifier solve.
pub fn fit_uniform_baseline(data: &Dataset, cfg: &TrainConfig) -> Result<ModelState> {
    let problem = Problem::build(data, cfg)?;
    let beta = simplex::uniform(data.n_views());
    let theta = beta.clone();
    let sol = problem.solve(&beta, &theta, cfg, None)?;
    let trace = vec![sol.objective];
    Ok(problem.into_model(cfg, sol, beta, theta, trace, StopReason::Frozen))
}

/// Kernel rows of the query samples against the training rows, one block
/// per view.
#[derive(Debug, Clone)]
pub enum ViewQuery {
    Features(Matrix),
    /// Raw (unnormalized) `queries × N_train` Gram block.
    Gram(Matrix),
}

/// Scores and ±1 decisions for a set of query samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub scores: Matrix,
    pub decisions: Matrix,
}

impl ModelState {
    pub fn n_views(&self) -> usize {
        self.views.len()
    }

    pub fn n_train(&self) -> usize {
        self.train_indices.len()
    }

    /// Coefficients reshaped to `N × n` (row `i` is `a_i`).
    pub fn coefficient_matrix(&self) -> Matrix {
        Matrix::from_row_slice(self.n_train(), self.n_labels, &self.coefficients)
    }

    /// Scores from a combined `queries × N` scalar kernel block:
    /// `score = K A Q + b`.
    fn scores_from_kernel(&self, kernel: &Matrix) -> Prediction {
        let mut scores = kernel * self.coefficient_matrix() * &self.q;
        for mut row in scores.row_iter_mut() {
            for (v, b) in row.iter_mut().zip(&self.bias) {
                *v += b;
            }
        }
        let decisions = scores.map(|s| if s >= 0.0 { 1.0 } else { -1.0 });
        Prediction { scores, decisions }
    }

    /// Scores on the training rows from the stored Gram matrices.
    pub fn predict_transductive(&self) -> Prediction {
        let grams: Vec<Matrix> = self.views.iter().map(|v| v.gram.clone()).collect();
        let kernel = combine_kernels(&grams, &self.beta).expect("weights validated at training time");
        self.scores_from_kernel(&kernel)
    }

    /// Inductive prediction from per-view query data. `same_as_train[t]`
    /// names the training row that query `t` coincides with, if any, so
    /// its kernel row picks up the training ridge.
    pub fn predict(&self, queries: &[ViewQuery], same_as_train: &[Option<usize>]) -> Result<Prediction> {
        if queries.len() != self.n_views() {
            return Err(Error::DimensionMismatch {
                context: "predict (views)",
                expected: self.n_views(),
                actual: queries.len(),
            });
        }
        let mut kernel: Option<Matrix> = None;
        for ((view, query), &weight) in self.views.iter().zip(queries).zip(&self.beta) {
            let mut block = match (query, &view.features) {
                (ViewQuery::Features(x), Some(train)) => view.kernel.cross_features(x, train)?,
                (ViewQuery::Gram(block), None) => {
                    if block.ncols() != self.n_train() {
                        return Err(Error::DimensionMismatch {
                            context: "predict (Gram block columns)",
                            expected: self.n_train(),
                            actual: block.ncols(),
                        });
                    }
                    view.kernel.cross_precomputed(block)?
                }
                _ => {
                    return Err(Error::InvalidData(format!(
                        "query kind does not match view `{}`",
                        view.name
                    )))
                }
            };
            if same_as_train.len() == block.nrows() {
                for (t, hit) in same_as_train.iter().enumerate() {
                    if let Some(i) = *hit {
                        block[(t, i)] += view.kernel.ridge;
                    }
                }
            }
            match kernel.as_mut() {
                Some(k) => *k += block * weight,
                None => kernel = Some(block * weight),
            }
        }
        Ok(self.scores_from_kernel(&kernel.expect("at least one view")))
    }

    /// Predicts dataset rows by global index.
    pub fn predict_rows(&self, data: &Dataset, rows: &[usize]) -> Result<Prediction> {
        if data.n_views() != self.n_views() {
            return Err(Error::DimensionMismatch {
                context: "predict (views)",
                expected: self.n_views(),
                actual: data.n_views(),
            });
        }
        if let Some(&bad) = rows.iter().find(|&&r| r >= data.n_samples()) {
            return Err(Error::InvalidData(format!("row {bad} out of range")));
        }
        let queries = data
            .views
            .iter()
            .map(|view| match &view.data {
                ViewData::Features { matrix, .. } => ViewQuery::Features(select_rows(matrix, rows)),
                ViewData::Gram(full) => ViewQuery::Gram(select_block(full, rows, &self.train_indices)),
            })
            .collect::<Vec<_>>();
        let same: Vec<Option<usize>> = rows
            .iter()
            .map(|r| self.train_indices.iter().position(|t| t == r))
            .collect();
        self.predict(&queries, &same)
    }
}
