//! Independent reference implementations used as test oracles.

#![allow(dead_code)]

use mv3mr::linalg::{Matrix, Vector};
use mv3mr::metrics::evaluate;
use mv3mr::synth::SyntheticSpec;
use mv3mr::trainer::ModelState;
use mv3mr::{Dataset, TrainConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(rng: &mut impl Rng) -> f64 {
    rng.sample(rand_distr::StandardNormal)
}

pub fn log_uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    (lo.ln() + rng.random::<f64>() * (hi.ln() - lo.ln())).exp()
}

/// `B Bᵀ / n + shift I` with Gaussian `B`.
pub fn random_psd(n: usize, rng: &mut impl Rng, shift: f64) -> Matrix {
    let b = Matrix::from_fn(n, n, |_, _| normal(rng));
    &b * b.transpose() / n as f64 + Matrix::identity(n, n) * shift
}

/// Uniform draw from the simplex.
pub fn random_simplex(v: usize, rng: &mut impl Rng) -> Vec<f64> {
    let raw: Vec<f64> = (0..v).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let sum: f64 = raw.iter().sum();
    raw.iter().map(|x| x / sum).collect()
}

/// Random symmetric nonnegative weights with roughly `density` edges.
pub fn random_adjacency(n: usize, rng: &mut impl Rng, density: f64) -> Matrix {
    let mut w = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            if rng.random::<f64>() < density {
                let x = rng.random::<f64>();
                w[(i, j)] = x;
                w[(j, i)] = x;
            }
        }
    }
    w
}

/// `D − W` computed entry by entry.
pub fn reference_laplacian(w: &Matrix) -> Matrix {
    let n = w.nrows();
    let mut l = -w.clone();
    for i in 0..n {
        let mut degree = 0.0;
        for j in 0..n {
            degree += w[(i, j)];
        }
        l[(i, i)] = degree - w[(i, i)];
    }
    l
}

pub fn min_eig(m: &Matrix) -> f64 {
    let sym = (m + m.transpose()) * 0.5;
    sym.symmetric_eigen().eigenvalues.min()
}

fn solve(m: &Matrix, rhs: &Vector) -> Option<Vector> {
    let x = m.clone().lu().solve(rhs)?;
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Box-and-balance dual QP `min ½ μᵀSμ − 1ᵀμ` in the library's stacking
/// (`k = i·n + j`). Entries with a zero target, and every entry of a label
/// whose nonzero targets share one sign, are pinned at zero.
pub struct DualProblem<'a> {
    pub s: &'a Matrix,
    pub targets: &'a [f64],
    pub n_labels: usize,
    pub c: f64,
}

impl DualProblem<'_> {
    pub fn objective(&self, mu: &Vector) -> f64 {
        0.5 * mu.dot(&(self.s * mu)) - mu.sum()
    }

    /// Indices of the movable entries and, for each label, the movable
    /// entries it constrains.
    fn structure(&self) -> (Vec<usize>, Vec<Vec<usize>>) {
        let n = self.n_labels;
        let mut free = Vec::new();
        let mut groups = Vec::new();
        for j in 0..n {
            let members: Vec<usize> = (j..self.targets.len()).step_by(n).filter(|&k| self.targets[k] != 0.0).collect();
            let pos = members.iter().any(|&k| self.targets[k] > 0.0);
            let neg = members.iter().any(|&k| self.targets[k] < 0.0);
            if pos && neg {
                free.extend(&members);
                groups.push(members);
            }
        }
        free.sort_unstable();
        (free, groups)
    }

    /// Log-barrier interior-point solve. Returns `(μ, objective)` with an
    /// objective error below `1e-10`.
    pub fn barrier(&self) -> (Vector, f64) {
        let dim = self.targets.len();
        let (free, groups) = self.structure();
        let m = free.len();
        let mut mu = Vector::zeros(dim);
        if m == 0 {
            return (mu, 0.0);
        }
        let c = self.c;
        // strictly interior, balanced start
        for g in &groups {
            let pos = g.iter().filter(|&&k| self.targets[k] > 0.0).count() as f64;
            let neg = g.len() as f64 - pos;
            let s = pos.min(neg);
            for &k in g {
                mu[k] = 0.5 * c * s / if self.targets[k] > 0.0 { pos } else { neg };
            }
        }
        let a = Matrix::from_fn(groups.len(), m, |r, col| {
            if groups[r].contains(&free[col]) {
                self.targets[free[col]]
            } else {
                0.0
            }
        });
        let sff = Matrix::from_fn(m, m, |r, q| self.s[(free[r], free[q])]);
        let p = groups.len();
        let phi = |x: &Vector, t: f64| -> f64 {
            let f = 0.5 * x.dot(&(&sff * x)) - x.sum();
            t * f - x.iter().map(|&v| v.ln() + (c - v).ln()).sum::<f64>()
        };
        let mut x = Vector::from_iterator(m, free.iter().map(|&k| mu[k]));
        let mut t = 1.0;
        while (2 * m) as f64 / t > 1e-11 {
            for _ in 0..200 {
                let grad_f = &sff * &x - Vector::from_element(m, 1.0);
                let g = Vector::from_fn(m, |r, _| t * grad_f[r] - 1.0 / x[r] + 1.0 / (c - x[r]));
                let mut kkt = Matrix::zeros(m + p, m + p);
                for r in 0..m {
                    for q in 0..m {
                        kkt[(r, q)] = t * sff[(r, q)];
                    }
                    kkt[(r, r)] += 1.0 / (x[r] * x[r]) + 1.0 / ((c - x[r]) * (c - x[r]));
                }
                for r in 0..p {
                    for q in 0..m {
                        kkt[(m + r, q)] = a[(r, q)];
                        kkt[(q, m + r)] = a[(r, q)];
                    }
                }
                let mut rhs = Vector::zeros(m + p);
                for r in 0..m {
                    rhs[r] = -g[r];
                }
                let Some(sol) = solve(&kkt, &rhs) else { break };
                let dx = sol.rows(0, m).into_owned();
                let decrement = -g.dot(&dx);
                if decrement < 1e-14 {
                    break;
                }
                let mut step = 1.0;
                while (0..m).any(|r| {
                    let v = x[r] + step * dx[r];
                    v <= 0.0 || v >= c
                }) {
                    step *= 0.5;
                }
                let base = phi(&x, t);
                while phi(&(&x + &dx * step), t) > base - 0.25 * step * decrement && step > 1e-20 {
                    step *= 0.5;
                }
                x += &dx * step;
            }
            t *= 8.0;
        }
        for (r, &k) in free.iter().enumerate() {
            mu[k] = x[r];
        }
        let obj = self.objective(&mu);
        (mu, obj)
    }

    /// Exhaustive active-set enumeration: every movable entry is at 0, at
    /// `c`, or free; the free block solves the equality-constrained KKT
    /// system. Returns the best feasible objective. Needs `S` positive
    /// definite and few movable entries.
    pub fn exhaustive(&self) -> f64 {
        let (free, groups) = self.structure();
        let m = free.len();
        assert!(m <= 10, "exhaustive oracle limited to 10 movable entries");
        let mut best = if m == 0 { 0.0 } else { f64::INFINITY };
        let total = 3usize.pow(m as u32);
        for code in 0..total {
            let mut state = vec![0u8; m];
            let mut rest = code;
            for s in state.iter_mut() {
                *s = (rest % 3) as u8;
                rest /= 3;
            }
            let mut mu = Vector::zeros(self.targets.len());
            let mut open = Vec::new();
            for (r, &k) in free.iter().enumerate() {
                match state[r] {
                    0 => {}
                    1 => mu[k] = self.c,
                    _ => open.push(k),
                }
            }
            // balance rows only for labels with an open entry; the others
            // must already balance
            let mut rows = Vec::new();
            let mut consistent = true;
            for g in &groups {
                if g.iter().any(|k| open.contains(k)) {
                    rows.push(g);
                } else {
                    let bal: f64 = g.iter().map(|&k| self.targets[k] * mu[k]).sum();
                    consistent &= bal.abs() < 1e-12;
                }
            }
            if !consistent {
                continue;
            }
            if !open.is_empty() {
                let (o, p) = (open.len(), rows.len());
                let mut kkt = Matrix::zeros(o + p, o + p);
                let mut rhs = Vector::zeros(o + p);
                for (r, &k) in open.iter().enumerate() {
                    for (q, &kk) in open.iter().enumerate() {
                        kkt[(r, q)] = self.s[(k, kk)];
                    }
                    rhs[r] = 1.0 - (self.s.row(k) * &mu)[0];
                }
                for (r, g) in rows.iter().enumerate() {
                    for (q, &k) in open.iter().enumerate() {
                        if g.contains(&k) {
                            kkt[(o + r, q)] = self.targets[k];
                            kkt[(q, o + r)] = self.targets[k];
                        }
                    }
                    rhs[o + r] = -g.iter().map(|&k| self.targets[k] * mu[k]).sum::<f64>();
                }
                let Some(sol) = solve(&kkt, &rhs) else { continue };
                if (0..o).any(|r| sol[r] < -1e-12 || sol[r] > self.c + 1e-12) {
                    continue;
                }
                for (r, &k) in open.iter().enumerate() {
                    mu[k] = sol[r].clamp(0.0, self.c);
                }
            }
            best = best.min(self.objective(&mu));
        }
        best
    }
}

/// Euclidean projection onto the simplex by bisection on the threshold.
pub fn simplex_projection_bisect(v: &[f64]) -> Vec<f64> {
    let excess = |tau: f64| v.iter().map(|&x| (x - tau).max(0.0)).sum::<f64>() - 1.0;
    let mut lo = v.iter().cloned().fold(f64::INFINITY, f64::min) - 1.0;
    let mut hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if excess(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let tau = 0.5 * (lo + hi);
    let mut w: Vec<f64> = v.iter().map(|&x| (x - tau).max(0.0)).collect();
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= s);
    w
}

/// Minimizes `wᵀPw + qᵀw` over the simplex (`P` symmetric PSD) by
/// projected gradient; returns `(w, value)`.
pub fn simplex_qp_projected_gradient(p: &Matrix, q: &[f64]) -> (Vec<f64>, f64) {
    let v = q.len();
    let value = |w: &[f64]| -> f64 {
        let mut out = 0.0;
        for i in 0..v {
            out += q[i] * w[i];
            for j in 0..v {
                out += w[i] * p[(i, j)] * w[j];
            }
        }
        out
    };
    let lipschitz = 2.0 * p.clone().symmetric_eigen().eigenvalues.max().max(1e-12);
    let step = 1.0 / lipschitz;
    let mut w = vec![1.0 / v as f64; v];
    for _ in 0..2_000_000 {
        let grad: Vec<f64> = (0..v).map(|i| q[i] + 2.0 * (0..v).map(|j| p[(i, j)] * w[j]).sum::<f64>()).collect();
        let next = simplex_projection_bisect(&w.iter().zip(&grad).map(|(a, g)| a - step * g).collect::<Vec<_>>());
        let change = next.iter().zip(&w).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        w = next;
        if change < 1e-15 {
            break;
        }
    }
    let val = value(&w);
    (w, val)
}

/// Exact minimum of `wᵀPw + qᵀw` over the simplex by enumerating faces
/// (`P` positive definite, few coordinates).
pub fn simplex_qp_faces(p: &Matrix, q: &[f64]) -> f64 {
    let v = q.len();
    let mut best = f64::INFINITY;
    for mask in 1u32..(1 << v) {
        let support: Vec<usize> = (0..v).filter(|&i| mask & (1 << i) != 0).collect();
        let s = support.len();
        // stationarity 2 P_SS w + q_S + ν 1 = 0, Σ w = 1
        let mut kkt = Matrix::zeros(s + 1, s + 1);
        let mut rhs = Vector::zeros(s + 1);
        for (r, &i) in support.iter().enumerate() {
            for (c, &j) in support.iter().enumerate() {
                kkt[(r, c)] = 2.0 * p[(i, j)];
            }
            kkt[(r, s)] = 1.0;
            kkt[(s, r)] = 1.0;
            rhs[r] = -q[i];
        }
        rhs[s] = 1.0;
        let Some(sol) = solve(&kkt, &rhs) else { continue };
        if (0..s).any(|r| sol[r] < -1e-12) {
            continue;
        }
        let mut w = vec![0.0; v];
        for (r, &i) in support.iter().enumerate() {
            w[i] = sol[r].max(0.0);
        }
        let mut val = 0.0;
        for i in 0..v {
            val += q[i] * w[i];
            for j in 0..v {
                val += w[i] * p[(i, j)] * w[j];
            }
        }
        best = best.min(val);
    }
    best
}

/// Solves `B A Q + l γ_A A = Y` by vectorizing into `(B ⊗ Q + lγ_A I) vec_r(A) = vec_r(Y)`.
pub fn sylvester_vectorized(
    gram: &Matrix,
    laplacian: &Matrix,
    q: &Matrix,
    labels: &Matrix,
    gamma_a: f64,
    gamma_i: f64,
    l: usize,
) -> Matrix {
    let (big_n, n) = labels.shape();
    let mut j = Matrix::zeros(big_n, big_n);
    for i in 0..l {
        j[(i, i)] = 1.0;
    }
    let b = &j * gram + laplacian * gram * (l as f64 * gamma_i);
    let mut system = b.kronecker(&q.transpose());
    for k in 0..big_n * n {
        system[(k, k)] += l as f64 * gamma_a;
    }
    let rhs = Vector::from_iterator(big_n * n, labels.transpose().iter().copied());
    let x = system.lu().solve(&rhs).expect("vectorized Sylvester system is singular");
    Matrix::from_row_slice(big_n, n, x.as_slice())
}

/// Residual of `−(1/(lγ_A))(J G + lγ_I L G) A Q − A + (1/(lγ_A)) Y`.
#[allow(clippy::too_many_arguments)]
pub fn sylvester_equation_residual(
    gram: &Matrix,
    laplacian: &Matrix,
    q: &Matrix,
    labels: &Matrix,
    a: &Matrix,
    gamma_a: f64,
    gamma_i: f64,
    l: usize,
) -> Matrix {
    let big_n = gram.nrows();
    let mut j = Matrix::zeros(big_n, big_n);
    for i in 0..l {
        j[(i, i)] = 1.0;
    }
    let scale = 1.0 / (l as f64 * gamma_a);
    let b = &j * gram + laplacian * gram * (l as f64 * gamma_i);
    -(b * a * q) * scale - a + labels * scale
}

/// Scalar Laplacian SVM built from scratch: exponential L2 kernel with
/// `λ = max distance`, unit trace, ridge; symmetric k-NN graph with
/// kernel weights; normalized Laplacian; dual solved by active-set
/// enumeration; bias from the balance multiplier.
pub struct ReferenceLapSvm {
    pub decision: Vec<f64>,
    pub gram: Matrix,
    /// Labeled points strictly inside the box; the bias is only pinned
    /// down when there is at least one.
    pub free_support: usize,
}

pub fn reference_lapsvm(
    x: &Matrix,
    y_labeled: &[f64],
    k: usize,
    gamma_a: f64,
    gamma_i: f64,
    ridge_scale: f64,
) -> ReferenceLapSvm {
    let n = x.nrows();
    let l = y_labeled.len();
    let dist = Matrix::from_fn(n, n, |i, j| (x.row(i) - x.row(j)).norm());
    let lambda = dist.max();
    let raw = dist.map(|d| (-d / lambda).exp());
    let mut gram = &raw / raw.trace();
    let ridge = ridge_scale * gram.trace() / n as f64;
    for i in 0..n {
        gram[(i, i)] += ridge;
    }
    let mut w = Matrix::zeros(n, n);
    for i in 0..n {
        let mut others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        others.sort_by(|&a, &b| gram[(i, b)].partial_cmp(&gram[(i, a)]).unwrap().then(a.cmp(&b)));
        for &j in &others[..k] {
            w[(i, j)] = gram[(i, j)];
            w[(j, i)] = gram[(i, j)];
        }
    }
    let degree: Vec<f64> = (0..n).map(|i| w.row(i).sum()).collect();
    let lap = Matrix::from_fn(n, n, |i, j| {
        let off = w[(i, j)] / (degree[i] * degree[j]).sqrt();
        if i == j {
            1.0 - off
        } else {
            -off
        }
    });
    // (2γ_A I + 2γ_I L K) α = Jᵀ Y β
    let system = Matrix::identity(n, n) * (2.0 * gamma_a) + &lap * &gram * (2.0 * gamma_i);
    let inv = system.try_inverse().expect("reference system is singular");
    let mut jy = Matrix::zeros(n, l);
    for i in 0..l {
        jy[(i, i)] = y_labeled[i];
    }
    let kinv = &gram * &inv * &jy;
    let q = Matrix::from_fn(l, l, |r, c| y_labeled[r] * kinv[(r, c)]);
    let q = (&q + q.transpose()) * 0.5;
    let c = 1.0 / l as f64;
    // enumerate active sets; keep the best feasible point and its multiplier
    let mut best = (f64::INFINITY, Vector::zeros(l), 0.0);
    for code in 0..3usize.pow(l as u32) {
        let mut state = vec![0u8; l];
        let mut rest = code;
        for s in state.iter_mut() {
            *s = (rest % 3) as u8;
            rest /= 3;
        }
        let mut beta = Vector::zeros(l);
        let open: Vec<usize> = (0..l).filter(|&i| state[i] == 2).collect();
        for i in 0..l {
            if state[i] == 1 {
                beta[i] = c;
            }
        }
        let mut nu = 0.0;
        if open.is_empty() {
            let bal: f64 = (0..l).map(|i| y_labeled[i] * beta[i]).sum();
            if bal.abs() > 1e-12 {
                continue;
            }
        } else {
            let o = open.len();
            let mut kkt = Matrix::zeros(o + 1, o + 1);
            let mut rhs = Vector::zeros(o + 1);
            for (r, &i) in open.iter().enumerate() {
                for (s, &j) in open.iter().enumerate() {
                    kkt[(r, s)] = q[(i, j)];
                }
                kkt[(r, o)] = y_labeled[i];
                kkt[(o, r)] = y_labeled[i];
                rhs[r] = 1.0 - (q.row(i) * &beta)[0];
            }
            rhs[o] = -(0..l).map(|i| y_labeled[i] * beta[i]).sum::<f64>();
            let Some(sol) = solve(&kkt, &rhs) else { continue };
            if (0..o).any(|r| sol[r] < -1e-12 || sol[r] > c + 1e-12) {
                continue;
            }
            for (r, &i) in open.iter().enumerate() {
                beta[i] = sol[r];
            }
            nu = sol[o];
        }
        let obj = 0.5 * beta.dot(&(&q * &beta)) - beta.sum();
        if obj < best.0 - 1e-15 {
            best = (obj, beta, nu);
        }
    }
    let (_, beta, nu) = best;
    let alpha = &inv * (&jy * &beta);
    let f = &gram * alpha;
    // stationarity on a free coordinate: y_i (f_i + ν) = 1, so b = ν
    ReferenceLapSvm {
        decision: f.iter().map(|v| v + nu).collect(),
        gram,
        free_support: beta.iter().filter(|&&b| b > 1e-9 && b < c - 1e-9).count(),
    }
}

/// 11-point AP straight from the definition with exact rational recall.
pub fn brute_ap(scores: &[f64], truth: &[bool]) -> Option<f64> {
    let positives = truth.iter().filter(|&&t| t).count();
    if positives == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    // descending score, earlier index first among ties
    for i in 1..order.len() {
        let mut j = i;
        while j > 0 && scores[order[j]] > scores[order[j - 1]] {
            order.swap(j, j - 1);
            j -= 1;
        }
    }
    let mut total = 0.0;
    for r in 0..=10usize {
        let mut best: f64 = 0.0;
        for cut in 1..=order.len() {
            let tp = order[..cut].iter().filter(|&&i| truth[i]).count();
            // recall tp/positives ≥ r/10
            if tp * 10 >= r * positives {
                best = best.max(tp as f64 / cut as f64);
            }
        }
        total += best;
    }
    Some(total / 11.0)
}

/// AUC by counting every positive-negative pair.
pub fn brute_auc(scores: &[f64], truth: &[bool]) -> Option<f64> {
    let mut pairs = 0.0;
    let mut credit = 0.0;
    for i in 0..scores.len() {
        for j in 0..scores.len() {
            if truth[i] && !truth[j] {
                pairs += 1.0;
                if scores[i] > scores[j] {
                    credit += 1.0;
                } else if scores[i] == scores[j] {
                    credit += 0.5;
                }
            }
        }
    }
    (pairs > 0.0).then(|| credit / pairs)
}

/// Ranking loss of one sample by pair counting.
pub fn brute_rl_row(scores: &[f64], truth: &[bool]) -> Option<f64> {
    let rel = truth.iter().filter(|&&t| t).count();
    let irr = truth.len() - rel;
    if rel == 0 || irr == 0 {
        return None;
    }
    let mut bad = 0usize;
    for i in 0..scores.len() {
        for j in 0..scores.len() {
            if truth[i] && !truth[j] && scores[i] <= scores[j] {
                bad += 1;
            }
        }
    }
    Some(bad as f64 / (rel * irr) as f64)
}

/// Synthetic informative-vs-noise benchmark: `N = 200` training samples,
/// three views with informativeness (1, 0.5, 0), three labels, 40 labeled.
pub fn benchmark_spec(seed: u64, n_test: usize) -> SyntheticSpec {
    SyntheticSpec {
        seed,
        n_labeled: 40,
        n_unlabeled: 160,
        n_test,
        n_labels: 3,
        informativeness: vec![1.0, 0.5, 0.0],
        label_correlation: 0.5,
        noise: 1.0,
        dim: 10,
        ..SyntheticSpec::default()
    }
}

pub fn benchmark_config() -> TrainConfig {
    TrainConfig {
        gamma_a: 1e-2,
        gamma_i: 1e-2,
        gamma_b: 1e-4,
        gamma_c: 1e-4,
        k_in: 10,
        ..TrainConfig::default()
    }
}

/// Per-label AP of the transductive scores on the unlabeled rows.
pub fn transductive_ap(model: &ModelState, data: &Dataset) -> Vec<f64> {
    let l = model.n_labeled;
    let rows = &model.train_indices[l..];
    let scores = model.predict_transductive().scores.rows(l, rows.len()).into_owned();
    let report = evaluate(&scores, &data.truth_rows(rows).unwrap()).unwrap();
    report.ap.iter().map(|v| v.expect("label without positives")).collect()
}

/// Per-label AP of inductive scores on the test rows.
pub fn inductive_ap(model: &ModelState, data: &Dataset) -> Vec<f64> {
    let rows = &data.split.test;
    let scores = model.predict_rows(data, rows).unwrap().scores;
    let report = evaluate(&scores, &data.truth_rows(rows).unwrap()).unwrap();
    report.ap.iter().map(|v| v.expect("label without positives")).collect()
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}
