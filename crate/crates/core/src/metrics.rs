//! Ranking metrics: 11-point interpolated average precision, ROC AUC and
//! instance-wise ranking loss, with label-averaged aggregates.

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Indices sorted by descending score; equal scores keep index order.
fn ranking(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    order
}

fn check_lengths(scores: &[f64], truth: &[bool]) -> Result<()> {
    if scores.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            context: "scores vs ground truth",
            expected: truth.len(),
            actual: scores.len(),
        });
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::InvalidData("scores must be finite".into()));
    }
    Ok(())
}

/// 11-point interpolated AP: the mean over `r ∈ {0, 0.1, …, 1}` of the
/// best precision among cut-offs whose recall is at least `r`.
pub fn average_precision_11pt(scores: &[f64], truth: &[bool]) -> Result<f64> {
    check_lengths(scores, truth)?;
    let positives = truth.iter().filter(|&&t| t).count();
    if positives == 0 {
        return Err(Error::UndefinedMetric {
            metric: "average precision",
            reason: "no positive samples",
        });
    }
    // (true positives, precision) at every cut-off
    let mut curve = Vec::with_capacity(scores.len());
    let mut tp = 0usize;
    for (rank, &idx) in ranking(scores).iter().enumerate() {
        if truth[idx] {
            tp += 1;
        }
        curve.push((tp, tp as f64 / (rank + 1) as f64));
    }
    let total: f64 = (0..=10)
        .map(|step| {
            // recall ≥ step/10  ⇔  10·tp ≥ step·positives, compared exactly
            curve
                .iter()
                .filter(|(tp, _)| 10 * tp >= step * positives)
                .map(|&(_, p)| p)
                .fold(0.0, f64::max)
        })
        .sum();
    Ok(total / 11.0)
}

/// Probability that a random positive outranks a random negative, with
/// ties counted as one half.
pub fn auc(scores: &[f64], truth: &[bool]) -> Result<f64> {
    check_lengths(scores, truth)?;
    let positives = truth.iter().filter(|&&t| t).count();
    let negatives = truth.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::UndefinedMetric {
            metric: "AUC",
            reason: "needs at least one positive and one negative sample",
        });
    }
    // ascending order; walk tie groups and credit positives by the
    // negatives strictly below plus half of the tied ones
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut below = 0usize;
    let mut credit = 0.0f64;
    let mut start = 0;
    while start < order.len() {
        let mut end = start;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        let group = &order[start..end];
        let pos = group.iter().filter(|&&i| truth[i]).count();
        let neg = group.len() - pos;
        credit += pos as f64 * (below as f64 + 0.5 * neg as f64);
        below += neg;
        start = end;
    }
    Ok(credit / (positives as f64 * negatives as f64))
}

/// Mean ranking loss together with the number of excluded samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankingLoss {
    pub value: f64,
    pub evaluated: usize,
    /// Samples whose label set is empty or full.
    pub excluded: usize,
}

/// Fraction of (relevant, irrelevant) label pairs with
/// `f(relevant) ≤ f(irrelevant)`, averaged over samples. Rows of `scores`
/// and `truth` are samples, columns labels.
pub fn ranking_loss(scores: &Matrix, truth: &[Vec<bool>]) -> Result<RankingLoss> {
    if scores.nrows() != truth.len() {
        return Err(Error::DimensionMismatch {
            context: "ranking_loss rows",
            expected: truth.len(),
            actual: scores.nrows(),
        });
    }
    let labels = scores.ncols();
    let mut sum = 0.0;
    let mut evaluated = 0;
    let mut excluded = 0;
    for (i, row_truth) in truth.iter().enumerate() {
        if row_truth.len() != labels {
            return Err(Error::DimensionMismatch {
                context: "ranking_loss columns",
                expected: labels,
                actual: row_truth.len(),
            });
        }
        let mut irrelevant: Vec<f64> = (0..labels)
            .filter(|&j| !row_truth[j])
            .map(|j| scores[(i, j)])
            .collect();
        let relevant = labels - irrelevant.len();
        if relevant == 0 || irrelevant.is_empty() {
            excluded += 1;
            continue;
        }
        irrelevant.sort_by(f64::total_cmp);
        // for each relevant label, count irrelevant labels scored at least as high
        let violations: usize = (0..labels)
            .filter(|&j| row_truth[j])
            .map(|j| {
                let s = scores[(i, j)];
                irrelevant.len() - irrelevant.partition_point(|&x| x < s)
            })
            .sum();
        sum += violations as f64 / (relevant * irrelevant.len()) as f64;
        evaluated += 1;
    }
    if evaluated == 0 {
        return Err(Error::UndefinedMetric {
            metric: "ranking loss",
            reason: "every sample has an empty or full label set",
        });
    }
    Ok(RankingLoss {
        value: sum / evaluated as f64,
        evaluated,
        excluded,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaskedMean {
    pub mean: f64,
    pub invalid: usize,
}

/// Mean of the defined entries.
pub fn mean_over_labels(values: &[Option<f64>]) -> Result<MaskedMean> {
    let valid: Vec<f64> = values.iter().flatten().copied().collect();
    if valid.is_empty() {
        return Err(Error::UndefinedMetric {
            metric: "label mean",
            reason: "no label has a defined value",
        });
    }
    Ok(MaskedMean {
        mean: valid.iter().sum::<f64>() / valid.len() as f64,
        invalid: values.len() - valid.len(),
    })
}

/// Per-label AP/AUC plus their means and the ranking loss.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub ap: Vec<Option<f64>>,
    pub auc: Vec<Option<f64>>,
    pub mean_ap: Option<MaskedMean>,
    pub mean_auc: Option<MaskedMean>,
    pub ranking_loss: Option<RankingLoss>,
}

/// Evaluates an `samples × labels` score matrix against boolean truth.
pub fn evaluate(scores: &Matrix, truth: &[Vec<bool>]) -> Result<EvaluationReport> {
    if scores.nrows() != truth.len() {
        return Err(Error::DimensionMismatch {
            context: "evaluate rows",
            expected: truth.len(),
            actual: scores.nrows(),
        });
    }
    let labels = scores.ncols();
    if truth.iter().any(|row| row.len() != labels) {
        return Err(Error::DimensionMismatch {
            context: "evaluate columns",
            expected: labels,
            actual: truth.iter().map(Vec::len).find(|&l| l != labels).unwrap_or(0),
        });
    }
    let mut ap = Vec::with_capacity(labels);
    let mut auc_values = Vec::with_capacity(labels);
    for j in 0..labels {
        let column: Vec<f64> = scores.column(j).iter().copied().collect();
        let col_truth: Vec<bool> = truth.iter().map(|row| row[j]).collect();
        ap.push(defined(average_precision_11pt(&column, &col_truth))?);
        auc_values.push(defined(auc(&column, &col_truth))?);
    }
    Ok(EvaluationReport {
        mean_ap: mean_over_labels(&ap).ok(),
        mean_auc: mean_over_labels(&auc_values).ok(),
        ranking_loss: defined(ranking_loss(scores, truth))?,
        ap,
        auc: auc_values,
    })
}

/// Maps an undefined-metric error to `None`, passing other errors through.
fn defined<T>(r: Result<T>) -> Result<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::UndefinedMetric { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}
