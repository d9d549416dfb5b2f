//! In-memory multi-view dataset.

use crate::error::{Error, Result};
use crate::kernel::DistanceMetric;
use crate::linalg::{max_asymmetry, Matrix};

/// Maximum asymmetry tolerated in a precomputed Gram matrix.
pub const GRAM_SYMMETRY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub enum ViewData {
    /// `N × d` feature rows.
    Features { matrix: Matrix, metric: DistanceMetric },
    /// `N × N` Gram matrix over all samples.
    Gram(Matrix),
}

#[derive(Debug, Clone, PartialEq)]
pub struct View {
    pub name: String,
    pub data: ViewData,
}

impl View {
    pub fn features(name: impl Into<String>, matrix: Matrix, metric: DistanceMetric) -> Self {
        View {
            name: name.into(),
            data: ViewData::Features { matrix, metric },
        }
    }

    pub fn gram(name: impl Into<String>, matrix: Matrix) -> Self {
        View {
            name: name.into(),
            data: ViewData::Gram(matrix),
        }
    }

    pub fn n_samples(&self) -> usize {
        match &self.data {
            ViewData::Features { matrix, .. } => matrix.nrows(),
            ViewData::Gram(m) => m.nrows(),
        }
    }
}

/// Disjoint labeled / unlabeled / test index lists.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Split {
    pub labeled: Vec<usize>,
    pub unlabeled: Vec<usize>,
    pub test: Vec<usize>,
}

impl Split {
    /// Training order: labeled samples first, then unlabeled.
    pub fn training(&self) -> Vec<usize> {
        self.labeled.iter().chain(&self.unlabeled).copied().collect()
    }

    pub fn by_name(&self, name: &str) -> Result<Vec<usize>> {
        match name {
            "labeled" => Ok(self.labeled.clone()),
            "unlabeled" => Ok(self.unlabeled.clone()),
            "test" => Ok(self.test.clone()),
            "train" => Ok(self.training()),
            other => Err(Error::param(
                "split",
                format!("unknown split `{other}` (expected labeled, unlabeled, test or train)"),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub views: Vec<View>,
    /// `N × n` training labels: ±1 (or 0 for missing) on labeled rows, 0
    /// everywhere else.
    pub labels: Matrix,
    /// Optional `N × n` ground truth in {+1, −1} for evaluation.
    pub truth: Option<Matrix>,
    pub split: Split,
}

impl Dataset {
    pub fn n_samples(&self) -> usize {
        self.labels.nrows()
    }

    pub fn n_labels(&self) -> usize {
        self.labels.ncols()
    }

    pub fn n_views(&self) -> usize {
        self.views.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_samples();
        if self.views.is_empty() {
            return Err(Error::InvalidData("dataset has no views".into()));
        }
        if self.n_labels() == 0 {
            return Err(Error::InvalidData("dataset has no labels".into()));
        }
        for view in &self.views {
            if view.n_samples() != n {
                return Err(Error::InvalidData(format!(
                    "view `{}` has {} samples, labels have {n}",
                    view.name,
                    view.n_samples()
                )));
            }
            match &view.data {
                ViewData::Features { matrix, metric } => {
                    if matrix.ncols() == 0 {
                        return Err(Error::InvalidData(format!("view `{}` has no feature columns", view.name)));
                    }
                    if matrix.iter().any(|v| !v.is_finite()) {
                        return Err(Error::InvalidData(format!("view `{}` has non-finite features", view.name)));
                    }
                    if *metric == DistanceMetric::ChiSquared && matrix.iter().any(|&v| v < 0.0) {
                        return Err(Error::InvalidData(format!(
                            "view `{}` uses chi2 but has negative features",
                            view.name
                        )));
                    }
                }
                ViewData::Gram(m) => {
                    if m.ncols() != n {
                        return Err(Error::InvalidData(format!("Gram view `{}` is not square", view.name)));
                    }
                    if m.iter().any(|v| !v.is_finite()) {
                        return Err(Error::InvalidData(format!("Gram view `{}` has non-finite entries", view.name)));
                    }
                    let asym = max_asymmetry(m);
                    if asym > GRAM_SYMMETRY_TOL {
                        return Err(Error::InvalidData(format!(
                            "Gram view `{}` is not symmetric (max asymmetry {asym:e})",
                            view.name
                        )));
                    }
                }
            }
        }
        self.validate_split()?;
        self.validate_labels()?;
        if let Some(truth) = &self.truth {
            if truth.shape() != self.labels.shape() {
                return Err(Error::InvalidData("truth and label matrices differ in shape".into()));
            }
            if let Some(pos) = truth.iter().position(|&v| v != 1.0 && v != -1.0) {
                return Err(Error::InvalidData(format!(
                    "truth row {} must contain only +1/-1",
                    pos % truth.nrows()
                )));
            }
        }
        Ok(())
    }

    fn validate_split(&self) -> Result<()> {
        let n = self.n_samples();
        let mut seen = vec![false; n];
        for (name, list) in [
            ("labeled", &self.split.labeled),
            ("unlabeled", &self.split.unlabeled),
            ("test", &self.split.test),
        ] {
            for &i in list {
                if i >= n {
                    return Err(Error::InvalidData(format!("{name} index {i} out of range (N = {n})")));
                }
                if seen[i] {
                    return Err(Error::InvalidData(format!("sample {i} appears in more than one split list")));
                }
                seen[i] = true;
            }
        }
        if self.split.labeled.is_empty() {
            return Err(Error::InvalidData("split has no labeled samples".into()));
        }
        Ok(())
    }

    fn validate_labels(&self) -> Result<()> {
        let mut is_labeled = vec![false; self.n_samples()];
        for &i in &self.split.labeled {
            is_labeled[i] = true;
        }
        for (i, &labeled) in is_labeled.iter().enumerate() {
            let row = self.labels.row(i);
            if let Some(bad) = row.iter().find(|&&y| y != 1.0 && y != -1.0 && y != 0.0) {
                return Err(Error::InvalidData(format!("label row {i} contains {bad}; expected +1, -1 or 0")));
            }
            let any = row.iter().any(|&y| y != 0.0);
            if labeled && !any {
                return Err(Error::InvalidData(format!("labeled row {i} has no +1/-1 entry")));
            }
            if !labeled && any {
                return Err(Error::InvalidData(format!("row {i} is not labeled but has a nonzero label")));
            }
        }
        Ok(())
    }

    /// Copy of this dataset with a new split whose labeled rows take their
    /// labels from the ground truth.
    pub fn relabeled(&self, split: Split) -> Result<Dataset> {
        let truth = self
            .truth
            .as_ref()
            .ok_or_else(|| Error::InvalidData("relabeling needs a ground-truth matrix".into()))?;
        let mut labels = Matrix::zeros(self.n_samples(), self.n_labels());
        for &i in &split.labeled {
            labels.set_row(i, &truth.row(i));
        }
        let out = Dataset {
            views: self.views.clone(),
            labels,
            truth: self.truth.clone(),
            split,
        };
        out.validate()?;
        Ok(out)
    }

    /// Boolean ground truth (`y > 0`) for the given rows.
    pub fn truth_rows(&self, rows: &[usize]) -> Result<Vec<Vec<bool>>> {
        let truth = self
            .truth
            .as_ref()
            .ok_or_else(|| Error::InvalidData("dataset has no ground truth".into()))?;
        Ok(rows
            .iter()
            .map(|&i| truth.row(i).iter().map(|&y| y > 0.0).collect())
            .collect())
    }
}
