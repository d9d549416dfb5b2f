//! Trained model files.
//!
//! A header of `key values...` lines is followed by one `view` line per
//! view, each trailed by its embedded matrices in the matrix-file layout.

use std::fmt::Write as _;
use std::path::Path;

use super::{atomic_write, fmt_f64, format_matrix, parse_value, read_text};
use crate::error::{Error, Result};
use crate::kernel::{DistanceMetric, KernelKind, ViewKernel};
use crate::linalg::Matrix;
use crate::simplex;
use crate::trainer::{ModelState, TrainedView};

pub const MODEL_TAG: &str = "mv3mr-model-1";

fn join_f64(values: &[f64]) -> String {
    values.iter().map(|&v| fmt_f64(v)).collect::<Vec<_>>().join(" ")
}

fn push_line(out: &mut String, key: &str, rest: &str) {
    if rest.is_empty() {
        let _ = writeln!(out, "{key}");
    } else {
        let _ = writeln!(out, "{key} {rest}");
    }
}

pub fn format_model(m: &ModelState) -> Result<String> {
    let mut out = String::new();
    push_line(&mut out, "format", MODEL_TAG);
    push_line(&mut out, "loss", &m.loss.to_string());
    push_line(&mut out, "labels", &m.n_labels.to_string());
    push_line(&mut out, "labeled", &m.n_labeled.to_string());
    push_line(&mut out, "stop", &m.stop.to_string());
    let idx: Vec<String> = m.train_indices.iter().map(|i| i.to_string()).collect();
    push_line(&mut out, "train_indices", &idx.join(" "));
    push_line(&mut out, "coefficients", &join_f64(&m.coefficients));
    push_line(&mut out, "bias", &join_f64(&m.bias));
    push_line(&mut out, "beta", &join_f64(&m.beta));
    push_line(&mut out, "theta", &join_f64(&m.theta));
    push_line(&mut out, "trace", &join_f64(&m.objective_trace));
    out.push_str("q\n");
    out.push_str(&format_matrix(&m.q));
    push_line(&mut out, "views", &m.views.len().to_string());
    for view in &m.views {
        if view.name.is_empty() || view.name.contains(char::is_whitespace) {
            return Err(Error::InvalidData(format!("view name `{}` must be a single word", view.name)));
        }
        let kind = match view.kernel.kind {
            KernelKind::Features(metric) => format!("features {metric}"),
            KernelKind::Precomputed => "gram -".to_string(),
        };
        let _ = writeln!(
            out,
            "view {} {kind} {} {} {}",
            view.name,
            fmt_f64(view.kernel.lambda),
            fmt_f64(view.kernel.trace),
            fmt_f64(view.kernel.ridge)
        );
        out.push_str(&format_matrix(&view.gram));
        if let Some(features) = &view.features {
            out.push_str(&format_matrix(features));
        }
    }
    Ok(out)
}

struct Cursor<'a> {
    lines: Vec<(usize, &'a str)>,
    pos: usize,
    path: &'a Path,
}

impl<'a> Cursor<'a> {
    fn err(&self, message: impl Into<String>) -> Error {
        let line = self.lines.get(self.pos.min(self.lines.len().saturating_sub(1))).map_or(1, |l| l.0);
        Error::Parse {
            path: self.path.to_path_buf(),
            line,
            message: message.into(),
        }
    }

    fn next(&mut self) -> Result<(usize, &'a str)> {
        let item = self.lines.get(self.pos).copied().ok_or_else(|| self.err("unexpected end of file"))?;
        self.pos += 1;
        Ok(item)
    }

    /// Reads a line starting with `key`, returning the remainder.
    fn field(&mut self, key: &str) -> Result<(usize, &'a str)> {
        let (line, text) = self.next()?;
        let (k, rest) = text.split_once(' ').unwrap_or((text, ""));
        if k != key {
            return Err(Error::Parse {
                path: self.path.to_path_buf(),
                line,
                message: format!("expected `{key}`, found `{k}`"),
            });
        }
        Ok((line, rest.trim()))
    }

    fn parsed<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let (line, rest) = self.field(key)?;
        parse_value(rest, self.path, line, key)
    }

    fn list<T: std::str::FromStr>(&mut self, key: &str) -> Result<Vec<T>> {
        let (line, rest) = self.field(key)?;
        rest.split_whitespace().map(|t| parse_value(t, self.path, line, key)).collect()
    }

    fn matrix(&mut self) -> Result<Matrix> {
        let (line, header) = self.next()?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| parse_value(t, self.path, line, "matrix dimension"))
            .collect::<Result<_>>()?;
        let [rows, cols] = dims[..] else {
            return Err(Error::Parse {
                path: self.path.to_path_buf(),
                line,
                message: "expected `rows cols`".into(),
            });
        };
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            let (line, text) = self.next()?;
            let row: Vec<f64> = text
                .split_whitespace()
                .map(|t| parse_value(t, self.path, line, "number"))
                .collect::<Result<_>>()?;
            if row.len() != cols {
                return Err(Error::Parse {
                    path: self.path.to_path_buf(),
                    line,
                    message: format!("expected {cols} values, found {}", row.len()),
                });
            }
            data.extend(row);
        }
        Ok(Matrix::from_row_slice(rows, cols, &data))
    }
}

pub fn parse_model(text: &str, path: &Path) -> Result<ModelState> {
    let mut c = Cursor {
        lines: text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty()).collect(),
        pos: 0,
        path,
    };
    let (_, tag) = c.field("format")?;
    if tag != MODEL_TAG {
        return Err(c.err(format!("unsupported model format `{tag}`")));
    }
    let loss = c.parsed("loss")?;
    let n_labels: usize = c.parsed("labels")?;
    let n_labeled: usize = c.parsed("labeled")?;
    let stop = c.parsed("stop")?;
    let train_indices: Vec<usize> = c.list("train_indices")?;
    let coefficients: Vec<f64> = c.list("coefficients")?;
    let bias: Vec<f64> = c.list("bias")?;
    let beta: Vec<f64> = c.list("beta")?;
    let theta: Vec<f64> = c.list("theta")?;
    let objective_trace = c.list("trace")?;
    c.field("q")?;
    let q = c.matrix()?;
    let n_views: usize = c.parsed("views")?;
    let n_train = train_indices.len();
    let mut views = Vec::with_capacity(n_views);
    for _ in 0..n_views {
        let (line, rest) = c.field("view")?;
        let parts: Vec<&str> = rest.split_whitespace().collect();
        if parts.len() != 6 {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                message: "expected `view name kind metric lambda trace ridge`".into(),
            });
        }
        let kind = match parts[1] {
            "features" => KernelKind::Features(
                parts[2].parse::<DistanceMetric>().map_err(|e| c.err(e.to_string()))?,
            ),
            "gram" => KernelKind::Precomputed,
            other => return Err(c.err(format!("unknown view kind `{other}`"))),
        };
        let kernel = ViewKernel {
            kind,
            lambda: parse_value(parts[3], path, line, "lambda")?,
            trace: parse_value(parts[4], path, line, "trace")?,
            ridge: parse_value(parts[5], path, line, "ridge")?,
        };
        let gram = c.matrix()?;
        let features = match kind {
            KernelKind::Features(_) => Some(c.matrix()?),
            KernelKind::Precomputed => None,
        };
        if gram.shape() != (n_train, n_train) || features.as_ref().is_some_and(|f| f.nrows() != n_train) {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                message: format!("view `{}` does not match {n_train} training samples", parts[0]),
            });
        }
        views.push(TrainedView {
            name: parts[0].to_string(),
            kernel,
            features,
            gram,
        });
    }
    if c.pos != c.lines.len() {
        return Err(c.err("unexpected trailing content"));
    }
    if coefficients.len() != n_train * n_labels
        || bias.len() != n_labels
        || q.shape() != (n_labels, n_labels)
        || beta.len() != n_views
        || theta.len() != n_views
        || n_labeled > n_train
    {
        return Err(Error::InvalidData(format!("{}: inconsistent model dimensions", path.display())));
    }
    simplex::check(&beta, "beta")?;
    simplex::check(&theta, "theta")?;
    Ok(ModelState {
        loss,
        n_labels,
        train_indices,
        n_labeled,
        coefficients,
        bias,
        beta,
        theta,
        q,
        views,
        objective_trace,
        stop,
    })
}

pub fn save_model(path: &Path, model: &ModelState) -> Result<()> {
    atomic_write(path, format_model(model)?.as_bytes())
}

pub fn load_model(path: &Path) -> Result<ModelState> {
    parse_model(&read_text(path)?, path)
}
