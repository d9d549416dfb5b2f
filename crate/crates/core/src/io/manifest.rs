//! Dataset manifests and split files.
//!
//! ```text
//! format = mv3mr-dataset-1
//! samples = 6
//! labels = 2
//! views = 2
//! view = color features chi2 color.txt
//! view = shape gram - shape_gram.txt
//! labels_file = labels.txt
//! truth_file = truth.txt
//! split_file = split.txt
//! ```
//!
//! Relative paths resolve against the manifest's directory. A split file
//! has one `labeled`, `unlabeled` and `test` line, each followed by indices.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::{atomic_write, content_lines, key_values, parse_value, read_matrix, read_text, write_matrix};
use crate::dataset::{Dataset, Split, View, ViewData};
use crate::error::{Error, Result};
use crate::kernel::DistanceMetric;
use crate::linalg::Matrix;

pub const MANIFEST_TAG: &str = "mv3mr-dataset-1";

pub fn parse_split(text: &str, path: &Path) -> Result<Split> {
    let mut split = Split::default();
    let mut seen = [false; 3];
    for (line, l) in content_lines(text) {
        let mut tokens = l.split_whitespace();
        let key = tokens.next().unwrap_or_default();
        let (slot, list) = match key {
            "labeled" => (0, &mut split.labeled),
            "unlabeled" => (1, &mut split.unlabeled),
            "test" => (2, &mut split.test),
            other => {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line,
                    message: format!("unknown split list `{other}`"),
                })
            }
        };
        if seen[slot] {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                message: format!("duplicate `{key}` line"),
            });
        }
        seen[slot] = true;
        for tok in tokens {
            list.push(parse_value(tok, path, line, "index")?);
        }
    }
    Ok(split)
}

pub fn format_split(split: &Split) -> String {
    let mut out = String::new();
    for (name, list) in [
        ("labeled", &split.labeled),
        ("unlabeled", &split.unlabeled),
        ("test", &split.test),
    ] {
        out.push_str(name);
        for i in list {
            let _ = write!(out, " {i}");
        }
        out.push('\n');
    }
    out
}

fn resolve(base: &Path, file: &str) -> PathBuf {
    let p = Path::new(file);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn check_shape(m: &Matrix, rows: usize, cols: usize, path: &Path) -> Result<()> {
    if m.shape() != (rows, cols) {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: format!("expected a {rows} x {cols} matrix, found {} x {}", m.nrows(), m.ncols()),
        });
    }
    Ok(())
}

/// Reads a manifest and every file it references, then validates the
/// resulting dataset.
pub fn load_dataset(manifest: &Path) -> Result<Dataset> {
    let text = read_text(manifest)?;
    let base = manifest.parent().unwrap_or(Path::new("."));
    let perr = |line: usize, message: String| Error::Parse {
        path: manifest.to_path_buf(),
        line,
        message,
    };

    let mut tag = None;
    let mut samples: Option<usize> = None;
    let mut labels: Option<usize> = None;
    let mut n_views: Option<usize> = None;
    let mut views = Vec::new();
    let mut labels_file = None;
    let mut truth_file = None;
    let mut split_file = None;
    for (line, key, value) in key_values(&text, manifest)? {
        match key {
            "format" => tag = Some((line, value)),
            "samples" => samples = Some(parse_value(value, manifest, line, "sample count")?),
            "labels" => labels = Some(parse_value(value, manifest, line, "label count")?),
            "views" => n_views = Some(parse_value(value, manifest, line, "view count")?),
            "view" => {
                let parts: Vec<&str> = value.split_whitespace().collect();
                if parts.len() != 4 {
                    return Err(perr(line, format!("expected `view = name kind metric file`, got `{value}`")));
                }
                views.push((line, parts[0], parts[1], parts[2], parts[3]));
            }
            "labels_file" => labels_file = Some(value),
            "truth_file" => truth_file = Some(value),
            "split_file" => split_file = Some(value),
            other => return Err(perr(line, format!("unknown manifest key `{other}`"))),
        }
    }
    match tag {
        Some((_, MANIFEST_TAG)) => {}
        Some((line, other)) => return Err(perr(line, format!("unsupported format `{other}`"))),
        None => return Err(perr(1, "missing `format` line".into())),
    }
    let n = samples.ok_or_else(|| perr(1, "missing `samples`".into()))?;
    let n_labels = labels.ok_or_else(|| perr(1, "missing `labels`".into()))?;
    if let Some(v) = n_views {
        if v != views.len() {
            return Err(perr(1, format!("`views = {v}` but {} view lines", views.len())));
        }
    }

    let mut loaded = Vec::with_capacity(views.len());
    for (line, name, kind, metric, file) in views {
        let path = resolve(base, file);
        let data = match kind {
            "features" => {
                let metric: DistanceMetric = metric.parse().map_err(|e: Error| perr(line, e.to_string()))?;
                let m = read_matrix(&path)?;
                if m.nrows() != n {
                    return Err(Error::Parse {
                        path,
                        line: 1,
                        message: format!("expected {n} rows, found {}", m.nrows()),
                    });
                }
                ViewData::Features { matrix: m, metric }
            }
            "gram" => {
                let m = read_matrix(&path)?;
                check_shape(&m, n, n, &path)?;
                ViewData::Gram(m)
            }
            other => return Err(perr(line, format!("unknown view kind `{other}`"))),
        };
        loaded.push(View {
            name: name.to_string(),
            data,
        });
    }

    let labels_path = resolve(base, labels_file.ok_or_else(|| perr(1, "missing `labels_file`".into()))?);
    let label_matrix = read_matrix(&labels_path)?;
    check_shape(&label_matrix, n, n_labels, &labels_path)?;
    let truth = match truth_file {
        Some(f) => {
            let p = resolve(base, f);
            let m = read_matrix(&p)?;
            check_shape(&m, n, n_labels, &p)?;
            Some(m)
        }
        None => None,
    };
    let split_path = resolve(base, split_file.ok_or_else(|| perr(1, "missing `split_file`".into()))?);
    let split = parse_split(&read_text(&split_path)?, &split_path)?;

    let data = Dataset {
        views: loaded,
        labels: label_matrix,
        truth,
        split,
    };
    data.validate()?;
    Ok(data)
}

/// Writes `manifest.txt` and its referenced files into `dir`; returns the
/// manifest path.
pub fn save_dataset(dir: &Path, data: &Dataset) -> Result<PathBuf> {
    data.validate()?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut manifest = format!(
        "format = {MANIFEST_TAG}\nsamples = {}\nlabels = {}\nviews = {}\n",
        data.n_samples(),
        data.n_labels(),
        data.n_views()
    );
    for (v, view) in data.views.iter().enumerate() {
        if view.name.is_empty() || view.name.contains(char::is_whitespace) {
            return Err(Error::InvalidData(format!("view name `{}` must be a single word", view.name)));
        }
        let file = format!("view{v}_{}.txt", view.name);
        match &view.data {
            ViewData::Features { matrix, metric } => {
                write_matrix(&dir.join(&file), matrix)?;
                let _ = writeln!(manifest, "view = {} features {metric} {file}", view.name);
            }
            ViewData::Gram(m) => {
                write_matrix(&dir.join(&file), m)?;
                let _ = writeln!(manifest, "view = {} gram - {file}", view.name);
            }
        }
    }
    write_matrix(&dir.join("labels.txt"), &data.labels)?;
    manifest.push_str("labels_file = labels.txt\n");
    if let Some(truth) = &data.truth {
        write_matrix(&dir.join("truth.txt"), truth)?;
        manifest.push_str("truth_file = truth.txt\n");
    }
    atomic_write(&dir.join("split.txt"), format_split(&data.split).as_bytes())?;
    manifest.push_str("split_file = split.txt\n");
    let path = dir.join("manifest.txt");
    atomic_write(&path, manifest.as_bytes())?;
    Ok(path)
}
