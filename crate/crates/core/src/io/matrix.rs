//! Matrix files: a `rows cols` header, then one whitespace-separated line
//! per row.

use std::fmt::Write as _;
use std::path::Path;

use super::{atomic_write, content_lines, fmt_f64, parse_value, read_text};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

pub fn format_matrix(m: &Matrix) -> String {
    let mut out = format!("{} {}\n", m.nrows(), m.ncols());
    for row in m.row_iter() {
        let line: Vec<String> = row.iter().map(|&v| fmt_f64(v)).collect();
        let _ = writeln!(out, "{}", line.join(" "));
    }
    out
}

/// Parses a matrix, reporting errors against `path`.
pub fn parse_matrix(text: &str, path: &Path) -> Result<Matrix> {
    let mut lines = content_lines(text);
    let err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let (line, header) = lines.next().ok_or_else(|| err(1, "empty matrix file".into()))?;
    let dims: Vec<&str> = header.split_whitespace().collect();
    if dims.len() != 2 {
        return Err(err(line, format!("expected `rows cols`, got `{header}`")));
    }
    let rows: usize = parse_value(dims[0], path, line, "row count")?;
    let cols: usize = parse_value(dims[1], path, line, "column count")?;
    let mut data = Vec::with_capacity(rows * cols);
    let mut last = line;
    for r in 0..rows {
        let (line, text) = lines
            .next()
            .ok_or_else(|| err(last + 1, format!("expected {rows} rows, found {r}")))?;
        last = line;
        let before = data.len();
        for tok in text.split_whitespace() {
            let v: f64 = parse_value(tok, path, line, "number")?;
            if !v.is_finite() {
                return Err(err(line, format!("non-finite value `{tok}`")));
            }
            data.push(v);
        }
        if data.len() - before != cols {
            return Err(err(line, format!("expected {cols} values, found {}", data.len() - before)));
        }
    }
    if let Some((line, _)) = lines.next() {
        return Err(err(line, format!("unexpected content after {rows} rows")));
    }
    Ok(Matrix::from_row_slice(rows, cols, &data))
}

pub fn read_matrix(path: &Path) -> Result<Matrix> {
    parse_matrix(&read_text(path)?, path)
}

pub fn write_matrix(path: &Path, m: &Matrix) -> Result<()> {
    atomic_write(path, format_matrix(m).as_bytes())
}
