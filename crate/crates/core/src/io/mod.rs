//! Plain-text, line-oriented file formats.
//!
//! Every floating-point value is written with 17 significant digits so
//! that `load(save(x)) == x` holds bit for bit.

mod config;
mod manifest;
mod matrix;
mod model;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

pub use config::{format_config, load_config, parse_config};
pub use manifest::{load_dataset, parse_split, save_dataset, format_split, MANIFEST_TAG};
pub use matrix::{format_matrix, parse_matrix, read_matrix, write_matrix};
pub use model::{format_model, load_model, parse_model, save_model, MODEL_TAG};

use crate::error::{Error, Result};

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub(crate) fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Writes `contents` to a temporary file next to `path` and renames it
/// into place, so readers never observe a partial file.
pub fn atomic_write(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| Error::InvalidData(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut file = fs::File::create(&tmp)?;
        file.write_all(contents)?;
        file.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(Error::io(path, e));
    }
    Ok(())
}

/// Non-blank, non-comment lines with their 1-based line numbers.
pub(crate) fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

/// `key = value` pairs in file order.
pub(crate) fn key_values<'a>(text: &'a str, path: &Path) -> Result<Vec<(usize, &'a str, &'a str)>> {
    content_lines(text)
        .map(|(line, l)| {
            let (k, v) = l.split_once('=').ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                line,
                message: format!("expected `key = value`, got `{l}`"),
            })?;
            Ok((line, k.trim(), v.trim()))
        })
        .collect()
}

pub(crate) fn parse_value<T: std::str::FromStr>(value: &str, path: &Path, line: usize, what: &str) -> Result<T> {
    value.parse().map_err(|_| Error::Parse {
        path: path.to_path_buf(),
        line,
        message: format!("invalid {what} `{value}`"),
    })
}
