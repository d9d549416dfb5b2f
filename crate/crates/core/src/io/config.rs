//! Training configuration files: `key = value` lines named after the
//! [`TrainConfig`] fields. Missing keys keep their defaults.

use std::path::Path;

use super::{fmt_f64, key_values, parse_value, read_text};
use crate::error::{Error, Result};
use crate::trainer::TrainConfig;

pub fn parse_config(text: &str, path: &Path) -> Result<TrainConfig> {
    let mut cfg = TrainConfig::default();
    for (line, key, value) in key_values(text, path)? {
        match key {
            "gamma_a" => cfg.gamma_a = parse_value(value, path, line, key)?,
            "gamma_i" => cfg.gamma_i = parse_value(value, path, line, key)?,
            "gamma_b" => cfg.gamma_b = parse_value(value, path, line, key)?,
            "gamma_c" => cfg.gamma_c = parse_value(value, path, line, key)?,
            "gamma_o" => cfg.gamma_o = parse_value(value, path, line, key)?,
            "k_in" => cfg.k_in = parse_value(value, path, line, key)?,
            "k_out" => cfg.k_out = parse_value(value, path, line, key)?,
            "loss" => cfg.loss = parse_value(value, path, line, key)?,
            "normalized_laplacian" => cfg.normalized_laplacian = parse_value(value, path, line, key)?,
            "stop_threshold" => cfg.stop_threshold = parse_value(value, path, line, key)?,
            "max_outer_iter" => cfg.max_outer_iter = parse_value(value, path, line, key)?,
            "ridge_scale" => cfg.ridge_scale = parse_value(value, path, line, key)?,
            "seed" => cfg.seed = parse_value(value, path, line, key)?,
            other => {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line,
                    message: format!("unknown config key `{other}`"),
                })
            }
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<TrainConfig> {
    parse_config(&read_text(path)?, path)
}

pub fn format_config(cfg: &TrainConfig) -> String {
    format!(
        "gamma_a = {}\ngamma_i = {}\ngamma_b = {}\ngamma_c = {}\ngamma_o = {}\nk_in = {}\nk_out = {}\n\
         loss = {}\nnormalized_laplacian = {}\nstop_threshold = {}\nmax_outer_iter = {}\n\
         ridge_scale = {}\nseed = {}\n",
        fmt_f64(cfg.gamma_a),
        fmt_f64(cfg.gamma_i),
        fmt_f64(cfg.gamma_b),
        fmt_f64(cfg.gamma_c),
        fmt_f64(cfg.gamma_o),
        cfg.k_in,
        cfg.k_out,
        cfg.loss,
        cfg.normalized_laplacian,
        fmt_f64(cfg.stop_threshold),
        cfg.max_outer_iter,
        fmt_f64(cfg.ridge_scale),
        cfg.seed,
    )
}
