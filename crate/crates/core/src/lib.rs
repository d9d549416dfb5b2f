//! Multi-view vector-valued manifold regularization for semi-supervised
//! multi-label classification.

pub mod cli;
pub mod dataset;
pub mod error;
pub mod graph;
pub mod io;
pub mod kernel;
pub mod linalg;
pub mod metrics;
pub mod optimizer;
pub mod simplex;
pub mod synth;
pub mod trainer;

pub use cli::run_cli;
pub use dataset::{Dataset, Split, View, ViewData};
pub use error::{Error, Result};
pub use trainer::{fit, fit_uniform_baseline, ModelState, TrainConfig};
