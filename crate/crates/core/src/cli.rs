//! Command-line interface: `train`, `predict`, `evaluate`, `compare` and
//! `synth`.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use log::info;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::io::{self, atomic_write, fmt_f64};
use crate::linalg::Matrix;
use crate::metrics::{evaluate, EvaluationReport};
use crate::synth::{generate_synthetic, load_spec, random_split};
use crate::trainer::{fit, fit_uniform_baseline, ModelState, TrainConfig};

#[derive(Debug, Parser)]
#[command(name = "mv3mr", version, about = "Multi-view vector-valued manifold regularization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit a model and write it together with its objective trace.
    Train {
        #[arg(long)]
        manifest: PathBuf,
        /// key = value training configuration (defaults when omitted).
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out_model: PathBuf,
        /// One objective value per line.
        #[arg(long)]
        out_trace: Option<PathBuf>,
    },
    /// Score the rows of a split with a trained model.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        /// labeled, unlabeled, test or train.
        #[arg(long, default_value = "test")]
        split: String,
        #[arg(long)]
        out_scores: PathBuf,
    },
    /// Compute mAP, mAUC and ranking loss of a score file.
    Evaluate {
        #[arg(long)]
        scores: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value = "test")]
        split: String,
        #[arg(long)]
        out_report: Option<PathBuf>,
    },
    /// Learned weights against the uniform baseline over random labeled subsets.
    Compare {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        labeled_count: usize,
        #[arg(long, default_value_t = 10)]
        repeats: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out_table: PathBuf,
    },
    /// Generate a synthetic dataset.
    Synth {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit status.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn config_or_default(path: Option<&Path>) -> Result<TrainConfig> {
    match path {
        Some(p) => io::load_config(p),
        None => Ok(TrainConfig::default()),
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Train {
            manifest,
            config,
            out_model,
            out_trace,
        } => {
            let data = io::load_dataset(&manifest)?;
            let cfg = config_or_default(config.as_deref())?;
            let model = fit(&data, &cfg)?;
            info!(
                "trained in {} outer iterations (stop: {}), beta {:?}, theta {:?}",
                model.objective_trace.len() - 1,
                model.stop,
                model.beta,
                model.theta
            );
            io::save_model(&out_model, &model)?;
            if let Some(path) = out_trace {
                let text: String = model.objective_trace.iter().map(|&o| fmt_f64(o) + "\n").collect();
                atomic_write(&path, text.as_bytes())?;
            }
            Ok(())
        }
        Command::Predict {
            model,
            manifest,
            split,
            out_scores,
        } => {
            let model = io::load_model(&model)?;
            let data = io::load_dataset(&manifest)?;
            let rows = data.split.by_name(&split)?;
            let prediction = model.predict_rows(&data, &rows)?;
            io::write_matrix(&out_scores, &prediction.scores)
        }
        Command::Evaluate {
            scores,
            manifest,
            split,
            out_report,
        } => {
            let scores = io::read_matrix(&scores)?;
            let data = io::load_dataset(&manifest)?;
            let rows = data.split.by_name(&split)?;
            let report = evaluate(&scores, &data.truth_rows(&rows)?)?;
            let text = format_report(&report);
            match out_report {
                Some(path) => atomic_write(&path, text.as_bytes()),
                None => {
                    print!("{text}");
                    Ok(())
                }
            }
        }
        Command::Compare {
            manifest,
            config,
            labeled_count,
            repeats,
            seed,
            out_table,
        } => {
            let data = io::load_dataset(&manifest)?;
            let cfg = config_or_default(config.as_deref())?;
            let table = compare(&data, &cfg, labeled_count, repeats, seed)?;
            atomic_write(&out_table, table.as_bytes())
        }
        Command::Synth { spec, out_dir } => {
            let spec = load_spec(&spec)?;
            let data = generate_synthetic(&spec)?;
            io::save_dataset(&out_dir, &data)?;
            Ok(())
        }
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "undefined".to_string(), fmt_f64)
}

/// `key=value` lines: aggregates first, then per-label values.
pub fn format_report(report: &EvaluationReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "mAP={}", opt(report.mean_ap.map(|m| m.mean)));
    let _ = writeln!(out, "mAUC={}", opt(report.mean_auc.map(|m| m.mean)));
    let _ = writeln!(out, "RL={}", opt(report.ranking_loss.map(|r| r.value)));
    let _ = writeln!(out, "AP_invalid={}", report.ap.iter().filter(|v| v.is_none()).count());
    let _ = writeln!(out, "AUC_invalid={}", report.auc.iter().filter(|v| v.is_none()).count());
    if let Some(rl) = report.ranking_loss {
        let _ = writeln!(out, "RL_excluded={}", rl.excluded);
    }
    for (j, v) in report.ap.iter().enumerate() {
        let _ = writeln!(out, "AP[{j}]={}", opt(*v));
    }
    for (j, v) in report.auc.iter().enumerate() {
        let _ = writeln!(out, "AUC[{j}]={}", opt(*v));
    }
    out
}

/// Scores used to evaluate a model: inductive on the test split when it
/// is non-empty, transductive on the unlabeled rows otherwise.
fn held_out_scores(model: &ModelState, data: &Dataset) -> Result<(Matrix, Vec<usize>)> {
    if data.split.test.is_empty() {
        let scores = model.predict_transductive().scores;
        let l = model.n_labeled;
        let rows = model.train_indices[l..].to_vec();
        Ok((scores.rows(l, rows.len()).into_owned(), rows))
    } else {
        let rows = data.split.test.clone();
        Ok((model.predict_rows(data, &rows)?.scores, rows))
    }
}

fn evaluate_model(model: &ModelState, data: &Dataset) -> Result<EvaluationReport> {
    let (scores, rows) = held_out_scores(model, data)?;
    evaluate(&scores, &data.truth_rows(&rows)?)
}

/// Runs the paired learned-vs-uniform protocol and returns the table text.
pub fn compare(
    data: &Dataset,
    cfg: &TrainConfig,
    labeled_count: usize,
    repeats: usize,
    seed: u64,
) -> Result<String> {
    if repeats == 0 {
        return Err(Error::param("repeats", "must be at least 1"));
    }
    let pool = data.split.training();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let views = data.n_views();
    let mut out = String::from("repeat learned_mAP uniform_mAP learned_mAUC uniform_mAUC learned_RL uniform_RL");
    for v in 0..views {
        let _ = write!(out, " beta[{v}]");
    }
    for v in 0..views {
        let _ = write!(out, " theta[{v}]");
    }
    out.push('\n');
    for r in 0..repeats {
        let split = random_split(&pool, labeled_count, &data.split.test, &mut rng)?;
        let subset = data.relabeled(split)?;
        let learned = fit(&subset, cfg)?;
        let uniform = fit_uniform_baseline(&subset, cfg)?;
        let a = evaluate_model(&learned, &subset)?;
        let b = evaluate_model(&uniform, &subset)?;
        let _ = write!(
            out,
            "{r} {} {} {} {} {} {}",
            opt(a.mean_ap.map(|m| m.mean)),
            opt(b.mean_ap.map(|m| m.mean)),
            opt(a.mean_auc.map(|m| m.mean)),
            opt(b.mean_auc.map(|m| m.mean)),
            opt(a.ranking_loss.map(|x| x.value)),
            opt(b.ranking_loss.map(|x| x.value)),
        );
        for w in learned.beta.iter().chain(&learned.theta) {
            let _ = write!(out, " {}", fmt_f64(*w));
        }
        out.push('\n');
        info!("repeat {r}: learned mAP {:?}, uniform mAP {:?}", a.mean_ap, b.mean_ap);
    }
    Ok(out)
}
