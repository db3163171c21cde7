//! Command-line interface: synthesize datasets, train, evaluate, predict,
//! and run the gradient self-check.
//!
//! Exit codes: 0 on success, 1 on usage or configuration errors, 2 on data
//! errors (unreadable files, malformed tables, corrupt checkpoints). Every
//! command logs its resolved configuration to stderr as a `run-config`
//! line, so unreported hyperparameters are always reproducible from the
//! log.

use clap::{Parser, Subcommand};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::checkpoint::{CheckpointError, ModelCheckpoint};
use crate::gradcheck;
use crate::ingest::{self, Dataset, GeneralizedClass, IngestError, NUM_CLASSES};
use crate::linalg::argmax;
use crate::metrics::{self, EvalError, MetricsError};
use crate::model::{predict, ModelError};
use crate::preprocess::{preprocess_dataset, PreprocessConfig, PreprocessError};
use crate::synthgen::generate_dataset;
use crate::trainer::{balanced_class_weights, train, TrainConfig, TrainError};

#[derive(Debug, Parser)]
#[command(name = "lcnet", version, about = "Light-curve sequence classifier")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a labeled synthetic dataset in the ingestion CSV schema.
    Synth {
        /// Objects to generate per class (five classes).
        #[arg(long)]
        n_per_class: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a classifier on a labeled CSV table.
    Train {
        /// Labeled input table.
        #[arg(long)]
        data: PathBuf,
        /// Fraction of objects held out for validation, stratified by
        /// class.
        #[arg(long, default_value_t = 0.1)]
        val_fraction: f64,
        /// LSTM hidden size per direction.
        #[arg(long, default_value_t = 64)]
        hidden: usize,
        #[arg(long, default_value_t = 50)]
        epochs: usize,
        #[arg(long, default_value_t = 32)]
        batch: usize,
        #[arg(long, default_value_t = 0.001)]
        lr: f64,
        /// Early-stopping patience in epochs.
        #[arg(long, default_value_t = 5)]
        patience: usize,
        /// `balanced` or five comma-separated positive weights.
        #[arg(long)]
        class_weights: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Checkpoint output path.
        #[arg(long)]
        out: PathBuf,
        /// Optional file for the line-delimited epoch history.
        #[arg(long)]
        history: Option<PathBuf>,
    },
    /// Evaluate a trained model on a labeled table.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Keep only measurements within this many days after the first
        /// detection.
        #[arg(long)]
        horizon_days: Option<f64>,
        /// Report output path (JSON).
        #[arg(long)]
        report: PathBuf,
        /// ROC and PR curve points output path (CSV).
        #[arg(long)]
        curves: PathBuf,
    },
    /// Write per-object class probabilities for a table (labels optional).
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Probabilities output path (CSV).
        #[arg(long)]
        out: PathBuf,
    },
    /// Verify analytic gradients against central finite differences.
    Gradcheck {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// Program errors split by exit code.
#[derive(Debug)]
pub enum AppError {
    /// Bad flags or configuration: exit 1.
    Usage(String),
    /// Unreadable or malformed inputs: exit 2.
    Data(String),
}

impl From<IngestError> for AppError {
    fn from(e: IngestError) -> Self {
        match e {
            IngestError::Config(m) => AppError::Usage(m),
            other => AppError::Data(other.to_string()),
        }
    }
}

impl From<PreprocessError> for AppError {
    fn from(e: PreprocessError) -> Self {
        match e {
            PreprocessError::InvalidConfig(m) => AppError::Usage(m),
            other => AppError::Data(other.to_string()),
        }
    }
}

impl From<TrainError> for AppError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::Config(m) => AppError::Usage(m),
            other => AppError::Data(other.to_string()),
        }
    }
}

impl From<CheckpointError> for AppError {
    fn from(e: CheckpointError) -> Self {
        AppError::Data(e.to_string())
    }
}

impl From<ModelError> for AppError {
    fn from(e: ModelError) -> Self {
        AppError::Data(e.to_string())
    }
}

impl From<MetricsError> for AppError {
    fn from(e: MetricsError) -> Self {
        AppError::Data(e.to_string())
    }
}

impl From<EvalError> for AppError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Preprocess(p) => p.into(),
            other => AppError::Data(other.to_string()),
        }
    }
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    match execute(cli.command) {
        Ok(()) => 0,
        Err(AppError::Usage(message)) => {
            eprintln!("error: {message}");
            1
        }
        Err(AppError::Data(message)) => {
            eprintln!("error: {message}");
            2
        }
    }
}

fn open_input(path: &Path) -> Result<BufReader<File>, AppError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| AppError::Data(format!("cannot read {}: {e}", path.display())))
}

fn create_output(path: &Path) -> Result<BufWriter<File>, AppError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| AppError::Data(format!("cannot write {}: {e}", path.display())))
}

/// The table header decides whether labels are expected; reads one line.
fn table_has_labels(path: &Path) -> Result<bool, AppError> {
    let mut header = String::new();
    open_input(path)?
        .read_line(&mut header)
        .map_err(|e| AppError::Data(format!("cannot read {}: {e}", path.display())))?;
    Ok(header
        .split(',')
        .map(|c| c.trim().to_ascii_lowercase())
        .any(|c| c == "class" || c == "target"))
}

fn read_dataset(path: &Path, has_labels: bool) -> Result<Dataset, AppError> {
    let reader = open_input(path)?;
    ingest::parse_table(reader, has_labels).map_err(|e| match e.into() {
        AppError::Data(m) => AppError::Data(format!("{}: {m}", path.display())),
        usage => usage,
    })
}

fn parse_class_weights(
    raw: &str,
    train_counts: &[usize; NUM_CLASSES],
) -> Result<[f64; NUM_CLASSES], AppError> {
    if raw == "balanced" {
        return Ok(balanced_class_weights(train_counts));
    }
    let parts: Vec<&str> = raw.split(',').collect();
    if parts.len() != NUM_CLASSES {
        return Err(AppError::Usage(format!(
            "--class-weights expects `balanced` or {NUM_CLASSES} comma-separated values, got `{raw}`"
        )));
    }
    let mut weights = [0.0; NUM_CLASSES];
    for (w, part) in weights.iter_mut().zip(&parts) {
        *w = part
            .trim()
            .parse::<f64>()
            .map_err(|_| AppError::Usage(format!("class weight `{part}` is not a number")))?;
        if !(w.is_finite() && *w > 0.0) {
            return Err(AppError::Usage(format!(
                "class weight `{part}` must be positive"
            )));
        }
    }
    Ok(weights)
}

const PROB_HEADERS: [&str; NUM_CLASSES] = [
    "p_s_like",
    "p_fast",
    "p_long",
    "p_periodic",
    "p_non_periodic",
];

fn execute(command: Command) -> Result<(), AppError> {
    match command {
        Command::Synth {
            n_per_class,
            seed,
            out,
        } => {
            eprintln!(
                "run-config synth n_per_class={n_per_class} seed={seed} out={}",
                out.display()
            );
            if n_per_class < 1 {
                return Err(AppError::Usage("--n-per-class must be at least 1".into()));
            }
            let dataset = generate_dataset(n_per_class, seed);
            let mut writer = create_output(&out)?;
            dataset
                .write_csv(&mut writer, true)
                .map_err(|e| AppError::Data(format!("cannot write {}: {e}", out.display())))?;
            writer
                .flush()
                .map_err(|e| AppError::Data(format!("cannot write {}: {e}", out.display())))?;
            eprintln!(
                "synth: wrote {} objects to {}",
                dataset.len(),
                out.display()
            );
            Ok(())
        }
        Command::Train {
            data,
            val_fraction,
            hidden,
            epochs,
            batch,
            lr,
            patience,
            class_weights,
            seed,
            out,
            history,
        } => {
            eprintln!(
                "run-config train data={} val_fraction={val_fraction} hidden={hidden} \
                 epochs={epochs} batch={batch} lr={lr} patience={patience} \
                 class_weights={} seed={seed} out={}",
                data.display(),
                class_weights.as_deref().unwrap_or("none"),
                out.display()
            );
            let dataset = read_dataset(&data, true)?;
            let (train_split, val_split) =
                ingest::split_train_validation(dataset, val_fraction, seed)?;
            let weights = class_weights
                .as_deref()
                .map(|raw| parse_class_weights(raw, &train_split.class_counts))
                .transpose()?;

            let preprocess = PreprocessConfig::default();
            let (train_seqs, _) = preprocess_dataset(&train_split, &preprocess)?;
            let (val_seqs, _) = preprocess_dataset(&val_split, &preprocess)?;

            let cfg = TrainConfig {
                max_epochs: epochs,
                batch_size: batch,
                learning_rate: lr,
                patience,
                class_weights: weights,
                seed,
                ..TrainConfig::default()
            };
            let mut history_lines = Vec::new();
            let (params, train_history) = train(hidden, &train_seqs, &val_seqs, &cfg, |record| {
                let line = format!(
                    "epoch={} train_loss={:.6} val_loss={:.6} val_acc={:.4}",
                    record.epoch, record.train_loss, record.val_loss, record.val_accuracy
                );
                eprintln!("{line}");
                history_lines.push(line);
            })?;

            if let Some(history_path) = history {
                let mut writer = create_output(&history_path)?;
                for line in &history_lines {
                    writeln!(writer, "{line}").map_err(|e| {
                        AppError::Data(format!("cannot write {}: {e}", history_path.display()))
                    })?;
                }
                writer.flush().map_err(|e| {
                    AppError::Data(format!("cannot write {}: {e}", history_path.display()))
                })?;
            }

            let checkpoint = ModelCheckpoint {
                params,
                sequence_length: preprocess.target_len,
                time_scale: preprocess.time_scale,
                seed,
            };
            checkpoint.save(&out)?;
            eprintln!(
                "train: best_epoch={} stopped_early={} model={}",
                train_history.best_epoch,
                train_history.stopped_early,
                out.display()
            );
            Ok(())
        }
        Command::Eval {
            model,
            data,
            horizon_days,
            report,
            curves,
        } => {
            eprintln!(
                "run-config eval model={} data={} horizon_days={} report={} curves={}",
                model.display(),
                data.display(),
                horizon_days.map_or("none".to_string(), |h| h.to_string()),
                report.display(),
                curves.display()
            );
            let checkpoint = ModelCheckpoint::load(&model)?;
            let dataset = read_dataset(&data, true)?;
            let config = checkpoint.preprocess_config(horizon_days);
            let eval_report = metrics::evaluate(&checkpoint.params, &dataset, &config)?;

            let mut report_writer = create_output(&report)?;
            report_writer
                .write_all(eval_report.to_json().as_bytes())
                .and_then(|_| report_writer.flush())
                .map_err(|e| AppError::Data(format!("cannot write {}: {e}", report.display())))?;

            let mut curves_writer = create_output(&curves)?;
            metrics::write_curves_csv(&eval_report.curves, &mut curves_writer)
                .and_then(|_| curves_writer.flush())
                .map_err(|e| AppError::Data(format!("cannot write {}: {e}", curves.display())))?;

            eprintln!(
                "eval: n_objects={} accuracy={:.4} dropped={}",
                eval_report.n_objects,
                eval_report.accuracy,
                eval_report.dropped_no_detection.len()
            );
            Ok(())
        }
        Command::Predict { model, data, out } => {
            eprintln!(
                "run-config predict model={} data={} out={}",
                model.display(),
                data.display(),
                out.display()
            );
            let checkpoint = ModelCheckpoint::load(&model)?;
            let has_labels = table_has_labels(&data)?;
            let dataset = read_dataset(&data, has_labels)?;
            let config = checkpoint.preprocess_config(None);
            let (seqs, _) = preprocess_dataset(&dataset, &config)?;
            let probs = predict(&checkpoint.params, &seqs)?;

            let mut writer = create_output(&out)?;
            let write_err =
                |e: std::io::Error| AppError::Data(format!("cannot write {}: {e}", out.display()));
            writeln!(
                writer,
                "object_id,{},predicted_class",
                PROB_HEADERS.join(",")
            )
            .map_err(write_err)?;
            for (seq, p) in seqs.iter().zip(&probs) {
                let cells: Vec<String> = p.iter().map(|v| format!("{v:.8e}")).collect();
                let predicted = GeneralizedClass::from_index(argmax(p)).unwrap();
                writeln!(
                    writer,
                    "{},{},{}",
                    seq.object_id,
                    cells.join(","),
                    predicted.name()
                )
                .map_err(write_err)?;
            }
            writer.flush().map_err(write_err)?;
            eprintln!("predict: wrote {} rows to {}", seqs.len(), out.display());
            Ok(())
        }
        Command::Gradcheck { seed } => {
            eprintln!("run-config gradcheck seed={seed}");
            let report = gradcheck::run(seed)?;
            println!(
                "max relative error {:.3e} over {} parameters (worst index {})",
                report.max_rel_err, report.param_count, report.worst_param
            );
            if report.passed() {
                Ok(())
            } else {
                Err(AppError::Data(format!(
                    "gradient check failed: max relative error {:.3e} exceeds {:.0e}",
                    report.max_rel_err,
                    gradcheck::REL_ERR_TOLERANCE
                )))
            }
        }
    }
}
