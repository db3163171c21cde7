//! C ABI for the light-curve classifier.
//!
//! Conventions shared by every function:
//!
//! * [`LcnetDataset`] and [`LcnetModel`] are opaque handles. A handle
//!   returned through an out-parameter is owned by the caller and must be
//!   released with the matching `*_free` function; freeing null is a no-op.
//! * Fallible functions return an [`LcnetStatus`]. On failure a
//!   human-readable message is stored per thread and can be read with
//!   [`lcnet_last_error_message`] until the next library call from that
//!   thread.
//! * Strings cross the boundary as NUL-terminated UTF-8. Strings returned
//!   through out-parameters must be released with [`lcnet_string_free`].
//! * Pointer arguments must be valid for the duration of the call; null is
//!   rejected with [`LcnetStatus::NullArgument`] rather than dereferenced.
//! * Panics are caught at the boundary and reported as
//!   [`LcnetStatus::Panic`]; they never unwind into the caller.

// The safety contract above is uniform across the surface; per-function
// `# Safety` sections would only repeat it.
#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use lcnet::checkpoint::{CheckpointError, ModelCheckpoint};
use lcnet::ingest::{self, Dataset, IngestError, NUM_CLASSES};
use lcnet::metrics::{self, EvalError};
use lcnet::model::{self, ModelError};
use lcnet::preprocess::{preprocess_dataset, PreprocessConfig, PreprocessError};
use lcnet::synthgen;
use lcnet::trainer::{self, TrainConfig, TrainError};

/// Number of generalized classes; the length of one probability row.
pub const LCNET_CLASS_COUNT: usize = 5;

/// Result code of a fallible call. Anything other than `Ok` leaves an
/// explanation in [`lcnet_last_error_message`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LcnetStatus {
    /// The call succeeded.
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// The operating system reported an i/o failure.
    Io = 3,
    /// Input was rejected: bad schema, corrupt file, missing labels or an
    /// out-of-range value.
    Data = 4,
    /// A configuration value was out of range.
    Config = 5,
    /// The output buffer is smaller than the result.
    BufferTooSmall = 6,
    /// A panic was caught at the boundary; the handle that produced it
    /// should be considered unusable.
    Panic = 7,
}

/// An in-memory set of light curves, in first-appearance order. Opaque;
/// create with [`lcnet_dataset_from_csv`] or [`lcnet_dataset_synthetic`].
pub struct LcnetDataset {
    inner: Dataset,
}

/// A trained classifier plus the preprocessing settings it expects. Opaque;
/// create with [`lcnet_model_train`] or [`lcnet_model_load`].
pub struct LcnetModel {
    inner: ModelCheckpoint,
}

/// Training hyperparameters. Obtain defaults with
/// [`lcnet_train_options_default`] and override fields as needed.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct LcnetTrainOptions {
    /// LSTM hidden width per direction, at least 1.
    pub hidden_size: usize,
    /// Upper bound on training epochs.
    pub max_epochs: usize,
    /// Mini-batch size, at least 1.
    pub batch_size: usize,
    /// Adam learning rate.
    pub learning_rate: f64,
    /// Epochs without validation improvement before stopping early.
    pub patience: usize,
    /// Fraction of the input held out for validation, in (0, 1) exclusive.
    pub validation_fraction: f64,
    /// Seed for initialization, shuffling and the validation split.
    pub seed: u64,
    /// Weight classes by inverse frequency instead of uniformly.
    pub balanced_class_weights: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn fail(status: LcnetStatus, message: String) -> LcnetStatus {
    let text = CString::new(message)
        .unwrap_or_else(|_| c"error message contained an interior NUL".to_owned());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(text));
    status
}

fn ok() -> LcnetStatus {
    LAST_ERROR.with(|slot| slot.borrow_mut().take());
    LcnetStatus::Ok
}

/// Runs a body, translating both early-exit statuses and panics into plain
/// return codes so nothing unwinds across the ABI.
fn run(body: impl FnOnce() -> Result<LcnetStatus, LcnetStatus>) -> LcnetStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(status)) | Ok(Err(status)) => status,
        Err(payload) => {
            let what = payload
                .downcast_ref::<&str>()
                .map(|s| (*s).to_owned())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic payload".to_owned());
            fail(LcnetStatus::Panic, format!("internal panic: {what}"))
        }
    }
}

unsafe fn require<'a, T>(ptr: *const T, name: &str) -> Result<&'a T, LcnetStatus> {
    ptr.as_ref().ok_or_else(|| {
        fail(
            LcnetStatus::NullArgument,
            format!("{name} must not be null"),
        )
    })
}

unsafe fn require_out<'a, T>(ptr: *mut T, name: &str) -> Result<&'a mut T, LcnetStatus> {
    ptr.as_mut().ok_or_else(|| {
        fail(
            LcnetStatus::NullArgument,
            format!("{name} must not be null"),
        )
    })
}

unsafe fn require_str<'a>(ptr: *const c_char, name: &str) -> Result<&'a str, LcnetStatus> {
    if ptr.is_null() {
        return Err(fail(
            LcnetStatus::NullArgument,
            format!("{name} must not be null"),
        ));
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        fail(
            LcnetStatus::InvalidUtf8,
            format!("{name} is not valid UTF-8"),
        )
    })
}

fn ingest_status(e: &IngestError) -> LcnetStatus {
    match e {
        IngestError::Io(_) => LcnetStatus::Io,
        IngestError::Config(_) => LcnetStatus::Config,
        _ => LcnetStatus::Data,
    }
}

fn preprocess_status(e: &PreprocessError) -> LcnetStatus {
    match e {
        PreprocessError::InvalidConfig(_) => LcnetStatus::Config,
        _ => LcnetStatus::Data,
    }
}

fn train_status(e: &TrainError) -> LcnetStatus {
    match e {
        TrainError::Config(_) => LcnetStatus::Config,
        _ => LcnetStatus::Data,
    }
}

fn checkpoint_status(e: &CheckpointError) -> LcnetStatus {
    match e {
        CheckpointError::Io(_) => LcnetStatus::Io,
        _ => LcnetStatus::Data,
    }
}

fn eval_status(e: &EvalError) -> LcnetStatus {
    match e {
        EvalError::Preprocess(p) => preprocess_status(p),
        _ => LcnetStatus::Data,
    }
}

fn model_status(_: &ModelError) -> LcnetStatus {
    LcnetStatus::Data
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn lcnet_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Display name of a generalized class index (0-4) as a static string, or
/// null when the index is out of range. The index matches the position of
/// the class in every probability row and report array.
#[no_mangle]
pub extern "C" fn lcnet_class_name(class_index: usize) -> *const c_char {
    match class_index {
        0 => c"S-Like".as_ptr(),
        1 => c"Fast".as_ptr(),
        2 => c"Long".as_ptr(),
        3 => c"Periodic".as_ptr(),
        4 => c"Non-Periodic".as_ptr(),
        _ => std::ptr::null(),
    }
}

/// Explanation of the most recent failure on the calling thread, or null
/// when no failure has been recorded. The pointer stays valid until the
/// next library call from the same thread.
#[no_mangle]
pub extern "C" fn lcnet_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map_or(std::ptr::null(), |s| s.as_ptr())
    })
}

/// Reads a measurement table from a CSV file. With `has_labels` the class
/// column is required and remapped to the five generalized classes; without
/// it the dataset is prediction-only input. On success `*out_dataset`
/// receives a new handle.
#[no_mangle]
pub unsafe extern "C" fn lcnet_dataset_from_csv(
    path: *const c_char,
    has_labels: bool,
    out_dataset: *mut *mut LcnetDataset,
) -> LcnetStatus {
    run(|| {
        let out = require_out(out_dataset, "out_dataset")?;
        let path = require_str(path, "path")?;
        let file = File::open(path)
            .map_err(|e| fail(LcnetStatus::Io, format!("cannot open {path}: {e}")))?;
        let dataset = ingest::parse_table(BufReader::new(file), has_labels)
            .map_err(|e| fail(ingest_status(&e), format!("{path}: {e}")))?;
        *out = Box::into_raw(Box::new(LcnetDataset { inner: dataset }));
        Ok(ok())
    })
}

/// Writes a dataset in the tabular input format. With `include_labels` the
/// class column carries the original class ids, so the file can be read
/// back with `has_labels` set.
#[no_mangle]
pub unsafe extern "C" fn lcnet_dataset_to_csv(
    dataset: *const LcnetDataset,
    path: *const c_char,
    include_labels: bool,
) -> LcnetStatus {
    run(|| {
        let dataset = require(dataset, "dataset")?;
        let path = require_str(path, "path")?;
        let file = File::create(path)
            .map_err(|e| fail(LcnetStatus::Io, format!("cannot create {path}: {e}")))?;
        let mut writer = BufWriter::new(file);
        dataset
            .inner
            .write_csv(&mut writer, include_labels)
            .map_err(|e| fail(ingest_status(&e), format!("{path}: {e}")))?;
        writer
            .flush()
            .map_err(|e| fail(LcnetStatus::Io, format!("cannot write {path}: {e}")))?;
        Ok(ok())
    })
}

/// Generates a labeled synthetic dataset with `objects_per_class` objects
/// of each class. Deterministic: equal arguments give byte-identical
/// datasets.
#[no_mangle]
pub unsafe extern "C" fn lcnet_dataset_synthetic(
    objects_per_class: usize,
    seed: u64,
    out_dataset: *mut *mut LcnetDataset,
) -> LcnetStatus {
    run(|| {
        let out = require_out(out_dataset, "out_dataset")?;
        if objects_per_class == 0 {
            return Err(fail(
                LcnetStatus::Config,
                "objects_per_class must be at least 1".to_owned(),
            ));
        }
        let dataset = synthgen::generate_dataset(objects_per_class, seed);
        *out = Box::into_raw(Box::new(LcnetDataset { inner: dataset }));
        Ok(ok())
    })
}

/// Number of objects in the dataset, or 0 when `dataset` is null.
#[no_mangle]
pub unsafe extern "C" fn lcnet_dataset_len(dataset: *const LcnetDataset) -> usize {
    dataset.as_ref().map_or(0, |d| d.inner.len())
}

/// Object id at `index`; indices follow dataset order, the same order
/// prediction rows are written in.
#[no_mangle]
pub unsafe extern "C" fn lcnet_dataset_object_id(
    dataset: *const LcnetDataset,
    index: usize,
    out_object_id: *mut u64,
) -> LcnetStatus {
    run(|| {
        let dataset = require(dataset, "dataset")?;
        let out = require_out(out_object_id, "out_object_id")?;
        let curve = dataset.inner.curves.get(index).ok_or_else(|| {
            fail(
                LcnetStatus::Data,
                format!(
                    "index {index} out of range for {} objects",
                    dataset.inner.len()
                ),
            )
        })?;
        *out = curve.object_id;
        Ok(ok())
    })
}

/// Releases a dataset handle.
#[no_mangle]
pub unsafe extern "C" fn lcnet_dataset_free(dataset: *mut LcnetDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

/// The library defaults: hidden width 64, up to 50 epochs, batch 32,
/// learning rate 0.001, patience 5, a 10% validation split, seed 0 and
/// uniform class weights.
#[no_mangle]
pub extern "C" fn lcnet_train_options_default() -> LcnetTrainOptions {
    let cfg = TrainConfig::default();
    LcnetTrainOptions {
        hidden_size: 64,
        max_epochs: cfg.max_epochs,
        batch_size: cfg.batch_size,
        learning_rate: cfg.learning_rate,
        patience: cfg.patience,
        validation_fraction: 0.1,
        seed: cfg.seed,
        balanced_class_weights: false,
    }
}

/// Trains a classifier on a labeled dataset. A stratified validation split
/// is carved out of the input; initialization, shuffling and the split all
/// derive from `options->seed`, so equal inputs give equal models. Training
/// runs on the calling thread and may take a while for large inputs.
#[no_mangle]
pub unsafe extern "C" fn lcnet_model_train(
    dataset: *const LcnetDataset,
    options: *const LcnetTrainOptions,
    out_model: *mut *mut LcnetModel,
) -> LcnetStatus {
    run(|| {
        let dataset = require(dataset, "dataset")?;
        let options = require(options, "options")?;
        let out = require_out(out_model, "out_model")?;
        let (train_split, val_split) = ingest::split_train_validation(
            dataset.inner.clone(),
            options.validation_fraction,
            options.seed,
        )
        .map_err(|e| fail(ingest_status(&e), e.to_string()))?;
        let weights = options
            .balanced_class_weights
            .then(|| trainer::balanced_class_weights(&train_split.class_counts));
        let preprocess = PreprocessConfig::default();
        let (train_seqs, _) = preprocess_dataset(&train_split, &preprocess)
            .map_err(|e| fail(preprocess_status(&e), e.to_string()))?;
        let (val_seqs, _) = preprocess_dataset(&val_split, &preprocess)
            .map_err(|e| fail(preprocess_status(&e), e.to_string()))?;
        let cfg = TrainConfig {
            max_epochs: options.max_epochs,
            batch_size: options.batch_size,
            learning_rate: options.learning_rate,
            patience: options.patience,
            class_weights: weights,
            seed: options.seed,
            ..TrainConfig::default()
        };
        let (params, _) = trainer::train(options.hidden_size, &train_seqs, &val_seqs, &cfg, |_| {})
            .map_err(|e| fail(train_status(&e), e.to_string()))?;
        let checkpoint = ModelCheckpoint {
            params,
            sequence_length: preprocess.target_len,
            time_scale: preprocess.time_scale,
            seed: options.seed,
        };
        *out = Box::into_raw(Box::new(LcnetModel { inner: checkpoint }));
        Ok(ok())
    })
}

/// Loads a model checkpoint from a file.
#[no_mangle]
pub unsafe extern "C" fn lcnet_model_load(
    path: *const c_char,
    out_model: *mut *mut LcnetModel,
) -> LcnetStatus {
    run(|| {
        let out = require_out(out_model, "out_model")?;
        let path = require_str(path, "path")?;
        let checkpoint = ModelCheckpoint::load(Path::new(path))
            .map_err(|e| fail(checkpoint_status(&e), format!("{path}: {e}")))?;
        *out = Box::into_raw(Box::new(LcnetModel { inner: checkpoint }));
        Ok(ok())
    })
}

/// Saves a model checkpoint to a file. Loading it back reproduces the same
/// parameters bit for bit.
#[no_mangle]
pub unsafe extern "C" fn lcnet_model_save(
    model: *const LcnetModel,
    path: *const c_char,
) -> LcnetStatus {
    run(|| {
        let model = require(model, "model")?;
        let path = require_str(path, "path")?;
        model
            .inner
            .save(Path::new(path))
            .map_err(|e| fail(checkpoint_status(&e), format!("{path}: {e}")))?;
        Ok(ok())
    })
}

/// Hidden width per direction, or 0 when `model` is null.
#[no_mangle]
pub unsafe extern "C" fn lcnet_model_hidden_size(model: *const LcnetModel) -> usize {
    model.as_ref().map_or(0, |m| m.inner.params.hidden_size)
}

/// Class probabilities for every object, written row-major into
/// `out_probabilities`: one row of [`LCNET_CLASS_COUNT`] doubles per object
/// in dataset order, each row summing to 1. `capacity` is the buffer length
/// in doubles and must be at least `lcnet_dataset_len() * LCNET_CLASS_COUNT`.
/// `out_rows` may be null; when given it receives the number of rows
/// written.
#[no_mangle]
pub unsafe extern "C" fn lcnet_model_predict(
    model: *const LcnetModel,
    dataset: *const LcnetDataset,
    out_probabilities: *mut f64,
    capacity: usize,
    out_rows: *mut usize,
) -> LcnetStatus {
    run(|| {
        let model = require(model, "model")?;
        let dataset = require(dataset, "dataset")?;
        if out_probabilities.is_null() {
            return Err(fail(
                LcnetStatus::NullArgument,
                "out_probabilities must not be null".to_owned(),
            ));
        }
        let needed = dataset.inner.len() * NUM_CLASSES;
        if capacity < needed {
            return Err(fail(
                LcnetStatus::BufferTooSmall,
                format!("need {needed} doubles, got capacity {capacity}"),
            ));
        }
        let config = model.inner.preprocess_config(None);
        let (seqs, _) = preprocess_dataset(&dataset.inner, &config)
            .map_err(|e| fail(preprocess_status(&e), e.to_string()))?;
        let probs = model::predict(&model.inner.params, &seqs)
            .map_err(|e| fail(model_status(&e), e.to_string()))?;
        let out = std::slice::from_raw_parts_mut(out_probabilities, needed);
        for (row, p) in out.chunks_exact_mut(NUM_CLASSES).zip(&probs) {
            row.copy_from_slice(p);
        }
        if let Some(rows) = out_rows.as_mut() {
            *rows = probs.len();
        }
        Ok(ok())
    })
}

/// Evaluates the model on a labeled dataset and returns a JSON report with
/// accuracy, per-class ROC and PR AUC and the confusion matrix. A positive
/// `horizon_days` keeps only the measurements within that many days after
/// each object's first detection (objects without detections are dropped
/// and counted in the report); zero or negative uses full curves. On
/// success `*out_report_json` receives a NUL-terminated string owned by the
/// caller; release it with [`lcnet_string_free`].
#[no_mangle]
pub unsafe extern "C" fn lcnet_model_evaluate(
    model: *const LcnetModel,
    dataset: *const LcnetDataset,
    horizon_days: f64,
    out_report_json: *mut *mut c_char,
) -> LcnetStatus {
    run(|| {
        let model = require(model, "model")?;
        let dataset = require(dataset, "dataset")?;
        let out = require_out(out_report_json, "out_report_json")?;
        if horizon_days.is_nan() {
            return Err(fail(
                LcnetStatus::Config,
                "horizon_days must not be NaN".to_owned(),
            ));
        }
        let horizon = (horizon_days > 0.0).then_some(horizon_days);
        let config = model.inner.preprocess_config(horizon);
        let report = metrics::evaluate(&model.inner.params, &dataset.inner, &config)
            .map_err(|e| fail(eval_status(&e), e.to_string()))?;
        let json = CString::new(report.to_json())
            .map_err(|_| fail(LcnetStatus::Data, "report contained NUL".to_owned()))?;
        *out = json.into_raw();
        Ok(ok())
    })
}

/// Releases a string returned through an out-parameter.
#[no_mangle]
pub unsafe extern "C" fn lcnet_string_free(string: *mut c_char) {
    if !string.is_null() {
        drop(CString::from_raw(string));
    }
}

/// Releases a model handle.
#[no_mangle]
pub unsafe extern "C" fn lcnet_model_free(model: *mut LcnetModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use lcnet::ingest::GeneralizedClass;

    #[test]
    fn class_names_match_library_names() {
        for class in [
            GeneralizedClass::SLike,
            GeneralizedClass::Fast,
            GeneralizedClass::Long,
            GeneralizedClass::Periodic,
            GeneralizedClass::NonPeriodic,
        ] {
            let ptr = lcnet_class_name(class.index());
            assert!(!ptr.is_null());
            let name = unsafe { CStr::from_ptr(ptr) }.to_str().unwrap();
            assert_eq!(name, class.name());
        }
        assert!(lcnet_class_name(NUM_CLASSES).is_null());
    }

    #[test]
    fn class_count_matches_library() {
        assert_eq!(LCNET_CLASS_COUNT, NUM_CLASSES);
    }

    #[test]
    fn options_default_matches_train_config() {
        let opts = lcnet_train_options_default();
        let cfg = TrainConfig::default();
        assert_eq!(opts.max_epochs, cfg.max_epochs);
        assert_eq!(opts.batch_size, cfg.batch_size);
        assert_eq!(opts.learning_rate, cfg.learning_rate);
        assert_eq!(opts.patience, cfg.patience);
        assert_eq!(opts.hidden_size, 64);
        assert_eq!(opts.validation_fraction, 0.1);
        assert!(!opts.balanced_class_weights);
    }

    #[test]
    fn failure_stores_message_and_success_clears_it() {
        let status = fail(LcnetStatus::Config, "synthetic failure".to_owned());
        assert_eq!(status, LcnetStatus::Config);
        let message = unsafe { CStr::from_ptr(lcnet_last_error_message()) };
        assert_eq!(message.to_str().unwrap(), "synthetic failure");
        assert_eq!(ok(), LcnetStatus::Ok);
        assert!(lcnet_last_error_message().is_null());
    }
}
