//! Exercises the C ABI the way a foreign caller would: raw pointers,
//! status codes and out-parameters, no Rust convenience APIs.

use std::ffi::{CStr, CString};
use std::ptr;

use lcnet_ffi::{
    lcnet_class_name, lcnet_dataset_free, lcnet_dataset_from_csv, lcnet_dataset_len,
    lcnet_dataset_object_id, lcnet_dataset_synthetic, lcnet_dataset_to_csv,
    lcnet_last_error_message, lcnet_model_evaluate, lcnet_model_free, lcnet_model_hidden_size,
    lcnet_model_load, lcnet_model_predict, lcnet_model_save, lcnet_model_train, lcnet_string_free,
    lcnet_train_options_default, lcnet_version, LcnetDataset, LcnetModel, LcnetStatus,
    LCNET_CLASS_COUNT,
};

fn last_error() -> String {
    let ptr = lcnet_last_error_message();
    assert!(!ptr.is_null(), "expected an error message");
    unsafe { CStr::from_ptr(ptr) }.to_str().unwrap().to_owned()
}

fn c_path(path: &std::path::Path) -> CString {
    CString::new(path.to_str().unwrap()).unwrap()
}

#[test]
fn version_is_a_static_string() {
    let version = unsafe { CStr::from_ptr(lcnet_version()) };
    assert_eq!(version.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn null_and_invalid_arguments_are_reported() {
    unsafe {
        let mut dataset: *mut LcnetDataset = ptr::null_mut();
        let mut model: *mut LcnetModel = ptr::null_mut();

        let status = lcnet_dataset_from_csv(ptr::null(), true, &mut dataset);
        assert_eq!(status, LcnetStatus::NullArgument);
        assert!(last_error().contains("path"));

        let status = lcnet_dataset_synthetic(4, 1, ptr::null_mut());
        assert_eq!(status, LcnetStatus::NullArgument);
        assert!(last_error().contains("out_dataset"));

        let status = lcnet_dataset_synthetic(0, 1, &mut dataset);
        assert_eq!(status, LcnetStatus::Config);
        assert!(last_error().contains("objects_per_class"));

        let missing = CString::new("/nonexistent/lcnet.csv").unwrap();
        let status = lcnet_dataset_from_csv(missing.as_ptr(), true, &mut dataset);
        assert_eq!(status, LcnetStatus::Io);
        assert!(last_error().contains("/nonexistent/lcnet.csv"));

        let status = lcnet_model_load(missing.as_ptr(), &mut model);
        assert_eq!(status, LcnetStatus::Io);

        // A non-UTF-8 path never reaches the filesystem.
        let bad = CString::new(vec![0xFFu8, 0xFE]).unwrap();
        let status = lcnet_dataset_from_csv(bad.as_ptr(), true, &mut dataset);
        assert_eq!(status, LcnetStatus::InvalidUtf8);

        assert_eq!(lcnet_dataset_len(ptr::null()), 0);
        assert_eq!(lcnet_model_hidden_size(ptr::null()), 0);

        // Freeing null is defined as a no-op.
        lcnet_dataset_free(ptr::null_mut());
        lcnet_model_free(ptr::null_mut());
        lcnet_string_free(ptr::null_mut());
    }
}

#[test]
fn corrupt_checkpoints_are_data_errors() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("junk.ckpt");
    std::fs::write(&path, b"not a checkpoint").unwrap();
    let path = c_path(&path);
    let mut model: *mut LcnetModel = ptr::null_mut();
    let status = unsafe { lcnet_model_load(path.as_ptr(), &mut model) };
    assert_eq!(status, LcnetStatus::Data);
    assert!(model.is_null());
}

#[test]
fn bad_training_options_are_config_errors() {
    unsafe {
        let mut dataset: *mut LcnetDataset = ptr::null_mut();
        assert_eq!(lcnet_dataset_synthetic(4, 9, &mut dataset), LcnetStatus::Ok);
        let mut options = lcnet_train_options_default();
        options.validation_fraction = 1.5;
        let mut model: *mut LcnetModel = ptr::null_mut();
        let status = lcnet_model_train(dataset, &options, &mut model);
        assert_eq!(status, LcnetStatus::Config);
        assert!(last_error().contains("fraction"));
        assert!(model.is_null());
        lcnet_dataset_free(dataset);
    }
}

#[test]
fn synthetic_train_predict_evaluate_round_trip() {
    unsafe {
        let mut dataset: *mut LcnetDataset = ptr::null_mut();
        assert_eq!(lcnet_dataset_synthetic(5, 3, &mut dataset), LcnetStatus::Ok);
        let n = lcnet_dataset_len(dataset);
        assert_eq!(n, 25);

        let mut object_id = 0u64;
        assert_eq!(
            lcnet_dataset_object_id(dataset, 0, &mut object_id),
            LcnetStatus::Ok
        );
        assert!(object_id > 0);
        assert_eq!(
            lcnet_dataset_object_id(dataset, n, &mut object_id),
            LcnetStatus::Data
        );
        assert!(last_error().contains("out of range"));

        let mut options = lcnet_train_options_default();
        options.hidden_size = 6;
        options.max_epochs = 3;
        options.batch_size = 8;
        options.validation_fraction = 0.2;
        options.seed = 4;
        options.balanced_class_weights = true;
        let mut model: *mut LcnetModel = ptr::null_mut();
        assert_eq!(
            lcnet_model_train(dataset, &options, &mut model),
            LcnetStatus::Ok
        );
        assert_eq!(lcnet_model_hidden_size(model), 6);

        // Probability rows: buffer sizing is checked before any work.
        let mut probs = vec![0.0f64; n * LCNET_CLASS_COUNT];
        let status = lcnet_model_predict(model, dataset, probs.as_mut_ptr(), n, ptr::null_mut());
        assert_eq!(status, LcnetStatus::BufferTooSmall);
        assert!(last_error().contains("doubles"));
        let mut rows = 0usize;
        assert_eq!(
            lcnet_model_predict(model, dataset, probs.as_mut_ptr(), probs.len(), &mut rows),
            LcnetStatus::Ok
        );
        assert_eq!(rows, n);
        for row in probs.chunks_exact(LCNET_CLASS_COUNT) {
            assert!(row.iter().all(|&p| (0.0..=1.0).contains(&p)));
            assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        }

        // Full-curve evaluation, then a truncated one.
        let mut json: *mut std::ffi::c_char = ptr::null_mut();
        assert_eq!(
            lcnet_model_evaluate(model, dataset, -1.0, &mut json),
            LcnetStatus::Ok
        );
        let report: serde_json::Value =
            serde_json::from_str(CStr::from_ptr(json).to_str().unwrap()).unwrap();
        assert_eq!(report["n_objects"], 25);
        assert!(report["horizon_days"].is_null());
        assert_eq!(
            report["auc_roc"].as_array().unwrap().len(),
            LCNET_CLASS_COUNT
        );
        lcnet_string_free(json);

        let mut json: *mut std::ffi::c_char = ptr::null_mut();
        assert_eq!(
            lcnet_model_evaluate(model, dataset, 10.0, &mut json),
            LcnetStatus::Ok
        );
        let report: serde_json::Value =
            serde_json::from_str(CStr::from_ptr(json).to_str().unwrap()).unwrap();
        assert_eq!(report["horizon_days"], 10.0);
        lcnet_string_free(json);

        let mut json: *mut std::ffi::c_char = ptr::null_mut();
        assert_eq!(
            lcnet_model_evaluate(model, dataset, f64::NAN, &mut json),
            LcnetStatus::Config
        );

        // Save, reload, predict again: identical to the source model.
        let dir = tempfile::tempdir().unwrap();
        let ckpt = c_path(&dir.path().join("model.ckpt"));
        assert_eq!(lcnet_model_save(model, ckpt.as_ptr()), LcnetStatus::Ok);
        let mut reloaded: *mut LcnetModel = ptr::null_mut();
        assert_eq!(
            lcnet_model_load(ckpt.as_ptr(), &mut reloaded),
            LcnetStatus::Ok
        );
        let mut reloaded_probs = vec![0.0f64; probs.len()];
        assert_eq!(
            lcnet_model_predict(
                reloaded,
                dataset,
                reloaded_probs.as_mut_ptr(),
                reloaded_probs.len(),
                ptr::null_mut(),
            ),
            LcnetStatus::Ok
        );
        for (a, b) in probs.iter().zip(&reloaded_probs) {
            assert_eq!(a.to_bits(), b.to_bits());
        }

        // CSV round trip preserves the object count and labels.
        let csv = c_path(&dir.path().join("data.csv"));
        assert_eq!(
            lcnet_dataset_to_csv(dataset, csv.as_ptr(), true),
            LcnetStatus::Ok
        );
        let mut reread: *mut LcnetDataset = ptr::null_mut();
        assert_eq!(
            lcnet_dataset_from_csv(csv.as_ptr(), true, &mut reread),
            LcnetStatus::Ok
        );
        assert_eq!(lcnet_dataset_len(reread), 25);

        lcnet_dataset_free(reread);
        lcnet_dataset_free(dataset);
        lcnet_model_free(model);
        lcnet_model_free(reloaded);
    }
}

#[test]
fn class_names_cover_every_probability_column() {
    let expected = ["S-Like", "Fast", "Long", "Periodic", "Non-Periodic"];
    for (index, want) in expected.iter().enumerate() {
        let ptr = lcnet_class_name(index);
        assert!(!ptr.is_null());
        assert_eq!(unsafe { CStr::from_ptr(ptr) }.to_str().unwrap(), *want);
    }
    assert!(lcnet_class_name(expected.len()).is_null());
}
