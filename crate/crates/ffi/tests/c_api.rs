use std::ffi::{CStr, CString};
use std::ptr;

use nkdcd_ffi::*;

fn last_error() -> String {
    let p = nkdcd_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn version_is_nul_terminated() {
    let v = unsafe { CStr::from_ptr(nkdcd_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn generate_shape_and_values() {
    let mut ds = ptr::null_mut();
    assert_eq!(nkdcd_generate_var3(6, 120, 3, &mut ds), NkdcdStatus::Ok);
    let (mut rows, mut cols) = (0, 0);
    unsafe {
        assert_eq!(nkdcd_dataset_shape(ds, &mut rows, &mut cols), NkdcdStatus::Ok);
        assert_eq!((rows, cols), (120, 6));
        let mut small = vec![0.0; 10];
        assert_eq!(
            nkdcd_dataset_values(ds, small.as_mut_ptr(), small.len()),
            NkdcdStatus::BufferTooSmall
        );
        assert!(last_error().contains("720"));
        let mut buf = vec![0.0; rows * cols];
        assert_eq!(nkdcd_dataset_values(ds, buf.as_mut_ptr(), buf.len()), NkdcdStatus::Ok);
        assert!(buf.iter().all(|v| v.is_finite()));
        assert!(buf.iter().any(|v| *v != 0.0));
        nkdcd_dataset_free(ds);
    }
}

#[test]
fn null_arguments_are_reported() {
    assert_eq!(nkdcd_generate_var3(4, 50, 0, ptr::null_mut()), NkdcdStatus::NullPointer);
    let mut rows = 0;
    let mut cols = 0;
    let s = unsafe { nkdcd_dataset_shape(ptr::null(), &mut rows, &mut cols) };
    assert_eq!(s, NkdcdStatus::NullPointer);
    assert!(last_error().contains("dataset"));
    unsafe {
        nkdcd_dataset_free(ptr::null_mut());
        nkdcd_model_free(ptr::null_mut());
    }
}

#[test]
fn library_errors_map_to_status() {
    let mut ds = ptr::null_mut();
    assert_eq!(nkdcd_generate_lorenz96(3, 10.0, 100, 0, &mut ds), NkdcdStatus::InvalidArgument);
    assert!(ds.is_null());
    let path = CString::new("/nonexistent/dir/data.csv").unwrap();
    let s = unsafe { nkdcd_dataset_load_csv(path.as_ptr(), ptr::null(), &mut ds) };
    assert_eq!(s, NkdcdStatus::Io);
    assert!(last_error().contains("/nonexistent/dir/data.csv"));
}

#[test]
fn auroc_of_raw_buffers() {
    let scores = [0.0, 0.9, 0.1, 0.8, 0.0, 0.2, 0.3, 0.7, 0.0];
    let truth = [0u8, 1, 0, 1, 0, 0, 0, 1, 0];
    let mut out = 0.0;
    let s = unsafe { nkdcd_auroc(scores.as_ptr(), truth.as_ptr(), 3, 0, &mut out) };
    assert_eq!(s, NkdcdStatus::Ok);
    assert_eq!(out, 1.0);
    let none = [0u8; 9];
    let s = unsafe { nkdcd_auroc(scores.as_ptr(), none.as_ptr(), 3, 0, &mut out) };
    assert_eq!(s, NkdcdStatus::UndefinedMetric);
}

#[test]
fn train_save_load_round_trip() {
    let mut ds = ptr::null_mut();
    assert_eq!(nkdcd_generate_var3(4, 200, 1, &mut ds), NkdcdStatus::Ok);
    let cfg = CString::new(
        r#"{"lift_dim": 2, "hidden": 2, "max_lag": 3, "max_epochs": 3, "batch": 64, "activation": "linear"}"#,
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("m.json").to_str().unwrap()).unwrap();
    unsafe {
        assert_eq!(nkdcd_dataset_standardize(ds), NkdcdStatus::Ok);
        let mut model = ptr::null_mut();
        let s = nkdcd_train(ds, cfg.as_ptr(), &mut model);
        assert_eq!(s, NkdcdStatus::Ok, "{}", last_error());
        let (mut n, mut lags) = (0, 0);
        assert_eq!(nkdcd_model_dims(model, &mut n, &mut lags), NkdcdStatus::Ok);
        assert_eq!((n, lags), (4, 3));

        let mut scores = vec![0.0; 16];
        assert_eq!(nkdcd_model_scores(model, scores.as_mut_ptr(), 16), NkdcdStatus::Ok);
        let mut lag1 = vec![0.0; 16];
        assert_eq!(nkdcd_model_lag_norms(model, 1, lag1.as_mut_ptr(), 16), NkdcdStatus::Ok);
        assert_eq!(nkdcd_model_lag_norms(model, 0, lag1.as_mut_ptr(), 16), NkdcdStatus::InvalidArgument);
        assert_eq!(nkdcd_model_lag_norms(model, 4, lag1.as_mut_ptr(), 16), NkdcdStatus::InvalidArgument);
        for (s, l) in scores.iter().zip(&lag1) {
            assert!(s + 1e-15 >= *l);
        }
        let mut a = 0.0;
        assert_eq!(nkdcd_model_auroc(model, ds, 1, &mut a), NkdcdStatus::Ok);
        assert!((0.0..=1.0).contains(&a));

        assert_eq!(nkdcd_model_save(model, path.as_ptr()), NkdcdStatus::Ok);
        let mut back = ptr::null_mut();
        assert_eq!(nkdcd_model_load(path.as_ptr(), &mut back), NkdcdStatus::Ok);
        let mut again = vec![0.0; 16];
        assert_eq!(nkdcd_model_scores(back, again.as_mut_ptr(), 16), NkdcdStatus::Ok);
        assert_eq!(scores, again);

        nkdcd_model_free(back);
        nkdcd_model_free(model);
        nkdcd_dataset_free(ds);
    }
}

#[test]
fn bad_config_json_is_a_parse_error() {
    let mut ds = ptr::null_mut();
    assert_eq!(nkdcd_generate_var3(4, 100, 0, &mut ds), NkdcdStatus::Ok);
    let cfg = CString::new(r#"{"no_such_field": 1}"#).unwrap();
    let mut model = ptr::null_mut();
    unsafe {
        assert_eq!(nkdcd_train(ds, cfg.as_ptr(), &mut model), NkdcdStatus::Parse);
        assert!(model.is_null());
        nkdcd_dataset_free(ds);
    }
}

#[test]
fn values_round_trip_with_truth() {
    let vals: Vec<f64> = (0..30).map(|v| v as f64 * 0.5).collect();
    let truth = [1u8, 0, 0, 0, 1, 1, 0, 0, 1];
    let mut ds = ptr::null_mut();
    unsafe {
        assert_eq!(
            nkdcd_dataset_from_values(vals.as_ptr(), 10, 3, truth.as_ptr(), &mut ds),
            NkdcdStatus::Ok
        );
        let mut out = vec![0.0; 30];
        assert_eq!(nkdcd_dataset_values(ds, out.as_mut_ptr(), 30), NkdcdStatus::Ok);
        assert_eq!(out, vals);
        nkdcd_dataset_free(ds);
    }
    let header = include_str!("../include/nkdcd.h");
    for f in ["nkdcd_train", "nkdcd_model_free", "NKDCD_STATUS_BUFFER_TOO_SMALL", "typedef struct NkdcdDataset"] {
        assert!(header.contains(f), "header lacks {f}");
    }
}
