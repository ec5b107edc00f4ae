//! Exercises the C ABI exactly as a foreign caller would: through the
//! exported extern "C" functions and raw pointers.

use std::ffi::{CStr, CString};
use std::ptr;

use torchpilot::config::RunConfig;
use torchpilot::plant::{render, NoiseConfig, PlantState};
use torchpilot_capi::*;

fn raw_frames(cal_mode: bool, count: u32, cfg: &RunConfig) -> (Vec<u8>, u32, u32) {
    let plant = cfg.plant.plant_config();
    let plate = cfg.build_plates().unwrap()[1];
    let rc = cfg.plant.render_config();
    let noise = NoiseConfig {
        enabled: false,
        ..cfg.noise.noise_config()
    };
    let mut st = PlantState::new(&plate, &plant);
    st.pool_heat = 0.6;
    let mut bytes = Vec::new();
    for k in 0..count {
        let img = render(&st, cal_mode, &noise, k as u64, &rc, &plant);
        for px in img.pixels() {
            bytes.extend_from_slice(px);
        }
    }
    (bytes, rc.frame_size, rc.frame_size)
}

#[test]
fn version_is_exposed() {
    let v = unsafe { CStr::from_ptr(tp_version()) };
    assert!(!v.to_str().unwrap().is_empty());
}

#[test]
fn config_load_rejects_bad_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "[controller]\ngain = -3.0\n").unwrap();
    let c_path = CString::new(path.to_str().unwrap()).unwrap();
    let mut out: *mut TpConfig = ptr::null_mut();
    let status = unsafe { tp_config_load(c_path.as_ptr(), &mut out) };
    assert_eq!(status, TpStatus::TpValidationError);
    assert!(out.is_null());
    let msg = unsafe { CStr::from_ptr(tp_last_error_message()) };
    assert!(msg.to_str().unwrap().contains("gain must be > 0"));
}

#[test]
fn config_load_and_free_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ok.toml");
    std::fs::write(&path, "seed = 5\n").unwrap();
    let c_path = CString::new(path.to_str().unwrap()).unwrap();
    let mut out: *mut TpConfig = ptr::null_mut();
    let status = unsafe { tp_config_load(c_path.as_ptr(), &mut out) };
    assert_eq!(status, TpStatus::TpOk);
    assert!(!out.is_null());
    unsafe { tp_config_free(out) };
}

#[test]
fn controlled_run_succeeds_through_the_abi() {
    let cfg = tp_config_default();
    let mut summary = TpRunSummary {
        success_ratio: 0.0,
        steps: 0,
        aborted: 1,
        cause: TpAbortCause::TpAbortNone,
    };
    let status = unsafe {
        tp_run_experiment(
            cfg,
            TpMode::TpModeControlled,
            0.0,
            1,
            ptr::null(),
            0,
            &mut summary,
        )
    };
    assert_eq!(status, TpStatus::TpOk);
    assert_eq!(summary.aborted, 0);
    assert_eq!(summary.success_ratio, 1.0);
    assert!(summary.steps > 0);
    unsafe { tp_config_free(cfg) };
}

#[test]
fn fast_run_reports_abort_and_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tp_config_default();
    let out_dir = CString::new(dir.path().to_str().unwrap()).unwrap();
    let mut summary = TpRunSummary {
        success_ratio: 0.0,
        steps: 0,
        aborted: 0,
        cause: TpAbortCause::TpAbortNone,
    };
    let status = unsafe {
        tp_run_experiment(
            cfg,
            TpMode::TpModeFast,
            0.0,
            2,
            out_dir.as_ptr(),
            0,
            &mut summary,
        )
    };
    assert_eq!(status, TpStatus::TpRunAborted);
    assert_eq!(summary.aborted, 1);
    assert_eq!(summary.cause, TpAbortCause::TpAbortPoolLost);
    assert!(summary.success_ratio < 1.0);
    assert!(dir.path().join("fast_0.500/telemetry.csv").exists());
    assert!(dir.path().join("summary.csv").exists());
    unsafe { tp_config_free(cfg) };
}

#[test]
fn bad_plate_index_is_invalid_argument() {
    let cfg = tp_config_default();
    let mut summary = TpRunSummary {
        success_ratio: 0.0,
        steps: 0,
        aborted: 0,
        cause: TpAbortCause::TpAbortNone,
    };
    let status = unsafe {
        tp_run_experiment(
            cfg,
            TpMode::TpModeControlled,
            0.0,
            9,
            ptr::null(),
            0,
            &mut summary,
        )
    };
    assert_eq!(status, TpStatus::TpInvalidArgument);
    unsafe { tp_config_free(cfg) };
}

#[test]
fn analyzer_calibrates_and_measures() {
    let rust_cfg = RunConfig::default();
    let cfg = tp_config_default();
    let (cal_bytes, w, h) = raw_frames(true, 5, &rust_cfg);

    let mut analyzer: *mut TpAnalyzer = ptr::null_mut();
    let status = unsafe { tp_analyzer_new(cfg, cal_bytes.as_ptr(), w, h, 5, &mut analyzer) };
    assert_eq!(status, TpStatus::TpOk);

    let (mut x, mut y) = (0.0f64, 0.0f64);
    assert_eq!(
        unsafe { tp_analyzer_centroid(analyzer, &mut x, &mut y) },
        TpStatus::TpOk
    );
    let center = (w / 2) as f64;
    assert!((x - center).abs() <= 1.0 && (y - center).abs() <= 1.0);
    assert!(unsafe { tp_analyzer_baseline(analyzer) } > 0.0);

    // A healthy pool frame measures near the reference state.
    let (pool_bytes, _, _) = raw_frames(false, 1, &rust_cfg);
    let mut features = TpFeatures {
        convexity: 0.0,
        intensity: 0.0,
        state: 0.0,
    };
    let status = unsafe { tp_analyzer_measure(analyzer, pool_bytes.as_ptr(), w, h, &mut features) };
    assert_eq!(status, TpStatus::TpOk);
    assert!(features.convexity > 0.8);
    assert!((features.state - 0.6).abs() < 0.1);

    // An all-black frame reports pool-lost.
    let black = vec![0u8; (w * h * 3) as usize];
    let status = unsafe { tp_analyzer_measure(analyzer, black.as_ptr(), w, h, &mut features) };
    assert_eq!(status, TpStatus::TpPoolLost);

    unsafe { tp_analyzer_free(analyzer) };
    unsafe { tp_config_free(cfg) };
}

#[test]
fn analyzer_rejects_all_black_calibration() {
    let cfg = tp_config_default();
    let black = vec![0u8; 64 * 64 * 3];
    let mut analyzer: *mut TpAnalyzer = ptr::null_mut();
    let status = unsafe { tp_analyzer_new(cfg, black.as_ptr(), 64, 64, 1, &mut analyzer) };
    assert_eq!(status, TpStatus::TpCalibrationFailed);
    assert!(analyzer.is_null());
    unsafe { tp_config_free(cfg) };
}

#[test]
fn generated_header_covers_the_surface() {
    let header = std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("include")
        .join("torchpilot.h");
    let text = std::fs::read_to_string(header).expect("header generated at build time");
    for symbol in [
        "tp_version",
        "tp_config_default",
        "tp_config_load",
        "tp_config_free",
        "tp_run_experiment",
        "tp_analyzer_new",
        "tp_analyzer_measure",
        "tp_analyzer_free",
        "tp_last_error_message",
        "TpStatus",
        "TpRunSummary",
        "TpFeatures",
    ] {
        assert!(text.contains(symbol), "{symbol} missing from header");
    }
}
