//! C ABI for the torchpilot pipeline: experiment runs driven by a config
//! handle, and a frame analyzer exposing calibration plus per-frame pool
//! features for raw RGB buffers.
//!
//! All functions are `extern "C"`. Objects cross the boundary as opaque
//! handles created and destroyed here; every fallible call returns a
//! [`TpStatus`] and leaves a message for [`tp_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::path::PathBuf;

use torchpilot::cli::cmd_run;
use torchpilot::config::RunConfig;
use torchpilot::error::Error;
use torchpilot::features::{calibrate, measure_frame, Calibration};
use torchpilot::harness::AbortCause;
use torchpilot::image::{quantize, RgbImage};

/// Call outcome. `TP_OK` means the out-parameters are valid.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TpStatus {
    TpOk = 0,
    TpInvalidArgument = 1,
    TpParseError = 2,
    TpValidationError = 3,
    TpCalibrationFailed = 4,
    TpPoolLost = 5,
    TpIoError = 6,
    TpRunAborted = 7,
}

/// Cutting mode selector for [`tp_run_experiment`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TpMode {
    TpModeSlow = 0,
    TpModeFast = 1,
    TpModeControlled = 2,
    TpModeConstant = 3,
}

/// Why an aborted run stopped.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TpAbortCause {
    TpAbortNone = 0,
    TpAbortCalibrationFailed = 1,
    TpAbortPoolLost = 2,
    TpAbortPathTimeout = 3,
}

/// Result summary of one experiment run.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct TpRunSummary {
    pub success_ratio: f64,
    pub steps: u64,
    pub aborted: u8,
    pub cause: TpAbortCause,
}

/// Pool features measured from one frame.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct TpFeatures {
    pub convexity: f64,
    pub intensity: f64,
    pub state: f64,
}

/// Opaque run configuration.
pub struct TpConfig {
    inner: RunConfig,
}

/// Opaque frame analyzer: a calibrated vision pipeline.
pub struct TpAnalyzer {
    config: RunConfig,
    calibration: Calibration,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(err: &Error) -> TpStatus {
    match err {
        Error::InvalidInput(_) => TpStatus::TpInvalidArgument,
        Error::ConfigParse { .. } => TpStatus::TpParseError,
        Error::ConfigValidation(_) => TpStatus::TpValidationError,
        Error::CalibrationFailed(_) => TpStatus::TpCalibrationFailed,
        Error::FeatureUnavailable(_) | Error::DegenerateHull => TpStatus::TpPoolLost,
        Error::Io { .. } | Error::ImageFormat { .. } => TpStatus::TpIoError,
    }
}

fn fail(err: &Error) -> TpStatus {
    set_error(&err.to_string());
    status_of(err)
}

/// Message for the most recent failure on this thread. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn tp_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn tp_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr() as *const c_char
}

/// Creates a config holding the full default parameter set.
#[no_mangle]
pub extern "C" fn tp_config_default() -> *mut TpConfig {
    Box::into_raw(Box::new(TpConfig {
        inner: RunConfig::default(),
    }))
}

/// Loads and validates a TOML config file.
///
/// # Safety
/// `path` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tp_config_load(path: *const c_char, out: *mut *mut TpConfig) -> TpStatus {
    if path.is_null() || out.is_null() {
        set_error("null pointer argument");
        return TpStatus::TpInvalidArgument;
    }
    let path = match CStr::from_ptr(path).to_str() {
        Ok(s) => PathBuf::from(s),
        Err(_) => {
            set_error("path is not valid UTF-8");
            return TpStatus::TpInvalidArgument;
        }
    };
    match RunConfig::load(&path) {
        Ok(cfg) => {
            *out = Box::into_raw(Box::new(TpConfig { inner: cfg }));
            TpStatus::TpOk
        }
        Err(e) => fail(&e),
    }
}

/// Frees a config handle. Accepts null.
///
/// # Safety
/// `cfg` must have come from this library and not been freed before.
#[no_mangle]
pub unsafe extern "C" fn tp_config_free(cfg: *mut TpConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Runs one experiment and fills `summary`. When `out_dir` is non-null,
/// telemetry and summary CSVs (and frame dumps, if requested) are written
/// beneath it in the standard layout.
///
/// `constant_speed` is only read for `TpModeConstant`. `plate_index`
/// selects among the configured plates.
///
/// # Safety
/// `cfg` and `summary` must be valid; `out_dir`, when non-null, must be a
/// NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn tp_run_experiment(
    cfg: *const TpConfig,
    mode: TpMode,
    constant_speed: f64,
    plate_index: u32,
    out_dir: *const c_char,
    dump_frames: u8,
    summary: *mut TpRunSummary,
) -> TpStatus {
    if cfg.is_null() || summary.is_null() {
        set_error("null pointer argument");
        return TpStatus::TpInvalidArgument;
    }
    let mut config = (*cfg).inner.clone();
    config.suite = false;
    config.mode = match mode {
        TpMode::TpModeSlow => "slow".into(),
        TpMode::TpModeFast => "fast".into(),
        TpMode::TpModeControlled => "controlled".into(),
        TpMode::TpModeConstant => {
            config.constant_speed = constant_speed;
            "constant".into()
        }
    };
    let Some(plate) = config.plates.get(plate_index as usize) else {
        set_error("plate_index out of range");
        return TpStatus::TpInvalidArgument;
    };
    config.plate = plate.thickness_in;
    if let Err(e) = config.validate() {
        return fail(&e);
    }

    let result = if out_dir.is_null() {
        let setup = match config.experiment_setup(config.mode_value(), plate_index as usize, None) {
            Ok(s) => s,
            Err(e) => return fail(&e),
        };
        match torchpilot::harness::run_experiment(&setup) {
            Ok(r) => r,
            Err(e) => return fail(&e),
        }
    } else {
        let dir = match CStr::from_ptr(out_dir).to_str() {
            Ok(s) => PathBuf::from(s),
            Err(_) => {
                set_error("out_dir is not valid UTF-8");
                return TpStatus::TpInvalidArgument;
            }
        };
        match cmd_run(&config, &dir, dump_frames != 0) {
            Ok(mut results) => results.remove(0),
            Err(e) => return fail(&e),
        }
    };

    *summary = TpRunSummary {
        success_ratio: result.success_ratio,
        steps: result.steps,
        aborted: u8::from(result.aborted),
        cause: match result.cause {
            None => TpAbortCause::TpAbortNone,
            Some(AbortCause::CalibrationFailed) => TpAbortCause::TpAbortCalibrationFailed,
            Some(AbortCause::PoolLost) => TpAbortCause::TpAbortPoolLost,
            Some(AbortCause::PathTimeout) => TpAbortCause::TpAbortPathTimeout,
        },
    };
    if result.aborted {
        set_error("run aborted");
        return TpStatus::TpRunAborted;
    }
    TpStatus::TpOk
}

unsafe fn frame_from_raw(rgb: *const u8, width: u32, height: u32) -> Result<RgbImage, Error> {
    if rgb.is_null() {
        return Err(Error::invalid("null frame pointer"));
    }
    let len = width as usize * height as usize * 3;
    let bytes = std::slice::from_raw_parts(rgb, len);
    let pixels = bytes.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
    RgbImage::from_raw(width, height, pixels)
}

/// Calibrates an analyzer from `count` bare-flame frames, laid out as
/// contiguous rows of 8-bit RGB triples, `width * height * 3` bytes each.
///
/// # Safety
/// `cfg`, `frames` (holding `count * width * height * 3` readable bytes),
/// and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn tp_analyzer_new(
    cfg: *const TpConfig,
    frames: *const u8,
    width: u32,
    height: u32,
    count: u32,
    out: *mut *mut TpAnalyzer,
) -> TpStatus {
    if cfg.is_null() || frames.is_null() || out.is_null() {
        set_error("null pointer argument");
        return TpStatus::TpInvalidArgument;
    }
    if width == 0 || height == 0 || count == 0 {
        set_error("frame dimensions and count must be nonzero");
        return TpStatus::TpInvalidArgument;
    }
    let config = (*cfg).inner.clone();
    let stride = width as usize * height as usize * 3;
    let mut quantized = Vec::with_capacity(count as usize);
    for k in 0..count as usize {
        let frame = match frame_from_raw(frames.add(k * stride), width, height) {
            Ok(f) => f,
            Err(e) => return fail(&e),
        };
        match quantize(&frame, config.vision.cutoffs()) {
            Ok(q) => quantized.push(q),
            Err(e) => return fail(&e),
        }
    }
    match calibrate(&quantized, &config.intensity.intensity_params()) {
        Ok(calibration) => {
            *out = Box::into_raw(Box::new(TpAnalyzer {
                config,
                calibration,
            }));
            TpStatus::TpOk
        }
        Err(e) => fail(&e),
    }
}

/// Measures pool features on one raw RGB frame. Returns `TP_POOL_LOST`
/// when no measurable pool is visible; `features` is untouched then.
///
/// # Safety
/// `analyzer` must be a live handle, `rgb` must hold
/// `width * height * 3` readable bytes, and `features` must be valid.
#[no_mangle]
pub unsafe extern "C" fn tp_analyzer_measure(
    analyzer: *const TpAnalyzer,
    rgb: *const u8,
    width: u32,
    height: u32,
    features: *mut TpFeatures,
) -> TpStatus {
    if analyzer.is_null() || features.is_null() {
        set_error("null pointer argument");
        return TpStatus::TpInvalidArgument;
    }
    let a = &*analyzer;
    let frame = match frame_from_raw(rgb, width, height) {
        Ok(f) => f,
        Err(e) => return fail(&e),
    };
    let q = match quantize(&frame, a.config.vision.cutoffs()) {
        Ok(q) => q,
        Err(e) => return fail(&e),
    };
    match measure_frame(
        &q,
        &a.calibration,
        &a.config.intensity.intensity_params(),
        a.config.vision.select_params(),
        a.config.controller.lambda,
    ) {
        Ok(f) => {
            *features = TpFeatures {
                convexity: f.convexity,
                intensity: f.intensity,
                state: f.state,
            };
            TpStatus::TpOk
        }
        Err(e) => fail(&e),
    }
}

/// Baseline intensity measured at calibration.
///
/// # Safety
/// `analyzer` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn tp_analyzer_baseline(analyzer: *const TpAnalyzer) -> f64 {
    if analyzer.is_null() {
        return 0.0;
    }
    (*analyzer).calibration.baseline_intensity
}

/// Flame centroid measured at calibration, written to `x` and `y`.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn tp_analyzer_centroid(
    analyzer: *const TpAnalyzer,
    x: *mut f64,
    y: *mut f64,
) -> TpStatus {
    if analyzer.is_null() || x.is_null() || y.is_null() {
        set_error("null pointer argument");
        return TpStatus::TpInvalidArgument;
    }
    *x = (*analyzer).calibration.centroid.0;
    *y = (*analyzer).calibration.centroid.1;
    TpStatus::TpOk
}

/// Frees an analyzer handle. Accepts null.
///
/// # Safety
/// `analyzer` must have come from this library and not been freed before.
#[no_mangle]
pub unsafe extern "C" fn tp_analyzer_free(analyzer: *mut TpAnalyzer) {
    if !analyzer.is_null() {
        drop(Box::from_raw(analyzer));
    }
}
