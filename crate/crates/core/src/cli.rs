//! Run orchestration and export entry points shared by the binary and the
//! C ABI: writing telemetry/summary artifacts, the suite runner, and
//! offline feature extraction over recorded frames.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::features::{calibrate, combustion_state, measure_frame};
use crate::harness::{run_experiment, summary_csv, telemetry_csv, Mode, RunResult};
use crate::image::{quantize, QuantizedImage, RgbImage};

/// Output-directory resolution: explicit flag, then `TORCHPILOT_OUT`, then
/// the config, then `./out`.
pub fn resolve_out_dir(flag: Option<&Path>, config: &RunConfig) -> PathBuf {
    if let Some(dir) = flag {
        return dir.to_path_buf();
    }
    if let Ok(env_dir) = std::env::var("TORCHPILOT_OUT") {
        if !env_dir.is_empty() {
            return PathBuf::from(env_dir);
        }
    }
    config
        .out_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn run_dir(out_dir: &Path, mode: Mode, thickness: f64) -> PathBuf {
    out_dir.join(format!("{}_{:.3}", mode.label(), thickness))
}

fn execute_cell(
    config: &RunConfig,
    mode: Mode,
    plate_index: usize,
    out_dir: &Path,
    dump_frames: bool,
) -> Result<RunResult> {
    let plates = config.build_plates()?;
    let dir = run_dir(out_dir, mode, plates[plate_index].thickness_in);
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let dump = if dump_frames {
        let frames = dir.join("frames");
        std::fs::create_dir_all(&frames).map_err(|e| Error::io(&frames, e))?;
        Some(frames)
    } else {
        None
    };
    let setup = config.experiment_setup(mode, plate_index, dump)?;
    let result = run_experiment(&setup)?;
    let telemetry_path = dir.join("telemetry.csv");
    std::fs::write(&telemetry_path, telemetry_csv(&result))
        .map_err(|e| Error::io(&telemetry_path, e))?;
    Ok(result)
}

/// Executes the configured single run (or the full suite when the config
/// asks for it), writing per-run telemetry and a summary CSV. Returns the
/// results; callers map `aborted` onto the exit status.
pub fn cmd_run(config: &RunConfig, out_dir: &Path, dump_frames: bool) -> Result<Vec<RunResult>> {
    if config.suite {
        return cmd_suite(config, out_dir, dump_frames);
    }
    let result = execute_cell(
        config,
        config.mode_value(),
        config.plate_index()?,
        out_dir,
        dump_frames,
    )?;
    let summary_path = out_dir.join("summary.csv");
    std::fs::write(&summary_path, summary_csv(std::slice::from_ref(&result)))
        .map_err(|e| Error::io(&summary_path, e))?;
    Ok(vec![result])
}

/// Runs the 3x3 mode-by-thickness comparison, in parallel across runs.
pub fn cmd_suite(config: &RunConfig, out_dir: &Path, dump_frames: bool) -> Result<Vec<RunResult>> {
    let grid = config.suite_grid();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs)
        .build()
        .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
    let results: Vec<Result<RunResult>> = pool.install(|| {
        grid.par_iter()
            .map(|&(mode, plate_index)| {
                execute_cell(config, mode, plate_index, out_dir, dump_frames)
            })
            .collect()
    });
    let results: Vec<RunResult> = results.into_iter().collect::<Result<_>>()?;
    let summary_path = out_dir.join("summary.csv");
    std::fs::write(&summary_path, summary_csv(&results))
        .map_err(|e| Error::io(&summary_path, e))?;
    Ok(results)
}

/// One row of offline feature extraction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureRow {
    pub frame_index: u64,
    pub c: f64,
    pub i: f64,
    pub s: f64,
    pub pool_lost: bool,
}

/// Applies the vision pipeline to recorded frames: calibrates on
/// `cal_*.ppm`, then measures every `frame_*.ppm` in name order. Frames
/// with no measurable pool repeat the previous sample and are flagged.
pub fn cmd_features(frames_dir: &Path, config: &RunConfig) -> Result<Vec<FeatureRow>> {
    let cutoffs = config.vision.cutoffs();
    let params = config.intensity.intensity_params();

    let mut cal_paths = list_ppm(frames_dir, "cal_")?;
    if cal_paths.is_empty() {
        return Err(Error::CalibrationFailed(format!(
            "no cal_*.ppm frames in {}",
            frames_dir.display()
        )));
    }
    cal_paths.sort();
    let cal_frames: Vec<QuantizedImage> = cal_paths
        .iter()
        .map(|p| quantize(&RgbImage::read_ppm(p)?, cutoffs))
        .collect::<Result<_>>()?;
    let cal = calibrate(&cal_frames, &params)?;

    let mut frame_paths = list_ppm(frames_dir, "frame_")?;
    frame_paths.sort();

    let mut rows = Vec::with_capacity(frame_paths.len());
    let mut held: Option<(f64, f64)> = None;
    for (idx, path) in frame_paths.iter().enumerate() {
        let q = quantize(&RgbImage::read_ppm(path)?, cutoffs)?;
        let measured = measure_frame(
            &q,
            &cal,
            &params,
            config.vision.select_params(),
            config.controller.lambda,
        );
        let (c, i, lost) = match measured {
            Ok(f) => {
                held = Some((f.convexity, f.intensity));
                (f.convexity, f.intensity, false)
            }
            Err(_) => match held {
                Some((c, i)) => (c, i, true),
                None => (0.0, 0.0, true),
            },
        };
        rows.push(FeatureRow {
            frame_index: idx as u64,
            c,
            i,
            s: combustion_state(c, i, config.controller.lambda),
            pool_lost: lost,
        });
    }
    Ok(rows)
}

pub fn features_csv(rows: &[FeatureRow]) -> String {
    let mut out = String::from("frame_index,c,i,s,pool_lost\n");
    for r in rows {
        out.push_str(&format!(
            "{},{:.6},{:.6},{:.6},{}\n",
            r.frame_index,
            r.c,
            r.i,
            r.s,
            u8::from(r.pool_lost)
        ));
    }
    out
}

fn list_ppm(dir: &Path, prefix: &str) -> Result<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let name = entry.file_name();
        let name = name.to_string_lossy();
        if name.starts_with(prefix) && name.ends_with(".ppm") {
            paths.push(entry.path());
        }
    }
    Ok(paths)
}
