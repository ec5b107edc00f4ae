//! Experiment orchestration: the ignite → calibrate → preheat →
//! combustion → shutdown workflow, telemetry logging, cut-success
//! scoring, and the three-mode comparison (slow, fast, controlled).

use std::path::PathBuf;

use crate::contour::SelectParams;
use crate::control::{apply_velocity_update, control_accel, state_error, ControllerParams};
use crate::error::{Error, Result};
use crate::features::{calibrate, measure_frame, Calibration, IntensityParams};
use crate::image::{quantize, ChannelCutoffs};
use crate::plant::{
    phi, render, step_with_velocity, NoiseConfig, PlantConfig, PlantState, PlateSpec, RenderConfig,
};

/// Consecutive dropped frames tolerated before a run aborts as pool-lost.
pub const POOL_LOST_HOLD: u32 = 5;
/// Fixed ignite and shutdown phase lengths, in control steps.
const IGNITE_STEPS: u32 = 10;
const SHUTDOWN_STEPS: u32 = 10;

/// Workflow phases, entered strictly in this order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Phase {
    Ignite,
    Calibrate,
    Preheat,
    Combustion,
    Shutdown,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::Ignite => "ignite",
            Phase::Calibrate => "calibrate",
            Phase::Preheat => "preheat",
            Phase::Combustion => "combustion",
            Phase::Shutdown => "shutdown",
        }
    }
}

/// Cutting mode under comparison. The paper's slow and fast cuts are fixed
/// constant speeds; `Constant` admits a user-specified one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mode {
    Slow,
    Fast,
    Controlled,
    Constant(f64),
}

impl Mode {
    pub fn label(&self) -> String {
        match self {
            Mode::Slow => "slow".into(),
            Mode::Fast => "fast".into(),
            Mode::Controlled => "controlled".into(),
            Mode::Constant(v) => format!("constant{v:.2}"),
        }
    }

    /// Open-loop speed for constant modes; `None` for closed-loop control.
    pub fn constant_speed(&self) -> Option<f64> {
        match self {
            Mode::Slow => Some(0.2),
            Mode::Fast => Some(3.2),
            Mode::Controlled => None,
            Mode::Constant(v) => Some(*v),
        }
    }
}

/// Why a run ended early.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AbortCause {
    CalibrationFailed,
    PoolLost,
    PathTimeout,
}

impl AbortCause {
    pub fn name(self) -> &'static str {
        match self {
            AbortCause::CalibrationFailed => "calibration-failed",
            AbortCause::PoolLost => "pool-lost",
            AbortCause::PathTimeout => "path-timeout",
        }
    }
}

/// One control-step snapshot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TelemetryRecord {
    pub t: f64,
    pub position: f64,
    pub velocity: f64,
    pub accel: f64,
    pub c: f64,
    pub i: f64,
    pub s: f64,
    pub s_star: f64,
    pub phase: Phase,
    pub pool_lost: bool,
}

/// Everything a single run produces.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub mode: Mode,
    pub thickness_in: f64,
    pub telemetry: Vec<TelemetryRecord>,
    pub cut_profile: Vec<f64>,
    pub success_ratio: f64,
    pub steps: u64,
    pub aborted: bool,
    pub cause: Option<AbortCause>,
    /// Telemetry time at which the combustion phase began, if reached.
    pub combustion_start: Option<f64>,
}

/// All knobs one run needs.
#[derive(Debug, Clone)]
pub struct ExperimentSetup {
    pub mode: Mode,
    pub plate: PlateSpec,
    pub plant: PlantConfig,
    pub render: RenderConfig,
    pub noise: NoiseConfig,
    pub controller: ControllerParams,
    pub intensity: IntensityParams,
    pub select: SelectParams,
    pub cutoffs: ChannelCutoffs,
    pub lambda: f64,
    pub seed: u64,
    /// Initial combustion velocity as a fraction of the plate anchor.
    pub initial_velocity_factor: f64,
    pub calibration_frames: u32,
    /// Dump rendered frames (calibration and combustion) to this directory.
    pub dump_frames: Option<PathBuf>,
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

struct RunLog {
    telemetry: Vec<TelemetryRecord>,
    t: f64,
    dt: f64,
    s_star: f64,
    last_phase: Option<Phase>,
}

impl RunLog {
    fn push(&mut self, phase: Phase, st: &PlantState, accel: f64, f: (f64, f64, f64), lost: bool) {
        // Phases only ever advance.
        if let Some(prev) = self.last_phase {
            debug_assert!(phase >= prev, "phase regression {prev:?} -> {phase:?}");
        }
        self.last_phase = Some(phase);
        self.t += self.dt;
        self.telemetry.push(TelemetryRecord {
            t: self.t,
            position: st.position,
            velocity: st.velocity,
            accel,
            c: f.0,
            i: f.1,
            s: f.2,
            s_star: self.s_star,
            phase,
            pool_lost: lost,
        });
    }
}

/// Runs the full workflow for one plate and mode. Failed runs come back as
/// `Ok` results carrying partial telemetry and the abort cause; `Err` is
/// reserved for I/O problems while dumping frames.
pub fn run_experiment(setup: &ExperimentSetup) -> Result<RunResult> {
    let plate = &setup.plate;
    let cfg = &setup.plant;
    let ctrl = &setup.controller;
    let s_star = ctrl.desired_state;
    let noise_off = NoiseConfig {
        enabled: false,
        ..setup.noise
    };

    let mut st = PlantState::new(plate, cfg);
    let mut log = RunLog {
        telemetry: Vec::new(),
        t: 0.0,
        dt: ctrl.dt,
        s_star,
        last_phase: None,
    };
    let mut frame_counter: u64 = 0;
    let next_seed = |counter: &mut u64| {
        let s = splitmix64(setup.seed ^ (*counter).wrapping_mul(0xa076_1d64_78bd_642f));
        *counter += 1;
        s
    };

    let finish = |st: &PlantState, log: RunLog, aborted, cause, combustion_start| RunResult {
        mode: setup.mode,
        thickness_in: plate.thickness_in,
        success_ratio: profile_success_ratio(&st.cut_depth),
        cut_profile: st.cut_depth.clone(),
        steps: log.telemetry.len() as u64,
        telemetry: log.telemetry,
        aborted,
        cause,
        combustion_start,
    };

    // Ignite: the torch comes on; nothing to measure yet.
    for _ in 0..IGNITE_STEPS {
        st = step_with_velocity(&st, 0.0, ctrl.dt, plate, cfg)?;
        log.push(Phase::Ignite, &st, 0.0, (0.0, 0.0, 0.0), false);
    }

    // Calibrate on noiseless bare-flame frames.
    let mut cal_frames = Vec::with_capacity(setup.calibration_frames as usize);
    for k in 0..setup.calibration_frames {
        let frame = render(
            &st,
            true,
            &noise_off,
            next_seed(&mut frame_counter),
            &setup.render,
            cfg,
        );
        if let Some(dir) = &setup.dump_frames {
            frame.write_ppm(&dir.join(format!("cal_{k:04}.ppm")))?;
        }
        cal_frames.push(quantize(&frame, setup.cutoffs)?);
        st = step_with_velocity(&st, 0.0, ctrl.dt, plate, cfg)?;
        log.push(Phase::Calibrate, &st, 0.0, (0.0, 0.0, 0.0), false);
    }
    let cal = match calibrate(&cal_frames, &setup.intensity) {
        Ok(c) => c,
        Err(_) => {
            let r = finish(&st, log, true, Some(AbortCause::CalibrationFailed), None);
            return Ok(r);
        }
    };

    // Preheat with the torch parked until the surface is ready.
    let preheat_target = cfg.preheat_fraction * phi(0.0, plate, cfg);
    let mut guard = 0u32;
    while st.pool_heat < preheat_target {
        st = step_with_velocity(&st, 0.0, ctrl.dt, plate, cfg)?;
        let f = measure(&st, &cal, setup, next_seed(&mut frame_counter));
        log.push(
            Phase::Preheat,
            &st,
            0.0,
            f.unwrap_or((0.0, 0.0, 0.0)),
            false,
        );
        guard += 1;
        if guard > 100_000 {
            return Err(Error::invalid("preheat did not converge"));
        }
    }
    st.preheated = true;

    // Combustion: engage the bypass and run the perception-control loop.
    st.bypass_engaged = true;
    let combustion_start = log.t;
    let open_loop = setup.mode_speed();
    let mut v_cmd = match open_loop {
        Some(v) => v,
        None => setup.initial_velocity_factor * plate.v_star,
    };
    let nominal_v = open_loop.unwrap_or(plate.v_star).max(0.1);
    let timeout_steps = (10.0 * plate.path_length_cm / (nominal_v * ctrl.dt)).ceil() as u64;

    let mut held: Option<(f64, f64)> = None;
    let mut lost_streak = 0u32;
    let mut combustion_steps = 0u64;
    let mut dump_index = 0u64;

    while st.position < plate.path_length_cm {
        if combustion_steps >= timeout_steps {
            let r = finish(
                &st,
                log,
                true,
                Some(AbortCause::PathTimeout),
                Some(combustion_start),
            );
            return Ok(r);
        }

        let seed = next_seed(&mut frame_counter);
        let frame = render(&st, false, &setup.noise, seed, &setup.render, cfg);
        if let Some(dir) = &setup.dump_frames {
            frame.write_ppm(&dir.join(format!("frame_{dump_index:06}.ppm")))?;
            dump_index += 1;
        }
        let q = quantize(&frame, setup.cutoffs)?;
        let measured = measure_frame(&q, &cal, &setup.intensity, setup.select, setup.lambda);

        let ((c, i), lost) = match measured {
            Ok(f) => {
                held = Some((f.convexity, f.intensity));
                lost_streak = 0;
                ((f.convexity, f.intensity), false)
            }
            Err(_) => {
                lost_streak += 1;
                match held {
                    Some(h) => (h, true),
                    None => ((0.0, 0.0), true),
                }
            }
        };

        if lost_streak > POOL_LOST_HOLD {
            let r = finish(
                &st,
                log,
                true,
                Some(AbortCause::PoolLost),
                Some(combustion_start),
            );
            return Ok(r);
        }

        let s = crate::features::combustion_state(c, i, setup.lambda);
        let accel = match open_loop {
            Some(v) => {
                v_cmd = v;
                0.0
            }
            None => {
                let a = control_accel(state_error(s_star, s), ctrl);
                v_cmd = apply_velocity_update(v_cmd, a, ctrl);
                a
            }
        };

        st = step_with_velocity(&st, v_cmd, ctrl.dt, plate, cfg)?;
        log.push(Phase::Combustion, &st, accel, (c, i, s), lost);
        combustion_steps += 1;
    }

    // Shutdown: disengage the bypass, stop the torch.
    st.bypass_engaged = false;
    for _ in 0..SHUTDOWN_STEPS {
        st = step_with_velocity(&st, 0.0, ctrl.dt, plate, cfg)?;
        log.push(Phase::Shutdown, &st, 0.0, (0.0, 0.0, 0.0), false);
    }

    Ok(finish(&st, log, false, None, Some(combustion_start)))
}

impl ExperimentSetup {
    /// The open-loop speed for this setup's mode, if any.
    fn mode_speed(&self) -> Option<f64> {
        self.mode.constant_speed()
    }
}

/// Runs the same workflow with the combustion phase held at a constant
/// torch speed, with no feedback.
pub fn run_constant_speed(setup: &ExperimentSetup, v_const: f64) -> Result<RunResult> {
    let mut setup = setup.clone();
    setup.mode = Mode::Constant(v_const);
    run_experiment(&setup)
}

fn measure(
    st: &PlantState,
    cal: &Calibration,
    setup: &ExperimentSetup,
    seed: u64,
) -> Option<(f64, f64, f64)> {
    let frame = render(st, false, &setup.noise, seed, &setup.render, &setup.plant);
    let q = quantize(&frame, setup.cutoffs).ok()?;
    measure_frame(&q, cal, &setup.intensity, setup.select, setup.lambda)
        .ok()
        .map(|f| (f.convexity, f.intensity, f.state))
}

/// Fraction of path bins cut through the full thickness.
pub fn profile_success_ratio(cut_profile: &[f64]) -> f64 {
    if cut_profile.is_empty() {
        return 0.0;
    }
    let cut = cut_profile.iter().filter(|&&d| d >= 1.0 - 1e-6).count();
    cut as f64 / cut_profile.len() as f64
}

/// Same as [`profile_success_ratio`] but with the spec'd error contract.
pub fn success_ratio(cut_profile: &[f64]) -> Result<f64> {
    if cut_profile.is_empty() {
        return Err(Error::invalid("empty cut profile"));
    }
    Ok(profile_success_ratio(cut_profile))
}

/// Telemetry rescaled for plotting: position by its final value, velocity
/// and acceleration by their configured maxima; the pool features are
/// already normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedSeries {
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
    pub accel: Vec<f64>,
    pub c: Vec<f64>,
    pub i: Vec<f64>,
    pub s: Vec<f64>,
}

pub fn normalize(result: &RunResult, params: &ControllerParams) -> Result<NormalizedSeries> {
    let max_pos = result
        .telemetry
        .iter()
        .map(|r| r.position)
        .fold(0.0f64, f64::max);
    if max_pos <= 0.0 {
        return Err(Error::invalid("zero path length in telemetry"));
    }
    Ok(NormalizedSeries {
        position: result
            .telemetry
            .iter()
            .map(|r| r.position / max_pos)
            .collect(),
        velocity: result
            .telemetry
            .iter()
            .map(|r| r.velocity / params.v_max)
            .collect(),
        accel: result
            .telemetry
            .iter()
            .map(|r| r.accel / params.a_max)
            .collect(),
        c: result.telemetry.iter().map(|r| r.c).collect(),
        i: result.telemetry.iter().map(|r| r.i).collect(),
        s: result.telemetry.iter().map(|r| r.s).collect(),
    })
}

/// Serializes telemetry with a fixed header and 6-decimal fields, so equal
/// runs produce byte-identical files.
pub fn telemetry_csv(result: &RunResult) -> String {
    let mut out = String::from("t,position,velocity,accel,c,i,s,s_star,phase,pool_lost\n");
    for r in &result.telemetry {
        out.push_str(&format!(
            "{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{},{}\n",
            r.t,
            r.position,
            r.velocity,
            r.accel,
            r.c,
            r.i,
            r.s,
            r.s_star,
            r.phase.name(),
            u8::from(r.pool_lost),
        ));
    }
    out
}

/// One summary row per run.
pub fn summary_csv(results: &[RunResult]) -> String {
    let mut out = String::from("mode,thickness,success_ratio,steps,aborted,cause\n");
    for r in results {
        out.push_str(&format!(
            "{},{:.3},{:.6},{},{},{}\n",
            r.mode.label(),
            r.thickness_in,
            r.success_ratio,
            r.steps,
            u8::from(r.aborted),
            r.cause.map(AbortCause::name).unwrap_or(""),
        ));
    }
    out
}
