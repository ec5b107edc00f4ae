//! Synthetic ground truth for the cutting process: the velocity-to-
//! combustion map, first-order thermal lag, cut-depth accumulation with
//! reseal and extinguish failure mechanisms, and a renderer that produces
//! the RGB frames the vision pipeline consumes.
//!
//! The map from torch velocity to steady-state combustion is
//! `phi(v) = s0 * exp(-E(v))` with
//! `E(v) = A * (1 - exp(-(v/w)^p)) + (v/u)^m`:
//! a saturating step (fast drop from the parked-torch level onto a gentle
//! plateau holding the workable speed band) followed by a power tail
//! (collapse at excessive speeds). `A` is solved so that `phi(v*) = s*`
//! exactly. The plateau keeps the discrete control loop stable at the
//! default gain and period; the tail drives the extinguish failure mode.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::image::RgbImage;

/// One steel plate plus the plant constants realizing its velocity
/// response. Produced by [`PlateSpec::calibrated`] so that the
/// desired-velocity constraint holds exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlateSpec {
    /// Plate thickness, inches.
    pub thickness_in: f64,
    /// Reference cutting path length, cm.
    pub path_length_cm: f64,
    /// Thermal lag time constant, s.
    pub tau_s: f64,
    /// Velocity anchor: phi(v_star) equals the desired state.
    pub v_star: f64,
    /// Tail onset as a multiple of v_star; the reciprocal of the tail
    /// scale u = tail_ratio * v_star is the speed sensitivity (s/cm).
    pub tail_ratio: f64,
    /// Depth lost per second by recently cut positions while the pool
    /// overheats. Zero on thin plates (excess heat just widens the cut).
    pub reseal_rate: f64,
    /// Solved log-drop amplitude of the step term.
    amplitude: f64,
    /// Desired state the amplitude was solved against.
    s_star: f64,
}

/// Plant-wide constants shared by all plates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantConfig {
    /// Parked-torch steady-state pool heat, phi(0).
    pub s0: f64,
    /// Step onset as a multiple of v_star.
    pub step_ratio: f64,
    pub step_power: i32,
    pub tail_power: i32,
    /// Pool heat needed for the oxygen jet to cut.
    pub burn_threshold: f64,
    /// Pool heat above which nearby cut positions reseal.
    pub reseal_threshold: f64,
    /// Pool heat below which the pool extinguishes and the cut is lost.
    pub extinguish_threshold: f64,
    /// Depth fraction per second per unit pool heat per inch of plate.
    pub burn_coeff: f64,
    /// Reseal zone length behind the torch, cm.
    pub reseal_zone_cm: f64,
    /// Preheat ends once pool heat reaches this fraction of phi(0).
    pub preheat_fraction: f64,
    /// Cut-profile bin size, cm.
    pub bin_cm: f64,
    /// Actuator velocity ceiling used by accel-driven stepping, cm/s.
    pub velocity_limit: f64,
}

impl Default for PlantConfig {
    fn default() -> Self {
        PlantConfig {
            s0: 0.93,
            step_ratio: 0.55,
            step_power: 8,
            tail_power: 8,
            burn_threshold: 0.45,
            reseal_threshold: 0.85,
            extinguish_threshold: 0.15,
            burn_coeff: 40.0,
            reseal_zone_cm: 0.6,
            preheat_fraction: 0.9,
            bin_cm: 0.1,
            velocity_limit: 4.0,
        }
    }
}

impl PlantConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.s0 > 0.0 && self.s0 <= 1.0) {
            return Err(Error::ConfigValidation("s0 must be in (0, 1]".into()));
        }
        if !(self.bin_cm > 0.0) {
            return Err(Error::ConfigValidation("bin_cm must be > 0".into()));
        }
        if !(self.burn_coeff > 0.0) {
            return Err(Error::ConfigValidation("burn_coeff must be > 0".into()));
        }
        Ok(())
    }
}

impl PlateSpec {
    /// Builds a plate whose phi map satisfies `phi(v_star) = s_star`
    /// exactly, stays strictly positive and strictly decreasing, and
    /// vanishes at infinity.
    #[allow(clippy::too_many_arguments)]
    pub fn calibrated(
        thickness_in: f64,
        path_length_cm: f64,
        tau_s: f64,
        v_star: f64,
        tail_ratio: f64,
        reseal_rate: f64,
        s_star: f64,
        cfg: &PlantConfig,
    ) -> Result<Self> {
        if !(thickness_in > 0.0) {
            return Err(Error::ConfigValidation("thickness must be > 0".into()));
        }
        if !(tau_s > 0.0) {
            return Err(Error::ConfigValidation("tau must be > 0".into()));
        }
        if !(v_star > 0.0) || !(tail_ratio > 1.0) {
            return Err(Error::ConfigValidation(
                "v_star must be > 0 and tail_ratio > 1".into(),
            ));
        }
        if !(s_star > 0.0 && s_star < cfg.s0) {
            return Err(Error::ConfigValidation(
                "desired state must be in (0, s0)".into(),
            ));
        }
        if !(path_length_cm > 0.0) {
            return Err(Error::ConfigValidation("path length must be > 0".into()));
        }
        let tail_at_anchor = tail_ratio.powi(-cfg.tail_power);
        let step_at_anchor = 1.0 - (-(1.0 / cfg.step_ratio).powi(cfg.step_power)).exp();
        let amplitude = ((cfg.s0 / s_star).ln() - tail_at_anchor) / step_at_anchor;
        if !(amplitude > 0.0) {
            return Err(Error::ConfigValidation(
                "phi calibration failed: s_star too close to s0".into(),
            ));
        }
        Ok(PlateSpec {
            thickness_in,
            path_length_cm,
            tau_s,
            v_star,
            tail_ratio,
            reseal_rate,
            amplitude,
            s_star,
        })
    }

    /// The three paper plates with tuned plant constants.
    pub fn default_set(s_star: f64, cfg: &PlantConfig) -> Result<Vec<PlateSpec>> {
        Ok(vec![
            Self::calibrated(0.250, 20.0, 0.8, 1.00, 1.88, 0.0, s_star, cfg)?,
            Self::calibrated(0.375, 20.0, 0.95, 0.82, 2.20, 0.05, s_star, cfg)?,
            Self::calibrated(0.500, 20.0, 1.10, 0.62, 2.60, 0.25, s_star, cfg)?,
        ])
    }

    /// Decay scale of the tail term, s/cm.
    pub fn speed_sensitivity(&self) -> f64 {
        1.0 / (self.tail_ratio * self.v_star)
    }

    pub fn desired_state(&self) -> f64 {
        self.s_star
    }
}

/// Steady-state combustion level for a torch velocity.
pub fn phi(v: f64, plate: &PlateSpec, cfg: &PlantConfig) -> f64 {
    let x = v / (cfg.step_ratio * plate.v_star);
    let step = 1.0 - (-x.powi(cfg.step_power)).exp();
    let tail = (v / (plate.tail_ratio * plate.v_star)).powi(cfg.tail_power);
    cfg.s0 * (-(plate.amplitude * step + tail)).exp()
}

/// Mutable ground-truth state of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantState {
    /// Torch position along the path, cm.
    pub position: f64,
    /// Torch velocity, cm/s, never negative.
    pub velocity: f64,
    /// Normalized pool heat in [0, s0].
    pub pool_heat: f64,
    /// Per-bin cut depth as a fraction of thickness, each in [0, 1].
    pub cut_depth: Vec<f64>,
    pub bypass_engaged: bool,
    pub preheated: bool,
    /// Latched when pool heat falls below the extinguish threshold; the
    /// cut is lost for the rest of the run even if the surface reheats.
    pub extinguished: bool,
}

impl PlantState {
    pub fn new(plate: &PlateSpec, cfg: &PlantConfig) -> Self {
        let bins = (plate.path_length_cm / cfg.bin_cm).round() as usize;
        PlantState {
            position: 0.0,
            velocity: 0.0,
            pool_heat: 0.0,
            cut_depth: vec![0.0; bins.max(1)],
            bypass_engaged: false,
            preheated: false,
            extinguished: false,
        }
    }
}

/// Advances the plant one step with an acceleration command, clamping the
/// velocity to the actuator ceiling.
pub fn step(
    state: &PlantState,
    accel: f64,
    dt: f64,
    plate: &PlateSpec,
    cfg: &PlantConfig,
) -> Result<PlantState> {
    if !(dt > 0.0) {
        return Err(Error::invalid("dt must be positive"));
    }
    let v = (state.velocity + accel * dt).clamp(0.0, cfg.velocity_limit);
    Ok(advance(state, v, dt, plate, cfg))
}

/// Advances the plant one step at a commanded velocity (the stepper motor
/// tracks velocity commands directly). The command is clamped to be
/// non-negative.
pub fn step_with_velocity(
    state: &PlantState,
    velocity: f64,
    dt: f64,
    plate: &PlateSpec,
    cfg: &PlantConfig,
) -> Result<PlantState> {
    if !(dt > 0.0) {
        return Err(Error::invalid("dt must be positive"));
    }
    Ok(advance(state, velocity.max(0.0), dt, plate, cfg))
}

fn advance(
    state: &PlantState,
    v: f64,
    dt: f64,
    plate: &PlateSpec,
    cfg: &PlantConfig,
) -> PlantState {
    let mut s = state.clone();
    let x0 = s.position;
    s.velocity = v;
    s.position = x0 + v * dt;

    // First-order lag toward the steady-state level for this speed.
    let target = phi(v, plate, cfg);
    s.pool_heat += (target - s.pool_heat) * (dt / plate.tau_s);
    s.pool_heat = s.pool_heat.max(0.0);

    // Extinguishment is the death of an established pool; before preheat
    // completes there is no pool to lose.
    if s.preheated && s.pool_heat < cfg.extinguish_threshold {
        s.extinguished = true;
    }

    if s.bypass_engaged && !s.extinguished && s.pool_heat >= cfg.burn_threshold {
        let rate = cfg.burn_coeff * s.pool_heat / plate.thickness_in;
        deposit(&mut s.cut_depth, x0, s.position, rate * dt, plate, cfg);
    }

    if s.pool_heat >= cfg.reseal_threshold && plate.reseal_rate > 0.0 {
        reseal(
            &mut s.cut_depth,
            s.position,
            plate.reseal_rate * dt,
            plate,
            cfg,
        );
    }

    s
}

/// Distributes a depth increment over the bins swept during the step,
/// proportional to the time spent over each bin.
fn deposit(depth: &mut [f64], x0: f64, x1: f64, amount: f64, plate: &PlateSpec, cfg: &PlantConfig) {
    let bin = cfg.bin_cm;
    let x1 = x1.min(plate.path_length_cm);
    let x0 = x0.min(plate.path_length_cm);
    let idx_of = |x: f64| ((x / bin) as usize).min(depth.len() - 1);
    if x1 - x0 < 1e-12 {
        let i = idx_of(x0);
        depth[i] = (depth[i] + amount).min(1.0);
        return;
    }
    let inv_span = 1.0 / (x1 - x0);
    let (i0, i1) = (idx_of(x0), idx_of(x1 - 1e-12));
    for (k, d) in depth[i0..=i1].iter_mut().enumerate() {
        let i = i0 + k;
        let lo = (i as f64 * bin).max(x0);
        let hi = ((i + 1) as f64 * bin).min(x1);
        if hi > lo {
            *d = (*d + amount * (hi - lo) * inv_span).min(1.0);
        }
    }
}

/// Creeping deposits take depth back from already-cut positions in a zone
/// trailing the torch.
fn reseal(depth: &mut [f64], position: f64, amount: f64, plate: &PlateSpec, cfg: &PlantConfig) {
    let bin = cfg.bin_cm;
    let zone_start = (position - cfg.reseal_zone_cm).max(0.0);
    let zone_end = position.min(plate.path_length_cm);
    if zone_end <= zone_start {
        return;
    }
    let i0 = ((zone_start / bin) as usize).min(depth.len() - 1);
    let i1 = (((zone_end - 1e-12) / bin) as usize).min(depth.len() - 1);
    for d in &mut depth[i0..=i1] {
        *d = (*d - amount).max(0.0);
    }
}

/// Frame geometry and the flame/pool visual mapping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenderConfig {
    pub frame_size: u32,
}

impl Default for RenderConfig {
    fn default() -> Self {
        RenderConfig { frame_size: 128 }
    }
}

impl RenderConfig {
    pub fn flame_center(&self) -> (f64, f64) {
        let c = (self.frame_size / 2) as f64;
        (c, c)
    }
}

/// Noise injected into cutting-mode frames, mirroring the disturbances the
/// Gaussian decay is there to suppress: ambient light pollution, transient
/// sparks far from the pool, and the residual heated trail behind the
/// torch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseConfig {
    pub enabled: bool,
    /// Additive ambient brightness ceiling (uniform per frame).
    pub background_max: u8,
    /// Maximum number of transient spark blobs per frame.
    pub sparks_max: u32,
    /// Minimum spark distance from the flame centroid, in sigmas.
    pub spark_min_sigmas: f64,
    /// Draw the residual heated trail behind the torch.
    pub trail: bool,
    /// Exponential fade length of the trail, px.
    pub trail_fade_px: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            enabled: true,
            background_max: 24,
            sparks_max: 2,
            spark_min_sigmas: 2.0,
            trail: true,
            trail_fade_px: 45.0,
        }
    }
}

const FLAME_RADII: [f64; 3] = [6.0, 10.0, 14.0];
/// Band colors carry deliberate channel overlap so quantization has to
/// resolve precedence on realistic pixels.
const BLUE_ZONE: [u8; 3] = [220, 230, 255];
const GREEN_ZONE: [u8; 3] = [210, 255, 90];
const RED_ZONE: [u8; 3] = [255, 120, 40];

/// Number of defect fingers around a distorted pool.
const POOL_FINGERS: usize = 6;
/// Angular half-width of a finger, radians.
const FINGER_HALF_WIDTH: f64 = 0.28;
/// Fixed finger orientation offset, radians.
const FINGER_PHASE: f64 = 0.37;

/// Blue-core nominal radius as a function of pool heat, px.
fn pool_radius(h: f64) -> f64 {
    if h <= 0.6 {
        6.0 + 11.0 * h
    } else {
        12.6 + 38.0 * (h - 0.6)
    }
}

/// Defect depth fraction: negligible for a healthy pool, deep as the pool
/// weakens.
fn defect_depth(h: f64) -> f64 {
    0.72 / (1.0 + ((h - 0.42) / 0.09).exp())
}

/// Disc membership biased by half a pixel so rasterized convex shapes stay
/// measurably convex at small radii.
fn in_disc(d2: f64, r: f64) -> bool {
    d2 <= r * r + r
}

/// Renders a frame of the scene. Calibration mode shows the bare torch
/// flame, noiseless; cutting mode shows the pool (when alive) plus the
/// configured disturbances. Deterministic for a fixed (state, noise, seed).
pub fn render(
    state: &PlantState,
    cal_mode: bool,
    noise: &NoiseConfig,
    rng_seed: u64,
    render_cfg: &RenderConfig,
    cfg: &PlantConfig,
) -> RgbImage {
    let size = render_cfg.frame_size;
    let (cx, cy) = render_cfg.flame_center();
    let mut img = RgbImage::black(size, size).expect("frame size is validated nonzero");

    if cal_mode {
        paint_flame(&mut img, cx, cy);
        return img;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let h = state.pool_heat;
    let pool_alive = h >= cfg.extinguish_threshold;
    let mut red_outer = 0.0;

    if pool_alive {
        let r_blue = pool_radius(h);
        let depth = defect_depth(h);
        let core = r_blue * (1.0 - depth);
        let r_green = r_blue + 2.5 + 1.5 * h;
        let r_red = r_green + 2.0 + h;
        red_outer = r_red;

        let bbox = (r_red + 2.0) as i64;
        let (icx, icy) = (cx as i64, cy as i64);
        for y in (icy - bbox).max(0)..=(icy + bbox).min(size as i64 - 1) {
            for x in (icx - bbox).max(0)..=(icx + bbox).min(size as i64 - 1) {
                let dx = x as f64 - cx;
                let dy = y as f64 - cy;
                let d2 = dx * dx + dy * dy;
                if d2 > (r_red + 1.5) * (r_red + 1.5) {
                    continue;
                }
                let theta = dy.atan2(dx);
                let r_here = finger_radius(theta, core, r_blue);
                let px = if in_disc(d2, r_here) {
                    BLUE_ZONE
                } else if in_disc(d2, r_green) {
                    GREEN_ZONE
                } else if in_disc(d2, r_red) {
                    RED_ZONE
                } else {
                    continue;
                };
                img.set(x as u32, y as u32, px);
            }
        }
    }

    if noise.enabled {
        // Residual heated trail along the already-cut path behind the torch.
        if noise.trail && state.position > 0.0 && pool_alive {
            let edge = (cx - red_outer - 4.0).max(0.0);
            for y in (cy as i64 - 2).max(0)..=(cy as i64 + 2).min(size as i64 - 1) {
                for x in 0..edge as i64 {
                    let fall = (edge - x as f64) / noise.trail_fade_px;
                    let v = (255.0 * (-fall).exp()) as u8;
                    if v > 30 {
                        img.set(x as u32, y as u32, [v, v / 4, v / 8]);
                    }
                }
            }
        }

        // Transient bright sparks well away from the flame centroid.
        // Sparks are ejected by the combustion itself, so a dead pool
        // produces none.
        let n_sparks = if pool_alive {
            rng.gen_range(0..=noise.sparks_max)
        } else {
            0
        };
        for _ in 0..n_sparks {
            let angle = rng.gen_range(0.0..std::f64::consts::TAU);
            let dist = rng.gen_range(0.0..20.0) + noise.spark_min_sigmas * 30.0;
            let (sx, sy) = (cx + dist * angle.cos(), cy + dist * angle.sin());
            let r = rng.gen_range(1..=2) as i64;
            for y in (sy as i64 - r).max(0)..=(sy as i64 + r).min(size as i64 - 1) {
                for x in (sx as i64 - r).max(0)..=(sx as i64 + r).min(size as i64 - 1) {
                    img.set(x as u32, y as u32, [255, 255, 255]);
                }
            }
        }

        // Ambient light pollution: a uniform lift below the cutoffs.
        let lift = rng.gen_range(8..=noise.background_max.max(9));
        for y in 0..size {
            for x in 0..size {
                let [r, g, b] = img.get(x, y);
                img.set(
                    x,
                    y,
                    [
                        r.saturating_add(lift),
                        g.saturating_add(lift),
                        b.saturating_add(lift),
                    ],
                );
            }
        }
    }

    img
}

/// Local pool radius: the core disc plus triangular fingers reaching the
/// nominal radius, so weakened pools grow deep convexity defects while the
/// hull still spans the finger tips.
fn finger_radius(theta: f64, core: f64, r_blue: f64) -> f64 {
    let period = std::f64::consts::TAU / POOL_FINGERS as f64;
    let mut rel = (theta - FINGER_PHASE) % period;
    if rel < 0.0 {
        rel += period;
    }
    let delta = (rel - period / 2.0).abs();
    // Distance from the nearest finger center line.
    let from_center = period / 2.0 - delta;
    let spike = (1.0 - from_center / FINGER_HALF_WIDTH).max(0.0);
    core + (r_blue - core) * spike
}

fn paint_flame(img: &mut RgbImage, cx: f64, cy: f64) {
    let size = img.width();
    let bbox = (FLAME_RADII[2] + 2.0) as i64;
    let (icx, icy) = (cx as i64, cy as i64);
    for y in (icy - bbox).max(0)..=(icy + bbox).min(size as i64 - 1) {
        for x in (icx - bbox).max(0)..=(icx + bbox).min(size as i64 - 1) {
            let dx = x as f64 - cx;
            let dy = y as f64 - cy;
            let d2 = dx * dx + dy * dy;
            let px = if in_disc(d2, FLAME_RADII[0]) {
                BLUE_ZONE
            } else if in_disc(d2, FLAME_RADII[1]) {
                GREEN_ZONE
            } else if in_disc(d2, FLAME_RADII[2]) {
                RED_ZONE
            } else {
                continue;
            };
            img.set(x as u32, y as u32, px);
        }
    }
}
