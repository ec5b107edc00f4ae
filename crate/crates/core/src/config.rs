//! Run configuration: a TOML schema whose defaults reproduce the
//! reference parameter set (gain 200, convexity reference 0.95, intensity
//! reference 0.25, velocity cap 2.0 cm/s, acceleration cap 0.8 cm/s^2,
//! 30 px Gaussian widths, color weights 0.01/0.04/0.16, saturation 10,
//! lambda 1/2). An empty file is a valid config.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::contour::SelectParams;
use crate::control::ControllerParams;
use crate::error::{Error, Result};
use crate::features::IntensityParams;
use crate::harness::{ExperimentSetup, Mode};
use crate::image::ChannelCutoffs;
use crate::plant::{NoiseConfig, PlantConfig, PlateSpec, RenderConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
    pub dump_frames: bool,
    /// Worker threads for suite runs; 0 uses all cores.
    pub jobs: usize,
    /// "slow", "fast", "controlled", or "constant".
    pub mode: String,
    /// Open-loop speed for mode = "constant", cm/s.
    pub constant_speed: f64,
    /// Plate selection by thickness (must match a configured plate).
    pub plate: f64,
    /// Run the full 3x3 mode-by-thickness comparison.
    pub suite: bool,
    pub controller: ControllerSection,
    pub intensity: IntensitySection,
    pub vision: VisionSection,
    pub plant: PlantSection,
    pub noise: NoiseSection,
    pub plates: Vec<PlateSection>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 42,
            out_dir: None,
            dump_frames: false,
            jobs: 0,
            mode: "controlled".into(),
            constant_speed: 1.0,
            plate: 0.375,
            suite: false,
            controller: ControllerSection::default(),
            intensity: IntensitySection::default(),
            vision: VisionSection::default(),
            plant: PlantSection::default(),
            noise: NoiseSection::default(),
            plates: PlateSection::default_set(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerSection {
    pub gain: f64,
    pub desired_convexity: f64,
    pub desired_intensity: f64,
    pub lambda: f64,
    pub v_max: f64,
    pub a_max: f64,
    pub dt: f64,
    pub initial_velocity_factor: f64,
    /// Overrides the reference state derived from the convexity and
    /// intensity references when set.
    pub desired_state: Option<f64>,
}

impl Default for ControllerSection {
    fn default() -> Self {
        ControllerSection {
            gain: 200.0,
            desired_convexity: 0.95,
            desired_intensity: 0.25,
            lambda: 0.5,
            v_max: 2.0,
            a_max: 0.8,
            dt: 0.05,
            initial_velocity_factor: 0.5,
            desired_state: None,
        }
    }
}

impl ControllerSection {
    /// The tracked reference: `s* = lambda*c* + (1-lambda)*i*` unless
    /// overridden directly.
    pub fn desired_state(&self) -> f64 {
        self.desired_state.unwrap_or(
            self.lambda * self.desired_convexity + (1.0 - self.lambda) * self.desired_intensity,
        )
    }

    pub fn controller_params(&self) -> ControllerParams {
        ControllerParams {
            gain: self.gain,
            desired_state: self.desired_state(),
            v_max: self.v_max,
            a_max: self.a_max,
            dt: self.dt,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntensitySection {
    pub sigma_x: f64,
    pub sigma_y: f64,
    pub w_red: f64,
    pub w_green: f64,
    pub w_blue: f64,
    pub i_sat: f64,
}

impl Default for IntensitySection {
    fn default() -> Self {
        let p = IntensityParams::default();
        IntensitySection {
            sigma_x: p.sigma_x,
            sigma_y: p.sigma_y,
            w_red: p.w_red,
            w_green: p.w_green,
            w_blue: p.w_blue,
            i_sat: p.i_sat,
        }
    }
}

impl IntensitySection {
    pub fn intensity_params(&self) -> IntensityParams {
        IntensityParams {
            sigma_x: self.sigma_x,
            sigma_y: self.sigma_y,
            w_red: self.w_red,
            w_green: self.w_green,
            w_blue: self.w_blue,
            i_sat: self.i_sat,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VisionSection {
    pub cutoff_red: u8,
    pub cutoff_green: u8,
    pub cutoff_blue: u8,
    pub distance_exponent: f64,
    pub calibration_frames: u32,
}

impl Default for VisionSection {
    fn default() -> Self {
        VisionSection {
            cutoff_red: 200,
            cutoff_green: 200,
            cutoff_blue: 200,
            distance_exponent: 1.0,
            calibration_frames: 10,
        }
    }
}

impl VisionSection {
    pub fn cutoffs(&self) -> ChannelCutoffs {
        ChannelCutoffs {
            red: self.cutoff_red,
            green: self.cutoff_green,
            blue: self.cutoff_blue,
        }
    }

    pub fn select_params(&self) -> SelectParams {
        SelectParams {
            distance_exponent: self.distance_exponent,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlantSection {
    pub s0: f64,
    pub step_ratio: f64,
    pub step_power: i32,
    pub tail_power: i32,
    pub burn_threshold: f64,
    pub reseal_threshold: f64,
    pub extinguish_threshold: f64,
    pub burn_coeff: f64,
    pub reseal_zone_cm: f64,
    pub preheat_fraction: f64,
    pub bin_cm: f64,
    pub velocity_limit: f64,
    pub frame_size: u32,
}

impl Default for PlantSection {
    fn default() -> Self {
        let p = PlantConfig::default();
        PlantSection {
            s0: p.s0,
            step_ratio: p.step_ratio,
            step_power: p.step_power,
            tail_power: p.tail_power,
            burn_threshold: p.burn_threshold,
            reseal_threshold: p.reseal_threshold,
            extinguish_threshold: p.extinguish_threshold,
            burn_coeff: p.burn_coeff,
            reseal_zone_cm: p.reseal_zone_cm,
            preheat_fraction: p.preheat_fraction,
            bin_cm: p.bin_cm,
            velocity_limit: p.velocity_limit,
            frame_size: RenderConfig::default().frame_size,
        }
    }
}

impl PlantSection {
    pub fn plant_config(&self) -> PlantConfig {
        PlantConfig {
            s0: self.s0,
            step_ratio: self.step_ratio,
            step_power: self.step_power,
            tail_power: self.tail_power,
            burn_threshold: self.burn_threshold,
            reseal_threshold: self.reseal_threshold,
            extinguish_threshold: self.extinguish_threshold,
            burn_coeff: self.burn_coeff,
            reseal_zone_cm: self.reseal_zone_cm,
            preheat_fraction: self.preheat_fraction,
            bin_cm: self.bin_cm,
            velocity_limit: self.velocity_limit,
        }
    }

    pub fn render_config(&self) -> RenderConfig {
        RenderConfig {
            frame_size: self.frame_size,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSection {
    pub enabled: bool,
    pub background_max: u8,
    pub sparks_max: u32,
    pub spark_min_sigmas: f64,
    pub trail: bool,
    pub trail_fade_px: f64,
}

impl Default for NoiseSection {
    fn default() -> Self {
        let n = NoiseConfig::default();
        NoiseSection {
            enabled: n.enabled,
            background_max: n.background_max,
            sparks_max: n.sparks_max,
            spark_min_sigmas: n.spark_min_sigmas,
            trail: n.trail,
            trail_fade_px: n.trail_fade_px,
        }
    }
}

impl NoiseSection {
    pub fn noise_config(&self) -> NoiseConfig {
        NoiseConfig {
            enabled: self.enabled,
            background_max: self.background_max,
            sparks_max: self.sparks_max,
            spark_min_sigmas: self.spark_min_sigmas,
            trail: self.trail,
            trail_fade_px: self.trail_fade_px,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlateSection {
    pub thickness_in: f64,
    pub path_length_cm: f64,
    pub tau_s: f64,
    pub v_star: f64,
    pub tail_ratio: f64,
    pub reseal_rate: f64,
}

impl Default for PlateSection {
    fn default() -> Self {
        PlateSection {
            thickness_in: 0.375,
            path_length_cm: 20.0,
            tau_s: 0.95,
            v_star: 0.82,
            tail_ratio: 2.2,
            reseal_rate: 0.05,
        }
    }
}

impl PlateSection {
    fn default_set() -> Vec<PlateSection> {
        vec![
            PlateSection {
                thickness_in: 0.250,
                path_length_cm: 20.0,
                tau_s: 0.8,
                v_star: 1.00,
                tail_ratio: 1.88,
                reseal_rate: 0.0,
            },
            PlateSection {
                thickness_in: 0.375,
                path_length_cm: 20.0,
                tau_s: 0.95,
                v_star: 0.82,
                tail_ratio: 2.2,
                reseal_rate: 0.05,
            },
            PlateSection {
                thickness_in: 0.500,
                path_length_cm: 20.0,
                tau_s: 1.10,
                v_star: 0.62,
                tail_ratio: 2.6,
                reseal_rate: 0.25,
            },
        ]
    }
}

impl RunConfig {
    /// Loads and validates a config file. An empty file yields the full
    /// default parameter set.
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: RunConfig = toml::from_str(&text).map_err(|e| Error::ConfigParse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.controller.controller_params().validate()?;
        self.intensity.intensity_params().validate()?;
        self.vision
            .cutoffs()
            .validate()
            .map_err(|_| Error::ConfigValidation("channel cutoffs must be in 1..=255".into()))?;
        self.plant.plant_config().validate()?;
        if !(0.0..=1.0).contains(&self.controller.lambda) {
            return Err(Error::ConfigValidation("lambda must be in [0, 1]".into()));
        }
        if !(self.controller.initial_velocity_factor > 0.0) {
            return Err(Error::ConfigValidation(
                "initial_velocity_factor must be > 0".into(),
            ));
        }
        if self.plant.frame_size < 32 {
            return Err(Error::ConfigValidation(
                "frame_size must be at least 32".into(),
            ));
        }
        if self.plates.is_empty() {
            return Err(Error::ConfigValidation(
                "at least one plate must be configured".into(),
            ));
        }
        match self.mode.as_str() {
            "slow" | "fast" | "controlled" => {}
            "constant" => {
                if !(self.constant_speed >= 0.0) {
                    return Err(Error::ConfigValidation(
                        "constant_speed must be >= 0".into(),
                    ));
                }
            }
            other => {
                return Err(Error::ConfigValidation(format!(
                    "mode must be slow, fast, controlled, or constant (got {other:?})"
                )));
            }
        }
        // Building the plates checks their own invariants.
        self.build_plates()?;
        self.plate_index()?;
        Ok(())
    }

    pub fn mode_value(&self) -> Mode {
        match self.mode.as_str() {
            "slow" => Mode::Slow,
            "fast" => Mode::Fast,
            "constant" => Mode::Constant(self.constant_speed),
            _ => Mode::Controlled,
        }
    }

    pub fn build_plates(&self) -> Result<Vec<PlateSpec>> {
        let cfg = self.plant.plant_config();
        let s_star = self.controller.desired_state();
        self.plates
            .iter()
            .map(|p| {
                PlateSpec::calibrated(
                    p.thickness_in,
                    p.path_length_cm,
                    p.tau_s,
                    p.v_star,
                    p.tail_ratio,
                    p.reseal_rate,
                    s_star,
                    &cfg,
                )
            })
            .collect()
    }

    /// Index of the plate selected by thickness.
    pub fn plate_index(&self) -> Result<usize> {
        self.plates
            .iter()
            .position(|p| (p.thickness_in - self.plate).abs() < 1e-9)
            .ok_or_else(|| {
                Error::ConfigValidation(format!(
                    "plate {} does not match any configured thickness",
                    self.plate
                ))
            })
    }

    /// Builds the setup for one run. Suite runs derive a distinct seed per
    /// (mode, plate) cell from the base seed.
    pub fn experiment_setup(
        &self,
        mode: Mode,
        plate_index: usize,
        dump_dir: Option<PathBuf>,
    ) -> Result<ExperimentSetup> {
        let plates = self.build_plates()?;
        let plate = *plates.get(plate_index).ok_or_else(|| {
            Error::ConfigValidation(format!("plate index {plate_index} out of range"))
        })?;
        let mode_ord = match mode {
            Mode::Slow => 0u64,
            Mode::Fast => 1,
            Mode::Controlled => 2,
            Mode::Constant(_) => 3,
        };
        Ok(ExperimentSetup {
            mode,
            plate,
            plant: self.plant.plant_config(),
            render: self.plant.render_config(),
            noise: self.noise.noise_config(),
            controller: self.controller.controller_params(),
            intensity: self.intensity.intensity_params(),
            select: self.vision.select_params(),
            cutoffs: self.vision.cutoffs(),
            lambda: self.controller.lambda,
            seed: self
                .seed
                .wrapping_add(mode_ord.wrapping_mul(0x9e37_79b9))
                .wrapping_add((plate_index as u64).wrapping_mul(0x85eb_ca6b)),
            initial_velocity_factor: self.controller.initial_velocity_factor,
            calibration_frames: self.vision.calibration_frames,
            dump_frames: dump_dir,
        })
    }

    /// The 3x3 comparison grid: every mode over every configured plate.
    pub fn suite_grid(&self) -> Vec<(Mode, usize)> {
        let mut grid = Vec::new();
        for mode in [Mode::Slow, Mode::Fast, Mode::Controlled] {
            for plate_index in 0..self.plates.len() {
                grid.push((mode, plate_index));
            }
        }
        grid
    }
}
