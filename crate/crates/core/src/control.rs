//! Proportional combustion-state controller with actuator clamps.
//!
//! The control input is the torch's tangential acceleration,
//! `accel = -k * e_s` with `e_s = s_star - s`, clamped to the acceleration
//! limit; velocity integrates under zero-order hold at the loop period and
//! is clamped to `[0, v_max]`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerParams {
    /// Strictly positive gain.
    pub gain: f64,
    /// Desired combustion state, in (0, 1].
    pub desired_state: f64,
    /// Velocity ceiling, cm/s.
    pub v_max: f64,
    /// Acceleration magnitude limit, cm/s^2.
    pub a_max: f64,
    /// Loop period, s.
    pub dt: f64,
}

impl Default for ControllerParams {
    fn default() -> Self {
        ControllerParams {
            gain: 200.0,
            desired_state: 0.6,
            v_max: 2.0,
            a_max: 0.8,
            dt: 0.05,
        }
    }
}

impl ControllerParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.gain > 0.0) {
            return Err(Error::ConfigValidation("gain must be > 0".into()));
        }
        if !(self.desired_state > 0.0 && self.desired_state <= 1.0) {
            return Err(Error::ConfigValidation(
                "desired_state must be in (0, 1]".into(),
            ));
        }
        if !(self.v_max > 0.0) {
            return Err(Error::ConfigValidation("v_max must be > 0".into()));
        }
        if !(self.a_max > 0.0) {
            return Err(Error::ConfigValidation("a_max must be > 0".into()));
        }
        if !(self.dt > 0.0) {
            return Err(Error::ConfigValidation("dt must be > 0".into()));
        }
        Ok(())
    }
}

/// Combustion-state error `e_s = s_star - s`.
pub fn state_error(s_star: f64, s: f64) -> f64 {
    s_star - s
}

/// Clamped control acceleration: accelerate when the state is excessive,
/// decelerate when it is deficient.
pub fn control_accel(e_s: f64, params: &ControllerParams) -> f64 {
    (-params.gain * e_s).clamp(-params.a_max, params.a_max)
}

/// Velocity update under zero-order hold, clamped to `[0, v_max]`.
pub fn apply_velocity_update(v: f64, accel: f64, params: &ControllerParams) -> f64 {
    (v + accel * params.dt).clamp(0.0, params.v_max)
}

/// Lyapunov candidate `V = e_s^2 / 2`.
pub fn lyapunov(e_s: f64) -> f64 {
    0.5 * e_s * e_s
}
