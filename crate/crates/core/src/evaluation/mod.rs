//! Residual impact speed from trigger conditions, result tables and
//! run scoring.

mod scoring;
mod table;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use scoring::{AvoidancePolicy, ScoringPolicy, ScoringRegistry, SpeedReductionPolicy, DEFAULT_SCORING_POLICY};
pub use table::{
    build_table, detect_inversion, DxOrdering, Experiment, InversionReport, ResultTable, RunLabel, RunResult, Variant,
    RESULTS_CSV_HEADER,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvaluationError {
    #[error("trigger distance must be positive, got {0} m")]
    NonPositiveDistance(f64),
    #[error("invalid brake model: {0}")]
    InvalidModel(String),
    #[error("invalid speed: {0}")]
    InvalidSpeed(String),
    #[error("duplicate result label {0}")]
    DuplicateLabel(String),
    #[error("unknown scoring policy `{name}` (available: {})", available.join(", "))]
    UnknownPolicy { name: String, available: Vec<String> },
    #[error("scoring policy `{0}` is already registered")]
    DuplicatePolicy(String),
}

/// Idealised post-trigger braking: constant speed for `delay`, then
/// constant deceleration to standstill.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BrakeModel {
    /// m/s²
    pub decel: f64,
    /// s
    pub delay: f64,
}

impl Default for BrakeModel {
    fn default() -> Self {
        Self { decel: 3.5, delay: 0.3 }
    }
}

impl BrakeModel {
    pub fn validate(&self) -> Result<(), EvaluationError> {
        if !(self.decel > 0.0 && self.decel.is_finite()) {
            return Err(EvaluationError::InvalidModel(format!("decel must be positive, got {}", self.decel)));
        }
        if !(self.delay >= 0.0 && self.delay.is_finite()) {
            return Err(EvaluationError::InvalidModel(format!("delay must be non-negative, got {}", self.delay)));
        }
        Ok(())
    }

    /// Distance covered from the trigger to standstill, m.
    pub fn stopping_distance(&self, v: f64) -> f64 {
        v * self.delay + v * v / (2.0 * self.decel)
    }
}

/// Step of the moving-target integration, s.
const MOVING_TARGET_DT: f64 = 1e-4;

/// VUT speed at impact (m/s), 0 when the gap never closes.
///
/// Stationary target: closed form. Contact during the delay keeps the
/// trigger speed; otherwise `sqrt(v² − 2·a·(D_x − v·delay))` while positive.
/// A target moving at constant `target_v` is integrated with the same brake
/// dynamics; the result is the VUT's absolute speed at contact.
pub fn residual_velocity(v_aeb: f64, d_x: f64, target_v: f64, model: &BrakeModel) -> Result<f64, EvaluationError> {
    model.validate()?;
    if !(d_x > 0.0 && d_x.is_finite()) {
        return Err(EvaluationError::NonPositiveDistance(d_x));
    }
    if !(v_aeb >= 0.0 && v_aeb.is_finite()) || !(target_v >= 0.0 && target_v.is_finite()) {
        return Err(EvaluationError::InvalidSpeed(format!("v_aeb = {v_aeb}, target_v = {target_v}")));
    }
    if target_v == 0.0 {
        return Ok(stationary_residual(v_aeb, d_x, model));
    }
    Ok(moving_residual(v_aeb, d_x, target_v, model))
}

fn stationary_residual(v: f64, d_x: f64, model: &BrakeModel) -> f64 {
    let s_delay = v * model.delay;
    if s_delay >= d_x {
        return v;
    }
    let sq = v * v - 2.0 * model.decel * (d_x - s_delay);
    if sq <= 0.0 {
        0.0
    } else {
        sq.sqrt()
    }
}

fn moving_residual(v_aeb: f64, d_x: f64, target_v: f64, model: &BrakeModel) -> f64 {
    let closing = v_aeb - target_v;
    if closing <= 0.0 {
        return 0.0;
    }
    // Both speeds are constant during the delay.
    let mut gap = d_x - closing * model.delay;
    if gap <= 0.0 {
        return v_aeb;
    }
    let dt = MOVING_TARGET_DT;
    let mut v = v_aeb;
    loop {
        // The gap stops shrinking once the VUT is no faster than the target.
        if v <= target_v {
            return 0.0;
        }
        let v_next = (v - model.decel * dt).max(0.0);
        let gap_next = gap - (0.5 * (v + v_next) - target_v) * dt;
        if gap_next <= 0.0 {
            // Contact inside the step: gap − c·τ + a·τ²/2 = 0 with c = v − target_v.
            let c = v - target_v;
            let a = model.decel;
            let disc = (c * c - 2.0 * a * gap).max(0.0);
            let tau = (2.0 * gap / (c + disc.sqrt())).min(dt);
            return (v - a * tau).max(0.0);
        }
        v = v_next;
        gap = gap_next;
    }
}
