use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sim::Trace;
use crate::units::{ms_to_kmh, rad_to_deg, MAX_LATERAL_OFFSET, SPEED_TOLERANCE_KMH};

const EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpeedBound {
    /// Only `test speed + tolerance` is enforced.
    #[default]
    OneSided,
    Symmetric,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ToleranceSpec {
    /// km/h above the test speed
    pub vut_speed_over: f64,
    /// m either side of the ideal trajectory
    pub lateral: f64,
    /// km/h either side of the nominal target speed
    pub target_speed: f64,
    /// °/s
    pub yaw_rate: f64,
    /// °/s
    pub steer_rate: f64,
    /// TTC opening the validity window, s. The window closes at activation.
    pub window_start_ttc: f64,
    pub speed_bound: SpeedBound,
}

impl Default for ToleranceSpec {
    fn default() -> Self {
        Self {
            vut_speed_over: SPEED_TOLERANCE_KMH,
            lateral: MAX_LATERAL_OFFSET,
            target_speed: 1.0,
            yaw_rate: 1.0,
            steer_rate: 15.0,
            window_start_ttc: 4.0,
            speed_bound: SpeedBound::OneSided,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parameter {
    VutSpeed,
    Lateral,
    TargetSpeed,
    YawRate,
    SteerRate,
}

/// One out-of-band sample. Speeds in km/h, lateral in m, rates in °/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub parameter: Parameter,
    pub t: f64,
    pub value: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidityReport {
    pub valid: bool,
    pub violations: Vec<Violation>,
    /// Parameters whose channel the trace does not carry.
    pub not_evaluated: Vec<Parameter>,
    /// Checked interval `[start, end]`; `None` when the test start was never reached.
    pub window: Option<(f64, f64)>,
}

/// Nominal speeds the trace is judged against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Nominal {
    pub test_speed_kmh: f64,
    /// `None` skips the target-speed band (stationary target).
    pub target_speed_kmh: Option<f64>,
    /// The target band applies only before this time (braking-target onset).
    pub target_band_until: Option<f64>,
}

impl Nominal {
    pub fn stationary(test_speed_kmh: f64) -> Self {
        Self { test_speed_kmh, target_speed_kmh: None, target_band_until: None }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ValidityError {
    #[error("trace has no samples")]
    EmptyTrace,
    #[error("trace channel `{channel}` is not finite at t = {t}")]
    NonFinite { channel: &'static str, t: f64 },
}

/// Checks every sample in `[t(TTC = window_start_ttc), activation or end]`.
///
/// The window opens at the first sample whose TTC is at or below the start
/// TTC; a trace that already starts inside it opens at its first sample.
pub fn check_validity(
    trace: &Trace,
    nominal: &Nominal,
    tol: &ToleranceSpec,
    activation_t: Option<f64>,
) -> Result<ValidityReport, ValidityError> {
    let last = trace.samples.last().ok_or(ValidityError::EmptyTrace)?;
    for s in &trace.samples {
        let t = s.t();
        for (channel, value) in
            [("t", t), ("v_vut", s.vut.v), ("y_vut", s.vut.y), ("yaw_rate", s.vut.yaw_rate), ("v_tgt", s.target.v)]
        {
            if !value.is_finite() {
                return Err(ValidityError::NonFinite { channel, t });
            }
        }
    }

    let steer_present = trace.samples.iter().any(|s| s.steer_rate.is_some());
    let not_evaluated = if steer_present { vec![] } else { vec![Parameter::SteerRate] };

    let Some(start) =
        trace.samples.iter().find(|s| s.ttc.is_some_and(|ttc| ttc <= tol.window_start_ttc)).map(|s| s.t())
    else {
        return Ok(ValidityReport { valid: true, violations: vec![], not_evaluated, window: None });
    };
    let end = activation_t.unwrap_or(last.t());

    let mut violations = Vec::new();
    let mut flag = |parameter, t, value: f64, bound: f64| violations.push(Violation { parameter, t, value, bound });

    let speed_ceiling = nominal.test_speed_kmh + tol.vut_speed_over;
    let speed_floor = nominal.test_speed_kmh - tol.vut_speed_over;
    for s in trace.samples.iter().filter(|s| s.t() >= start - EPS && s.t() <= end + EPS) {
        let t = s.t();
        let v = ms_to_kmh(s.vut.v);
        if v > speed_ceiling + EPS {
            flag(Parameter::VutSpeed, t, v, speed_ceiling);
        } else if tol.speed_bound == SpeedBound::Symmetric && v < speed_floor - EPS {
            flag(Parameter::VutSpeed, t, v, speed_floor);
        }

        let y = s.vut.y;
        if y.abs() > tol.lateral + EPS {
            flag(Parameter::Lateral, t, y, tol.lateral.copysign(y));
        }

        let yaw = rad_to_deg(s.vut.yaw_rate);
        if yaw.abs() > tol.yaw_rate + EPS {
            flag(Parameter::YawRate, t, yaw, tol.yaw_rate.copysign(yaw));
        }

        if let Some(steer) = s.steer_rate {
            if steer.abs() > tol.steer_rate + EPS {
                flag(Parameter::SteerRate, t, steer, tol.steer_rate.copysign(steer));
            }
        }

        if let Some(nom) = nominal.target_speed_kmh {
            let in_band_phase = nominal.target_band_until.is_none_or(|until| t < until);
            let vt = ms_to_kmh(s.target.v);
            if in_band_phase && (vt - nom).abs() > tol.target_speed + EPS {
                flag(Parameter::TargetSpeed, t, vt, nom + tol.target_speed.copysign(vt - nom));
            }
        }
    }
    Ok(ValidityReport { valid: violations.is_empty(), violations, not_evaluated, window: Some((start, end)) })
}
