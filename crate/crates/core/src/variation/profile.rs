use serde::{Deserialize, Serialize};

use super::{InteractionKind, VariationError, VariationPath};
use crate::units::{kmh_to_ms, ms_to_kmh, MAX_LATERAL_OFFSET, SPEED_TOLERANCE_KMH};

pub const DEFAULT_OSCILLATION_AMPLITUDE: f64 = 0.1;
/// Long enough that a 0.1 m sinusoid stays inside the 1 °/s yaw-rate band
/// from 20 km/h upward (peak yaw rate = A·ω²/v).
pub const DEFAULT_OSCILLATION_PERIOD: f64 = 8.0;

/// Which side of the ideal trajectory an oscillation visits first.
/// Left is negative `y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OscillationSide {
    Left,
    Right,
}

impl OscillationSide {
    fn sign(self) -> f64 {
        match self {
            OscillationSide::Left => -1.0,
            OscillationSide::Right => 1.0,
        }
    }
}

/// Lateral offset from the ideal trajectory as a function of absolute time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum LateralProfile {
    Ideal,
    /// `y(t) = amplitude · sin(2π (t − anchor) / period)` for `t ≥ anchor − lead_in`,
    /// zero before. A negative amplitude heads left at the anchor.
    Sinusoid {
        amplitude: f64,
        period: f64,
        anchor: f64,
        lead_in: f64,
    },
    /// Smoothstep between consecutive `(t, y)` knots, constant outside.
    Piecewise {
        knots: Vec<(f64, f64)>,
    },
}

impl LateralProfile {
    /// Sinusoid crossing zero at `anchor` heading towards `side`.
    ///
    /// The oscillation starts half a period earlier, so the kink where it
    /// leaves the ideal line lies before `anchor`.
    pub fn oscillating(
        side: OscillationSide,
        amplitude: f64,
        period: f64,
        anchor: f64,
    ) -> Result<Self, VariationError> {
        if !(0.0..=MAX_LATERAL_OFFSET).contains(&amplitude) {
            return Err(VariationError::AmplitudeTooLarge { amplitude });
        }
        if !(period > 0.0) {
            return Err(VariationError::InvalidParams(format!("oscillation period must be positive, got {period}")));
        }
        Ok(LateralProfile::Sinusoid { amplitude: side.sign() * amplitude, period, anchor, lead_in: period / 2.0 })
    }

    pub fn offset(&self, t: f64) -> f64 {
        match self {
            LateralProfile::Ideal => 0.0,
            LateralProfile::Sinusoid { amplitude, period, anchor, lead_in } => {
                if t < anchor - lead_in {
                    0.0
                } else {
                    amplitude * (std::f64::consts::TAU * (t - anchor) / period).sin()
                }
            }
            LateralProfile::Piecewise { knots } => piecewise(knots, t).0,
        }
    }

    /// dy/dt.
    pub fn rate(&self, t: f64) -> f64 {
        match self {
            LateralProfile::Ideal => 0.0,
            LateralProfile::Sinusoid { amplitude, period, anchor, lead_in } => {
                if t < anchor - lead_in {
                    0.0
                } else {
                    let w = std::f64::consts::TAU / period;
                    amplitude * w * (w * (t - anchor)).cos()
                }
            }
            LateralProfile::Piecewise { knots } => piecewise(knots, t).1,
        }
    }

    /// Mirror image across the ideal trajectory.
    pub fn mirrored(&self) -> Self {
        match self {
            LateralProfile::Ideal => LateralProfile::Ideal,
            LateralProfile::Sinusoid { amplitude, period, anchor, lead_in } => {
                LateralProfile::Sinusoid { amplitude: -amplitude, period: *period, anchor: *anchor, lead_in: *lead_in }
            }
            LateralProfile::Piecewise { knots } => {
                LateralProfile::Piecewise { knots: knots.iter().map(|&(t, y)| (t, -y)).collect() }
            }
        }
    }
}

fn piecewise(knots: &[(f64, f64)], t: f64) -> (f64, f64) {
    let Some(first) = knots.first() else {
        return (0.0, 0.0);
    };
    if t <= first.0 {
        return (first.1, 0.0);
    }
    for w in knots.windows(2) {
        let ((ta, ya), (tb, yb)) = (w[0], w[1]);
        if t < tb {
            let span = tb - ta;
            if span <= 0.0 {
                return (yb, 0.0);
            }
            let s = (t - ta) / span;
            let h = s * s * (3.0 - 2.0 * s);
            let dh = 6.0 * s * (1.0 - s) / span;
            return (ya + (yb - ya) * h, (yb - ya) * dh);
        }
    }
    (knots[knots.len() - 1].1, 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "when", content = "t", rename_all = "snake_case")]
pub enum PhaseStart {
    Immediately,
    AtTime(f64),
}

/// One entry of the driver robot's speed program.
///
/// The active phase is the last one whose start has passed. The robot
/// accelerates (or decelerates) at `accel` towards `target` without
/// overshooting it; `target = None` holds the current speed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedPhase {
    pub start: PhaseStart,
    pub accel: f64,
    pub target: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationProfile {
    pub lateral: LateralProfile,
    pub speed_program: Vec<SpeedPhase>,
}

impl PerturbationProfile {
    /// Accelerate from the initial speed to `test_speed`, then hold.
    pub fn constant_speed(test_speed: f64, accel: f64, lateral: LateralProfile) -> Self {
        Self {
            lateral,
            speed_program: vec![SpeedPhase { start: PhaseStart::Immediately, accel, target: Some(test_speed) }],
        }
    }

    /// Reach `base_speed`, then from `start_t` accelerate at `a_modify` to
    /// `target_speed`. Targets above `base_speed + 1 km/h` are rejected.
    pub fn late_acceleration(
        base_speed: f64,
        base_accel: f64,
        target_speed: f64,
        a_modify: f64,
        start_t: f64,
        lateral: LateralProfile,
    ) -> Result<Self, VariationError> {
        check_ceiling(target_speed, base_speed)?;
        if !(a_modify > 0.0) {
            return Err(VariationError::InvalidParams(format!("a_modify must be positive, got {a_modify}")));
        }
        Ok(Self {
            lateral,
            speed_program: vec![
                SpeedPhase { start: PhaseStart::Immediately, accel: base_accel, target: Some(base_speed) },
                SpeedPhase { start: PhaseStart::AtTime(start_t), accel: a_modify, target: Some(target_speed) },
            ],
        })
    }

    pub fn lateral_offset(&self, t: f64) -> f64 {
        self.lateral.offset(t)
    }

    /// Active phase at time `t`.
    pub fn active_phase(&self, t: f64) -> Option<&SpeedPhase> {
        self.speed_program.iter().rev().find(|p| match p.start {
            PhaseStart::Immediately => true,
            PhaseStart::AtTime(s) => t >= s,
        })
    }

    /// Highest speed any phase of the program targets.
    pub fn max_target(&self) -> Option<f64> {
        self.speed_program.iter().filter_map(|p| p.target).reduce(f64::max)
    }

    /// Largest |y| over `[from, to]` sampled every `dt`.
    pub fn max_abs_lateral(&self, from: f64, to: f64, dt: f64) -> f64 {
        let steps = ((to - from) / dt).ceil().max(0.0) as usize;
        (0..=steps).map(|k| self.lateral_offset((from + k as f64 * dt).min(to)).abs()).fold(0.0, f64::max)
    }

    /// Lateral and speed-target tolerance check over `[from, to]`.
    pub fn check_tolerances(&self, test_speed: f64, from: f64, to: f64, dt: f64) -> Result<(), VariationError> {
        let lat = self.max_abs_lateral(from, to, dt);
        if lat > MAX_LATERAL_OFFSET + 1e-12 {
            return Err(VariationError::AmplitudeTooLarge { amplitude: lat });
        }
        if let Some(max) = self.max_target() {
            check_ceiling(max, test_speed)?;
        }
        Ok(())
    }
}

fn check_ceiling(target: f64, test_speed: f64) -> Result<(), VariationError> {
    let ceiling_kmh = ms_to_kmh(test_speed) + SPEED_TOLERANCE_KMH;
    let target_kmh = ms_to_kmh(target);
    if target_kmh > ceiling_kmh + 1e-9 {
        return Err(VariationError::SpeedAboveCeiling { target_kmh, ceiling_kmh });
    }
    Ok(())
}

/// Inputs for turning a variation path into a concrete profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileParams {
    /// m/s
    pub test_speed: f64,
    /// Run-up acceleration, m/s².
    pub base_accel: f64,
    /// Absolute time of the test start (TTC = 4 s) on the unperturbed run.
    pub test_start: f64,
    /// Duration of one interaction slot, s.
    pub slot_duration: f64,
}

/// Slot `k` of the path covers `[test_start + k·slot, test_start + (k+1)·slot)`.
///
/// Lateral nudges move the held lateral level by their magnitude (clamped to
/// the ±0.1 m band) with a smoothstep transition across the slot; speed
/// interactions switch the speed program at the slot start, towards a ceiling
/// of test speed + 1 km/h for increases. Lateral interactions leave the speed
/// program untouched and vice versa.
pub fn path_to_profile(path: &VariationPath, params: &ProfileParams) -> Result<PerturbationProfile, VariationError> {
    if !(params.slot_duration > 0.0) || !(params.test_speed > 0.0) || !(params.base_accel > 0.0) {
        return Err(VariationError::InvalidParams(
            "test speed, base acceleration and slot duration must be positive".into(),
        ));
    }
    let ceiling = kmh_to_ms(ms_to_kmh(params.test_speed) + SPEED_TOLERANCE_KMH);
    let mut knots = vec![(params.test_start, 0.0)];
    let mut level: f64 = 0.0;
    let mut program =
        vec![SpeedPhase { start: PhaseStart::Immediately, accel: params.base_accel, target: Some(params.test_speed) }];

    for (k, step) in path.interactions.iter().enumerate() {
        let start = params.test_start + k as f64 * params.slot_duration;
        let end = start + params.slot_duration;
        let mut nudge = |delta: f64| {
            let next = (level + delta).clamp(-MAX_LATERAL_OFFSET, MAX_LATERAL_OFFSET);
            if next != level {
                knots.push((start, level));
                knots.push((end, next));
                level = next;
            }
        };
        match step.kind {
            InteractionKind::LateralNudgeLeft => nudge(-step.magnitude),
            InteractionKind::LateralNudgeRight => nudge(step.magnitude),
            InteractionKind::LateralHold => {}
            InteractionKind::SpeedHold => {
                program.push(SpeedPhase { start: PhaseStart::AtTime(start), accel: 0.0, target: None });
            }
            InteractionKind::SpeedIncrease => {
                program.push(SpeedPhase {
                    start: PhaseStart::AtTime(start),
                    accel: step.magnitude,
                    target: Some(ceiling),
                });
            }
        }
    }
    knots.dedup();
    let lateral =
        if knots.iter().all(|&(_, y)| y == 0.0) { LateralProfile::Ideal } else { LateralProfile::Piecewise { knots } };
    Ok(PerturbationProfile { lateral, speed_program: program })
}
