//! Tolerance-variation graph: interaction sets, path enumeration and
//! sampling, and synthesis of perturbation profiles from a path.
//!
//! A path is a forward sequence of `resolution` interactions, one per
//! equal-length slot of the variation period starting at the test start
//! (TTC = 4 s). The set of all paths is the set of root-to-leaf paths of
//! the height-`resolution` tree rooted at the collision instant.

mod paths;
mod profile;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::units::MAX_LATERAL_OFFSET;

pub use paths::{
    enumerate_paths, format_paths, parse_paths, path_count, sample_paths, SamplingStrategy, DEFAULT_ENUMERATION_LIMIT,
};
pub use profile::{
    path_to_profile, LateralProfile, OscillationSide, PerturbationProfile, PhaseStart, ProfileParams, SpeedPhase,
    DEFAULT_OSCILLATION_AMPLITUDE, DEFAULT_OSCILLATION_PERIOD,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VariationError {
    #[error("{count} paths exceed the enumeration limit of {limit}; use sampling instead")]
    CombinatorialOverflow { count: String, limit: u64 },
    #[error("invalid variation spec: {0}")]
    InvalidSpec(String),
    #[error("oscillation amplitude {amplitude} m exceeds the {max} m lateral tolerance", max = MAX_LATERAL_OFFSET)]
    AmplitudeTooLarge { amplitude: f64 },
    #[error("speed target {target_kmh:.3} km/h is above the tolerance ceiling {ceiling_kmh:.3} km/h")]
    SpeedAboveCeiling { target_kmh: f64, ceiling_kmh: f64 },
    #[error("invalid profile parameters: {0}")]
    InvalidParams(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InteractionKind {
    LateralNudgeLeft,
    LateralNudgeRight,
    LateralHold,
    SpeedHold,
    SpeedIncrease,
}

/// One possible intervention on the VUT during a variation slot.
///
/// `magnitude` is metres for lateral nudges and m/s² for speed increases;
/// holds ignore it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interaction {
    pub kind: InteractionKind,
    pub magnitude: f64,
}

impl Interaction {
    pub fn nudge_left(m: f64) -> Self {
        Self { kind: InteractionKind::LateralNudgeLeft, magnitude: m }
    }
    pub fn nudge_right(m: f64) -> Self {
        Self { kind: InteractionKind::LateralNudgeRight, magnitude: m }
    }
    pub fn lateral_hold() -> Self {
        Self { kind: InteractionKind::LateralHold, magnitude: 0.0 }
    }
    pub fn speed_hold() -> Self {
        Self { kind: InteractionKind::SpeedHold, magnitude: 0.0 }
    }
    pub fn speed_increase(accel: f64) -> Self {
        Self { kind: InteractionKind::SpeedIncrease, magnitude: accel }
    }

    fn validate(&self) -> Result<(), VariationError> {
        let m = self.magnitude;
        match self.kind {
            InteractionKind::LateralNudgeLeft | InteractionKind::LateralNudgeRight => {
                if !(m > 0.0 && m <= 2.0 * MAX_LATERAL_OFFSET) {
                    return Err(VariationError::InvalidSpec(format!("lateral nudge magnitude {m} m out of (0, 0.2]")));
                }
            }
            InteractionKind::SpeedIncrease => {
                if !(m > 0.0 && m.is_finite()) {
                    return Err(VariationError::InvalidSpec(format!(
                        "speed increase needs a positive acceleration, got {m}"
                    )));
                }
            }
            InteractionKind::LateralHold | InteractionKind::SpeedHold => {}
        }
        Ok(())
    }
}

impl fmt::Display for Interaction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            InteractionKind::LateralNudgeLeft => write!(f, "left:{}", self.magnitude),
            InteractionKind::LateralNudgeRight => write!(f, "right:{}", self.magnitude),
            InteractionKind::LateralHold => f.write_str("lhold"),
            InteractionKind::SpeedHold => f.write_str("shold"),
            InteractionKind::SpeedIncrease => write!(f, "accel:{}", self.magnitude),
        }
    }
}

impl FromStr for Interaction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let magnitude = || -> Result<f64, String> {
            let a = arg.ok_or_else(|| format!("`{name}` needs a magnitude, e.g. `{name}:0.05`"))?;
            a.parse::<f64>().map_err(|_| format!("bad magnitude `{a}`"))
        };
        let no_arg = |i: Interaction| match arg {
            Some(_) => Err(format!("`{name}` takes no magnitude")),
            None => Ok(i),
        };
        match name {
            "left" => Ok(Interaction::nudge_left(magnitude()?)),
            "right" => Ok(Interaction::nudge_right(magnitude()?)),
            "accel" => Ok(Interaction::speed_increase(magnitude()?)),
            "lhold" => no_arg(Interaction::lateral_hold()),
            "shold" => no_arg(Interaction::speed_hold()),
            other => Err(format!("unknown interaction `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariationSpec {
    /// TTC at test start, s.
    pub t0_ttc: f64,
    /// Number of interaction slots in the variation period.
    pub resolution: usize,
    pub interaction_set: Vec<Interaction>,
    pub seed: u64,
}

impl VariationSpec {
    pub fn new(resolution: usize, interaction_set: Vec<Interaction>, seed: u64) -> Result<Self, VariationError> {
        let spec = Self { t0_ttc: 4.0, resolution, interaction_set, seed };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), VariationError> {
        if self.resolution == 0 {
            return Err(VariationError::InvalidSpec("resolution must be at least 1".into()));
        }
        if self.interaction_set.is_empty() {
            return Err(VariationError::InvalidSpec("interaction set is empty".into()));
        }
        if !(self.t0_ttc > 0.0) {
            return Err(VariationError::InvalidSpec("t0_ttc must be positive".into()));
        }
        self.interaction_set.iter().try_for_each(Interaction::validate)
    }

    /// Default five-interaction set used by the CLI and batch jobs.
    pub fn default_interactions() -> Vec<Interaction> {
        vec![
            Interaction::nudge_left(0.05),
            Interaction::nudge_right(0.05),
            Interaction::lateral_hold(),
            Interaction::speed_hold(),
            Interaction::speed_increase(0.1),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Exhaustive,
    Boundary,
    Sampled { seed: u64, index: u64 },
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Exhaustive => f.write_str("exhaustive"),
            Provenance::Boundary => f.write_str("boundary"),
            Provenance::Sampled { seed, index } => write!(f, "sampled(seed={seed},index={index})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariationPath {
    pub interactions: Vec<Interaction>,
    pub provenance: Provenance,
}

impl VariationPath {
    pub fn len(&self) -> usize {
        self.interactions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.interactions.is_empty()
    }

    /// Comma-separated mnemonics, the one-line storage form.
    pub fn to_line(&self) -> String {
        self.interactions.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
    }
}
