use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::evaluation::{BrakeModel, DEFAULT_SCORING_POLICY};
use crate::protocol::ToleranceSpec;
use crate::sim::{DelayBehavior, SimConfig, TargetProgram, TriggerSpec};
use crate::units::kmh_to_ms;
use crate::variation::{PerturbationProfile, DEFAULT_OSCILLATION_AMPLITUDE, DEFAULT_OSCILLATION_PERIOD};

/// Environment variable overriding the run-store root.
pub const STORE_ENV: &str = "NCAP_FORGE_STORE";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSettings {
    /// s
    pub dt: f64,
    /// Used when the scenario does not place both vehicles, m.
    pub initial_gap: f64,
    /// Run-up acceleration, m/s².
    pub a_accel: f64,
    /// s
    pub test_start_ttc: f64,
    /// s
    pub horizon: f64,
    pub delay_behavior: DelayBehavior,
}

impl Default for SimSettings {
    fn default() -> Self {
        let d = SimConfig::default();
        Self {
            dt: d.dt,
            initial_gap: d.initial_gap,
            a_accel: d.a_accel,
            test_start_ttc: d.test_start_ttc,
            horizon: d.horizon,
            delay_behavior: d.delay_behavior,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OscillationSettings {
    /// m
    pub amplitude: f64,
    /// s
    pub period: f64,
}

impl Default for OscillationSettings {
    fn default() -> Self {
        Self { amplitude: DEFAULT_OSCILLATION_AMPLITUDE, period: DEFAULT_OSCILLATION_PERIOD }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSettings {
    /// Constant-speed test cases, km/h.
    pub test_speeds_kmh: Vec<f64>,
    /// Speed the late-acceleration runs start from, km/h.
    pub base_speed_kmh: f64,
    /// Late acceleration, m/s².
    pub a_modify: f64,
    /// Added to the minimum feasible T_initiate, s.
    pub margin: f64,
    /// Fixed T_initiate, s; overrides `margin` when set.
    pub t_initiate: Option<f64>,
}

impl Default for ExperimentSettings {
    fn default() -> Self {
        Self {
            test_speeds_kmh: vec![25.0, 25.4, 25.8],
            base_speed_kmh: 25.0,
            a_modify: 0.1,
            margin: 0.0,
            t_initiate: None,
        }
    }
}

/// Everything a run depends on besides the scenario. Serialized into every
/// stored job as the config snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HarnessConfig {
    pub sim: SimSettings,
    pub brake: BrakeModel,
    pub tolerance: ToleranceSpec,
    pub trigger: TriggerSpec,
    pub oscillation: OscillationSettings,
    pub experiments: ExperimentSettings,
    /// Registered scoring policy name.
    pub scoring: String,
    /// Run-store root; [`STORE_ENV`] takes precedence.
    pub store: Option<PathBuf>,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        Self {
            sim: SimSettings::default(),
            brake: BrakeModel::default(),
            tolerance: ToleranceSpec::default(),
            trigger: TriggerSpec::default(),
            oscillation: OscillationSettings::default(),
            experiments: ExperimentSettings::default(),
            scoring: DEFAULT_SCORING_POLICY.into(),
            store: None,
        }
    }
}

impl HarnessConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let cfg: Self = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.brake.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_toml(&text).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Store root: explicit argument, then [`STORE_ENV`], then the config file.
    pub fn store_root(&self, explicit: Option<&Path>) -> Option<PathBuf> {
        explicit
            .map(Path::to_path_buf)
            .or_else(|| std::env::var_os(STORE_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
            .or_else(|| self.store.clone())
    }

    /// Simulator config for one approach at `test_speed` m/s.
    pub fn sim_config(
        &self,
        test_speed: f64,
        initial_gap: f64,
        profile: PerturbationProfile,
        target: TargetProgram,
    ) -> SimConfig {
        let s = &self.sim;
        SimConfig {
            dt: s.dt,
            initial_gap,
            a_accel: s.a_accel,
            brake_decel: self.brake.decel,
            brake_delay: self.brake.delay,
            test_speed,
            initial_speed: 0.0,
            profile,
            target,
            delay_behavior: s.delay_behavior,
            test_start_ttc: s.test_start_ttc,
            horizon: s.horizon,
            ..SimConfig::default()
        }
    }

    pub fn base_speed(&self) -> f64 {
        kmh_to_ms(self.experiments.base_speed_kmh)
    }
}
