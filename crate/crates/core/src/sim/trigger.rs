//! Emergency-braking trigger interface, built-in implementations and the
//! name-keyed registry used to select one at runtime.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::units::MAX_LATERAL_OFFSET;

/// What a trigger can see at one simulation step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub t: f64,
    /// Longitudinal gap to the target, m.
    pub gap: f64,
    /// VUT speed minus target speed, m/s.
    pub closing_speed: f64,
    pub lateral_offset: f64,
    pub own_speed: f64,
}

impl Observation {
    /// gap / closing speed, defined only while closing.
    pub fn ttc(&self) -> Option<f64> {
        (self.closing_speed > 0.0).then(|| self.gap / self.closing_speed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Hold,
    Fire,
}

/// Black-box emergency braking decision.
///
/// The simulator stops querying a trigger once it has fired; a trigger
/// instance belongs to exactly one run.
pub trait AebTrigger: Send {
    fn name(&self) -> &str;
    fn decide(&mut self, obs: &Observation) -> Decision;
}

impl fmt::Debug for dyn AebTrigger {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "AebTrigger({})", self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TriggerError {
    #[error("unknown trigger `{name}` (available: {})", available.join(", "))]
    Unknown { name: String, available: Vec<String> },
    #[error("trigger `{trigger}` has no parameter `{param}`")]
    UnknownParam { trigger: String, param: String },
    #[error("trigger `{trigger}` requires parameter `{param}`")]
    MissingParam { trigger: String, param: String },
    #[error("trigger `{trigger}`: {message}")]
    InvalidParam { trigger: String, message: String },
    #[error("trigger `{0}` is already registered")]
    Duplicate(String),
}

/// Time-to-collision trigger with a constant-acceleration closing model.
///
/// Fires when the time until the gap closes, assuming the current closing
/// acceleration persists, drops to the threshold. Closing acceleration is the
/// backward difference of successive observations; with constant closing
/// speed the TTC is plain gap / closing speed. Latched once fired.
#[derive(Debug, Clone)]
pub struct TtcTrigger {
    threshold: f64,
    prev: Option<(f64, f64)>,
    fired: bool,
}

impl TtcTrigger {
    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    fn estimate(&mut self, obs: &Observation) -> Option<f64> {
        let accel = match self.prev {
            Some((t, c)) if obs.t > t => (obs.closing_speed - c) / (obs.t - t),
            _ => 0.0,
        };
        self.prev = Some((obs.t, obs.closing_speed));
        accel_ttc(obs.gap, obs.closing_speed, accel)
    }
}

/// Smallest positive root of `gap = c·τ + a·τ²/2`, or `None` when the gap
/// never closes. Requires `c > 0`.
pub fn accel_ttc(gap: f64, closing: f64, accel: f64) -> Option<f64> {
    if closing <= 0.0 {
        return None;
    }
    if gap <= 0.0 {
        return Some(0.0);
    }
    let disc = closing * closing + 2.0 * accel * gap;
    if disc < 0.0 {
        return None;
    }
    Some(2.0 * gap / (closing + disc.sqrt()))
}

/// Reference stand-in for a supplier AEB function.
pub fn reference_trigger(ttc_threshold: f64) -> Result<TtcTrigger, TriggerError> {
    if !(ttc_threshold > 0.0 && ttc_threshold.is_finite()) {
        return Err(TriggerError::InvalidParam {
            trigger: "ttc".into(),
            message: format!("threshold must be positive, got {ttc_threshold}"),
        });
    }
    Ok(TtcTrigger { threshold: ttc_threshold, prev: None, fired: false })
}

impl AebTrigger for TtcTrigger {
    fn name(&self) -> &str {
        "ttc"
    }

    fn decide(&mut self, obs: &Observation) -> Decision {
        if self.fired {
            return Decision::Fire;
        }
        if let Some(ttc) = self.estimate(obs) {
            if ttc <= self.threshold {
                self.fired = true;
                return Decision::Fire;
            }
        }
        Decision::Hold
    }
}

/// [`TtcTrigger`] whose threshold scales with lateral misalignment:
/// `threshold · (1 + sensitivity · |y| / 0.1 m)`. Symmetric in `y`.
#[derive(Debug, Clone)]
pub struct LateralTtcTrigger {
    inner: TtcTrigger,
    sensitivity: f64,
}

impl AebTrigger for LateralTtcTrigger {
    fn name(&self) -> &str {
        "ttc-lateral"
    }

    fn decide(&mut self, obs: &Observation) -> Decision {
        if self.inner.fired {
            return Decision::Fire;
        }
        let threshold = self.inner.threshold * (1.0 + self.sensitivity * obs.lateral_offset.abs() / MAX_LATERAL_OFFSET);
        match self.inner.estimate(obs) {
            Some(ttc) if ttc <= threshold => {
                self.inner.fired = true;
                Decision::Fire
            }
            _ => Decision::Hold,
        }
    }
}

/// Fires once the gap drops to `distance`. Used to inject known trigger points.
#[derive(Debug, Clone)]
pub struct GapTrigger {
    pub distance: f64,
}

impl AebTrigger for GapTrigger {
    fn name(&self) -> &str {
        "gap"
    }

    fn decide(&mut self, obs: &Observation) -> Decision {
        if obs.gap <= self.distance {
            Decision::Fire
        } else {
            Decision::Hold
        }
    }
}

/// Fires at the first query at or after time `at`.
#[derive(Debug, Clone)]
pub struct TimeTrigger {
    pub at: f64,
}

impl AebTrigger for TimeTrigger {
    fn name(&self) -> &str {
        "time"
    }

    fn decide(&mut self, obs: &Observation) -> Decision {
        if obs.t >= self.at {
            Decision::Fire
        } else {
            Decision::Hold
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct NeverTrigger;

impl AebTrigger for NeverTrigger {
    fn name(&self) -> &str {
        "never"
    }

    fn decide(&mut self, _obs: &Observation) -> Decision {
        Decision::Hold
    }
}

/// Serializable trigger selection: registry name plus numeric parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriggerSpec {
    pub name: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

impl TriggerSpec {
    pub fn new(name: impl Into<String>) -> Self {
        Self { name: name.into(), params: BTreeMap::new() }
    }

    pub fn with(mut self, key: impl Into<String>, value: f64) -> Self {
        self.params.insert(key.into(), value);
        self
    }

    pub fn ttc(threshold: f64) -> Self {
        Self::new("ttc").with("threshold", threshold)
    }
}

impl Default for TriggerSpec {
    fn default() -> Self {
        Self::ttc(DEFAULT_TTC_THRESHOLD)
    }
}

pub const DEFAULT_TTC_THRESHOLD: f64 = 1.3;

#[derive(Debug, Clone, Copy)]
pub struct ParamSpec {
    pub name: &'static str,
    /// `None` marks a required parameter.
    pub default: Option<f64>,
}

/// Parameter values after defaults have been applied.
#[derive(Debug, Clone)]
pub struct ParamValues {
    values: BTreeMap<&'static str, f64>,
}

impl ParamValues {
    pub fn get(&self, name: &str) -> f64 {
        self.values[name]
    }
}

pub trait TriggerFactory: Send + Sync {
    fn name(&self) -> &'static str;
    fn summary(&self) -> &'static str;
    fn params(&self) -> &'static [ParamSpec];
    fn build(&self, params: &ParamValues) -> Result<Box<dyn AebTrigger>, TriggerError>;
}

struct FnFactory {
    name: &'static str,
    summary: &'static str,
    params: &'static [ParamSpec],
    build: fn(&ParamValues) -> Result<Box<dyn AebTrigger>, TriggerError>,
}

impl TriggerFactory for FnFactory {
    fn name(&self) -> &'static str {
        self.name
    }
    fn summary(&self) -> &'static str {
        self.summary
    }
    fn params(&self) -> &'static [ParamSpec] {
        self.params
    }
    fn build(&self, params: &ParamValues) -> Result<Box<dyn AebTrigger>, TriggerError> {
        (self.build)(params)
    }
}

pub struct TriggerRegistry {
    factories: BTreeMap<&'static str, Box<dyn TriggerFactory>>,
}

impl fmt::Debug for TriggerRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.factories.keys()).finish()
    }
}

impl Default for TriggerRegistry {
    fn default() -> Self {
        Self::with_builtins()
    }
}

impl TriggerRegistry {
    pub fn empty() -> Self {
        Self { factories: BTreeMap::new() }
    }

    pub fn with_builtins() -> Self {
        let mut r = Self::empty();
        let builtins: Vec<FnFactory> = vec![
            FnFactory {
                name: "ttc",
                summary: "constant-acceleration time-to-collision threshold (reference)",
                params: &[ParamSpec { name: "threshold", default: Some(DEFAULT_TTC_THRESHOLD) }],
                build: |p| Ok(Box::new(reference_trigger(p.get("threshold"))?)),
            },
            FnFactory {
                name: "ttc-lateral",
                summary: "ttc with threshold scaled by 1 + sensitivity·|y|/0.1 m",
                params: &[
                    ParamSpec { name: "threshold", default: Some(DEFAULT_TTC_THRESHOLD) },
                    ParamSpec { name: "sensitivity", default: Some(-0.05) },
                ],
                build: |p| {
                    let sensitivity = p.get("sensitivity");
                    if !(sensitivity > -1.0) {
                        return Err(TriggerError::InvalidParam {
                            trigger: "ttc-lateral".into(),
                            message: "sensitivity must be greater than -1".into(),
                        });
                    }
                    Ok(Box::new(LateralTtcTrigger { inner: reference_trigger(p.get("threshold"))?, sensitivity }))
                },
            },
            FnFactory {
                name: "gap",
                summary: "fires when the gap drops to `distance` m",
                params: &[ParamSpec { name: "distance", default: None }],
                build: |p| Ok(Box::new(GapTrigger { distance: p.get("distance") })),
            },
            FnFactory {
                name: "time",
                summary: "fires at simulation time `at` s",
                params: &[ParamSpec { name: "at", default: None }],
                build: |p| Ok(Box::new(TimeTrigger { at: p.get("at") })),
            },
            FnFactory { name: "never", summary: "never fires", params: &[], build: |_| Ok(Box::new(NeverTrigger)) },
        ];
        for f in builtins {
            r.register(Box::new(f)).expect("builtin names are unique");
        }
        r
    }

    pub fn register(&mut self, factory: Box<dyn TriggerFactory>) -> Result<(), TriggerError> {
        let name = factory.name();
        if self.factories.contains_key(name) {
            return Err(TriggerError::Duplicate(name.into()));
        }
        self.factories.insert(name, factory);
        Ok(())
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.factories.keys().copied()
    }

    pub fn describe(&self) -> Vec<(&'static str, &'static str, &'static [ParamSpec])> {
        self.factories.values().map(|f| (f.name(), f.summary(), f.params())).collect()
    }

    /// Instantiates the trigger named by `spec`.
    pub fn build(&self, spec: &TriggerSpec) -> Result<Box<dyn AebTrigger>, TriggerError> {
        let factory = self.factories.get(spec.name.as_str()).ok_or_else(|| TriggerError::Unknown {
            name: spec.name.clone(),
            available: self.names().map(String::from).collect(),
        })?;
        let declared = factory.params();
        if let Some(extra) = spec.params.keys().find(|k| !declared.iter().any(|p| p.name == k.as_str())) {
            return Err(TriggerError::UnknownParam { trigger: spec.name.clone(), param: extra.clone() });
        }
        let mut values = BTreeMap::new();
        for p in declared {
            let v = spec
                .params
                .get(p.name)
                .copied()
                .or(p.default)
                .ok_or_else(|| TriggerError::MissingParam { trigger: spec.name.clone(), param: p.name.into() })?;
            values.insert(p.name, v);
        }
        factory.build(&ParamValues { values })
    }
}
