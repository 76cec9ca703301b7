//! Fixed-step longitudinal simulation of the VUT approaching a target, with
//! a driver robot executing a speed program, an imposed lateral profile, a
//! pluggable trigger and delayed constant-deceleration braking.
//!
//! Integration per step (length `dt`):
//!
//! ```text
//! v' = clamp(v + a·dt)     towards the commanded target, never below 0
//! x' = x + (v + v')/2 · dt
//! y' = lateral(t')
//! ```
//!
//! Position uses the velocity average, which is exact for piecewise-constant
//! acceleration. Collisions are located inside the step by solving the
//! relative-motion quadratic so impact speeds are not quantized by `dt`.

mod trace;
mod trigger;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::units::kmh_to_ms;
use crate::variation::{LateralProfile, PerturbationProfile};

pub use trace::{Trace, TraceError, TraceMeta, TraceSample, VehicleState, TRACE_CSV_HEADER};
pub use trigger::{
    accel_ttc, reference_trigger, AebTrigger, Decision, GapTrigger, LateralTtcTrigger, NeverTrigger, Observation,
    ParamSpec, ParamValues, TimeTrigger, TriggerError, TriggerFactory, TriggerRegistry, TriggerSpec, TtcTrigger,
    DEFAULT_TTC_THRESHOLD,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("run did not terminate within the {horizon} s horizon")]
    Timeout { horizon: f64 },
}

/// What the VUT does between the trigger and brake onset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DelayBehavior {
    /// Keep executing the speed program (including any late acceleration).
    ContinueProgram,
    /// Hold the speed reached at the trigger instant, as the analytic brake
    /// model does.
    #[default]
    FreezeSpeed,
}

/// When the trigger starts being queried.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arming {
    Immediately,
    /// From the test start (first sample with TTC ≤ `test_start_ttc`).
    #[default]
    AtTestStart,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetDecel {
    /// s
    pub onset: f64,
    /// m/s², positive
    pub decel: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TargetProgram {
    /// m/s
    pub initial_speed: f64,
    pub decel: Option<TargetDecel>,
}

impl TargetProgram {
    pub fn stationary() -> Self {
        Self::default()
    }

    pub fn constant(speed: f64) -> Self {
        Self { initial_speed: speed, decel: None }
    }

    fn accel(&self, t: f64, v: f64) -> f64 {
        match self.decel {
            Some(d) if t >= d.onset && v > 0.0 => -d.decel,
            _ => 0.0,
        }
    }

    fn is_constant(&self) -> bool {
        self.decel.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Step size, s.
    pub dt: f64,
    /// Target position minus VUT position at t = 0, m. Vehicle extents are folded in.
    pub initial_gap: f64,
    /// Run-up acceleration of the driver robot, m/s².
    pub a_accel: f64,
    pub brake_decel: f64,
    pub brake_delay: f64,
    /// Nominal test speed, m/s.
    pub test_speed: f64,
    /// VUT speed at t = 0, m/s.
    pub initial_speed: f64,
    pub profile: PerturbationProfile,
    pub target: TargetProgram,
    pub delay_behavior: DelayBehavior,
    pub arming: Arming,
    /// TTC that defines the test start, s.
    pub test_start_ttc: f64,
    /// Simulated-time limit, s.
    pub horizon: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        let test_speed = kmh_to_ms(25.0);
        Self {
            dt: 0.01,
            initial_gap: 67.5,
            a_accel: 2.0,
            brake_decel: 3.5,
            brake_delay: 0.3,
            test_speed,
            initial_speed: 0.0,
            profile: PerturbationProfile::constant_speed(test_speed, 2.0, LateralProfile::Ideal),
            target: TargetProgram::stationary(),
            delay_behavior: DelayBehavior::FreezeSpeed,
            arming: Arming::AtTestStart,
            test_start_ttc: 4.0,
            horizon: 60.0,
        }
    }
}

impl SimConfig {
    /// Config for a constant-speed approach at `test_speed` m/s.
    pub fn for_speed(test_speed: f64) -> Self {
        let base = Self::default();
        Self {
            test_speed,
            profile: PerturbationProfile::constant_speed(test_speed, base.a_accel, LateralProfile::Ideal),
            ..base
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidConfig(m));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.brake_decel > 0.0) {
            return bad(format!("brake_decel must be positive, got {}", self.brake_decel));
        }
        if !(self.brake_delay >= 0.0) {
            return bad(format!("brake_delay must be non-negative, got {}", self.brake_delay));
        }
        if !(self.initial_gap > 0.0) {
            return bad(format!("initial_gap must be positive, got {}", self.initial_gap));
        }
        if !(self.initial_speed >= 0.0) || !(self.target.initial_speed >= 0.0) {
            return bad("initial speeds must be non-negative".into());
        }
        if !(self.horizon > 0.0) {
            return bad(format!("horizon must be positive, got {}", self.horizon));
        }
        if self.profile.speed_program.iter().any(|p| !(p.accel >= 0.0)) {
            return bad("speed program accelerations must be non-negative magnitudes".into());
        }
        Ok(())
    }

    fn delay_steps(&self) -> u64 {
        (self.brake_delay / self.dt).round() as u64
    }
}

/// Conditions at the trigger instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TriggerInfo {
    pub t_aeb: f64,
    /// VUT speed, m/s.
    pub v_aeb: f64,
    /// Gap, m.
    pub d_x: f64,
    /// Target speed, m/s.
    pub target_v: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RunEnd {
    /// Contact, located inside the final step.
    Collision { t: f64, v_vut: f64, v_target: f64 },
    /// The VUT came to rest after the trigger.
    Standstill { t: f64, gap: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub trace: Trace,
    pub trigger: Option<TriggerInfo>,
    pub end: RunEnd,
    /// Time of the test start (TTC first ≤ `test_start_ttc`), if reached.
    pub test_start: Option<f64>,
}

impl RunOutcome {
    pub fn collided(&self) -> bool {
        matches!(self.end, RunEnd::Collision { .. })
    }

    /// VUT speed at contact, 0 without contact.
    pub fn impact_speed(&self) -> f64 {
        match self.end {
            RunEnd::Collision { v_vut, .. } => v_vut,
            RunEnd::Standstill { .. } => 0.0,
        }
    }

    pub fn relative_impact_speed(&self) -> f64 {
        match self.end {
            RunEnd::Collision { v_vut, v_target, .. } => v_vut - v_target,
            RunEnd::Standstill { .. } => 0.0,
        }
    }
}

/// Joint state of VUT and target at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StatePair {
    pub vut: VehicleState,
    pub target: VehicleState,
}

impl StatePair {
    pub fn initial(config: &SimConfig) -> Self {
        let y = config.profile.lateral_offset(0.0);
        Self {
            vut: VehicleState { t: 0.0, x: 0.0, y, v: config.initial_speed, a: 0.0, yaw_rate: 0.0 },
            target: VehicleState {
                t: 0.0,
                x: config.initial_gap,
                v: config.target.initial_speed,
                ..Default::default()
            },
        }
    }

    pub fn gap(&self) -> f64 {
        self.target.x - self.vut.x
    }

    pub fn closing_speed(&self) -> f64 {
        self.vut.v - self.target.v
    }

    pub fn ttc(&self) -> Option<f64> {
        let c = self.closing_speed();
        (c > 0.0).then(|| self.gap() / c)
    }
}

/// Longitudinal command for the VUT over one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VutCommand {
    /// Follow the speed program.
    Program,
    /// Zero acceleration.
    Hold,
    /// Constant deceleration at the configured brake rate.
    Brake,
}

fn heading(y_rate: f64, v: f64) -> f64 {
    y_rate.atan2(v)
}

/// Advances both vehicles by one step from `state` (at time `state.vut.t`),
/// ending at `t_next`.
pub fn step(state: &StatePair, config: &SimConfig, command: VutCommand, t_next: f64) -> StatePair {
    let t = state.vut.t;
    let dt = t_next - t;
    let v = state.vut.v;
    let v_next = match command {
        VutCommand::Brake => (v - config.brake_decel * dt).max(0.0),
        VutCommand::Hold => v,
        VutCommand::Program => match config.profile.active_phase(t) {
            Some(phase) => match phase.target {
                None => v,
                Some(target) if v < target => (v + phase.accel * dt).min(target),
                Some(target) if v > target => (v - phase.accel * dt).max(target).max(0.0),
                Some(_) => v,
            },
            None => v,
        },
    };
    let x_next = state.vut.x + 0.5 * (v + v_next) * dt;
    let y_next = config.profile.lateral_offset(t_next);
    let psi = heading(config.profile.lateral.rate(t), v);
    let psi_next = heading(config.profile.lateral.rate(t_next), v_next);
    let vut = VehicleState {
        t: t_next,
        x: x_next,
        y: y_next,
        v: v_next,
        a: (v_next - v) / dt,
        yaw_rate: (psi_next - psi) / dt,
    };

    let tv = state.target.v;
    let tv_next = (tv + config.target.accel(t, tv) * dt).max(0.0);
    let target = VehicleState {
        t: t_next,
        x: state.target.x + 0.5 * (tv + tv_next) * dt,
        y: 0.0,
        v: tv_next,
        a: (tv_next - tv) / dt,
        yaw_rate: 0.0,
    };
    StatePair { vut, target }
}

/// Fraction of the step, in seconds, at which the gap closes, assuming
/// linear speed change of both vehicles within the step.
fn contact_time(prev: &StatePair, next: &StatePair, dt: f64) -> f64 {
    let g0 = prev.gap();
    if g0 <= 0.0 {
        return 0.0;
    }
    let c0 = prev.closing_speed();
    let rel_accel = (next.closing_speed() - c0) / dt;
    let disc = c0 * c0 + 2.0 * rel_accel * g0;
    let tau = if disc >= 0.0 && c0 + disc.sqrt() > 0.0 { 2.0 * g0 / (c0 + disc.sqrt()) } else { dt };
    tau.clamp(0.0, dt)
}

fn sample_of(pair: &StatePair, fired: bool) -> TraceSample {
    TraceSample { vut: pair.vut, target: pair.target, ttc: pair.ttc(), aeb_fired: fired, steer_rate: None }
}

/// Runs one test until contact, standstill after the trigger, or timeout.
pub fn run(config: &SimConfig, trigger: &mut dyn AebTrigger) -> Result<RunOutcome, SimError> {
    config.validate()?;
    let dt = config.dt;
    let delay_steps = config.delay_steps();
    let max_steps = (config.horizon / dt).ceil() as u64;

    let mut state = StatePair::initial(config);
    let mut samples = Vec::new();
    let mut fired_at: Option<u64> = None;
    let mut info = None;
    let mut test_start = None;
    let mut armed = config.arming == Arming::Immediately;

    let mut k: u64 = 0;
    loop {
        if test_start.is_none() && state.ttc().is_some_and(|ttc| ttc <= config.test_start_ttc) {
            test_start = Some(state.vut.t);
            armed = true;
        }
        if armed && fired_at.is_none() {
            let obs = Observation {
                t: state.vut.t,
                gap: state.gap(),
                closing_speed: state.closing_speed(),
                lateral_offset: state.vut.y,
                own_speed: state.vut.v,
            };
            if trigger.decide(&obs) == Decision::Fire {
                fired_at = Some(k);
                info = Some(TriggerInfo {
                    t_aeb: state.vut.t,
                    v_aeb: state.vut.v,
                    d_x: state.gap(),
                    target_v: state.target.v,
                });
            }
        }
        samples.push(sample_of(&state, fired_at.is_some()));

        if fired_at.is_some() && state.vut.v <= 0.0 {
            return Ok(RunOutcome {
                trace: Trace { samples, meta: TraceMeta::default() },
                trigger: info,
                end: RunEnd::Standstill { t: state.vut.t, gap: state.gap() },
                test_start,
            });
        }
        if k >= max_steps {
            return Err(SimError::Timeout { horizon: config.horizon });
        }

        let command = match fired_at {
            None => VutCommand::Program,
            Some(f) if k - f < delay_steps => match config.delay_behavior {
                DelayBehavior::ContinueProgram => VutCommand::Program,
                DelayBehavior::FreezeSpeed => VutCommand::Hold,
            },
            Some(_) => VutCommand::Brake,
        };
        let t_next = (k + 1) as f64 * dt;
        let next = step(&state, config, command, t_next);

        if next.gap() <= 0.0 {
            let tau = contact_time(&state, &next, dt);
            let frac = tau / dt;
            let v_vut = state.vut.v + (next.vut.v - state.vut.v) * frac;
            let v_target = state.target.v + (next.target.v - state.target.v) * frac;
            samples.push(sample_of(&next, fired_at.is_some()));
            return Ok(RunOutcome {
                trace: Trace { samples, meta: TraceMeta::default() },
                trigger: info,
                end: RunEnd::Collision { t: state.vut.t + tau, v_vut, v_target },
                test_start,
            });
        }
        state = next;
        k += 1;
    }
}

/// Time of the test start for `config`, from a run with braking disabled.
///
/// Lateral motion does not feed back into the longitudinal dynamics and the
/// trigger cannot act before the test start, so this equals the test start
/// of any armed-at-test-start run with the same speed program.
pub fn predict_test_start(config: &SimConfig) -> Result<Option<f64>, SimError> {
    let cfg = SimConfig { arming: Arming::AtTestStart, ..config.clone() };
    cfg.validate()?;
    let max_steps = (cfg.horizon / cfg.dt).ceil() as u64;
    let mut state = StatePair::initial(&cfg);
    for k in 0..=max_steps {
        if state.ttc().is_some_and(|ttc| ttc <= cfg.test_start_ttc) {
            return Ok(Some(state.vut.t));
        }
        let next = step(&state, &cfg, VutCommand::Program, (k + 1) as f64 * cfg.dt);
        if next.gap() <= 0.0 {
            return Ok(None);
        }
        state = next;
    }
    Ok(None)
}

/// Post-trigger phase only: the VUT starts at `v_aeb` with the target `d_x`
/// ahead and the trigger fires at t = 0. Step size, brake parameters and
/// horizon come from `base`.
pub fn simulate_braking(v_aeb: f64, d_x: f64, target: TargetProgram, base: &SimConfig) -> Result<RunOutcome, SimError> {
    let cfg = SimConfig {
        initial_gap: d_x,
        test_speed: v_aeb,
        initial_speed: v_aeb,
        profile: PerturbationProfile::constant_speed(v_aeb, base.a_accel, LateralProfile::Ideal),
        target,
        arming: Arming::Immediately,
        ..base.clone()
    };
    run(&cfg, &mut TimeTrigger { at: 0.0 })
}

/// Whether the closed-form stationary/constant-target brake model applies.
pub fn target_is_constant(config: &SimConfig) -> bool {
    config.target.is_constant()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::variation::{OscillationSide, PhaseStart, SpeedPhase};

    fn accel_only(dt: f64) -> SimConfig {
        SimConfig {
            dt,
            initial_gap: 1.0e6,
            profile: PerturbationProfile {
                lateral: LateralProfile::Ideal,
                speed_program: vec![SpeedPhase { start: PhaseStart::Immediately, accel: 2.0, target: Some(1.0e3) }],
            },
            ..SimConfig::default()
        }
    }

    fn advance(config: &SimConfig, steps: u64) -> StatePair {
        let mut s = StatePair::initial(config);
        for k in 0..steps {
            s = step(&s, config, VutCommand::Program, (k + 1) as f64 * config.dt);
        }
        s
    }

    #[test]
    fn one_second_from_rest() {
        let cfg = accel_only(0.01);
        let s = advance(&cfg, 100);
        assert!((s.vut.v - 2.0).abs() < 1e-9);
        assert!((s.vut.x - 1.005).abs() <= 0.005 + 1e-9, "{}", s.vut.x);
        assert!((s.vut.t - 1.0).abs() < 1e-12);
    }

    #[test]
    fn speed_hold_keeps_speed() {
        let v = kmh_to_ms(25.0);
        let cfg = SimConfig { initial_speed: v, initial_gap: 1.0e6, ..SimConfig::for_speed(v) };
        let s = advance(&cfg, 5000);
        assert_eq!(s.vut.v, v);
    }

    #[test]
    fn run_up_to_25kmh_matches_closed_form() {
        // closed form: t = v/a, s = v²/(2a)
        let v = kmh_to_ms(25.0);
        let (t_ref, s_ref) = (v / 2.0, v * v / 4.0);
        assert!((t_ref - 3.472).abs() < 5e-4 && (s_ref - 12.06).abs() < 5e-3);
        let cfg = SimConfig { dt: 1e-4, initial_gap: 1.0e6, ..SimConfig::for_speed(v) };
        let mut s = StatePair::initial(&cfg);
        let mut k = 0;
        while s.vut.v < v {
            k += 1;
            s = step(&s, &cfg, VutCommand::Program, k as f64 * cfg.dt);
        }
        assert!((s.vut.t - t_ref).abs() <= cfg.dt, "{}", s.vut.t);
        assert!((s.vut.x - s_ref).abs() < 1e-3, "{}", s.vut.x);
    }

    #[test]
    fn never_trigger_hits_stationary_target_at_test_speed() {
        let cfg = SimConfig::default();
        let out = run(&cfg, &mut NeverTrigger).unwrap();
        assert!(out.collided());
        assert!(out.trigger.is_none());
        assert!((out.impact_speed() - cfg.test_speed).abs() < 1e-12);
        assert!(out.trace.samples.last().unwrap().gap() <= 0.0);
    }

    #[test]
    fn reference_trigger_fires_once_at_closed_form_crossing() {
        let cfg = SimConfig::default();
        let mut trig = reference_trigger(1.3).unwrap();
        let out = run(&cfg, &mut trig).unwrap();
        let info = out.trigger.unwrap();
        let v = cfg.test_speed;
        // run-up v/a, then constant speed until gap = 1.3·v
        let t_cross = v / 2.0 + (67.5 - v * v / 4.0 - 1.3 * v) / v;
        assert!(info.d_x > 0.0);
        assert!(info.t_aeb >= t_cross - 1e-9 && info.t_aeb <= t_cross + cfg.dt + 1e-9, "{} vs {t_cross}", info.t_aeb);
        assert!(info.d_x <= 1.3 * v && info.d_x > 1.3 * v - v * cfg.dt);
        let edges = out.trace.samples.windows(2).filter(|w| !w[0].aeb_fired && w[1].aeb_fired).count();
        assert_eq!(edges, 1);
        assert!(out.trace.samples.windows(2).all(|w| !(w[0].aeb_fired && !w[1].aeb_fired)));
    }

    #[test]
    fn injected_fire_at_9_28_m_stops_before_contact() {
        let cfg = SimConfig { dt: 1e-3, ..SimConfig::default() };
        let out = run(&cfg, &mut GapTrigger { distance: 9.28 }).unwrap();
        let info = out.trigger.unwrap();
        assert!((info.v_aeb - kmh_to_ms(25.0)).abs() < 1e-12);
        assert!((info.d_x - 9.28).abs() < cfg.test_speed * cfg.dt);
        assert!(!out.collided());
        assert_eq!(out.impact_speed(), 0.0);
    }

    #[test]
    fn halving_dt_moves_trigger_point_by_at_most_two_steps() {
        for speed in [20.0, 25.0, 25.4, 25.8, 40.0] {
            let v = kmh_to_ms(speed);
            let coarse =
                run(&SimConfig { dt: 0.01, ..SimConfig::for_speed(v) }, &mut reference_trigger(1.3).unwrap()).unwrap();
            let fine =
                run(&SimConfig { dt: 0.005, ..SimConfig::for_speed(v) }, &mut reference_trigger(1.3).unwrap()).unwrap();
            let (a, b) = (coarse.trigger.unwrap(), fine.trigger.unwrap());
            assert!((a.d_x - b.d_x).abs() < v * 0.01, "{speed}: {} vs {}", a.d_x, b.d_x);
            assert!((a.d_x - b.d_x).abs() <= 2.0 * v * 0.01);
            assert!((a.t_aeb - b.t_aeb).abs() <= 2.0 * 0.01);
        }
    }

    #[test]
    fn identical_configs_give_identical_traces() {
        let v = kmh_to_ms(25.0);
        let lateral = LateralProfile::oscillating(OscillationSide::Left, 0.1, 8.0, 7.0).unwrap();
        let cfg =
            SimConfig { profile: PerturbationProfile::constant_speed(v, 2.0, lateral), ..SimConfig::for_speed(v) };
        let a = run(&cfg, &mut reference_trigger(1.3).unwrap()).unwrap();
        let b = run(&cfg, &mut reference_trigger(1.3).unwrap()).unwrap();
        assert_eq!(a.trace.to_csv_string(), b.trace.to_csv_string());
    }

    #[test]
    fn timeout_when_never_closing() {
        let cfg = SimConfig {
            initial_speed: 0.0,
            test_speed: 0.0,
            profile: PerturbationProfile::constant_speed(0.0, 2.0, LateralProfile::Ideal),
            horizon: 5.0,
            ..SimConfig::default()
        };
        assert_eq!(run(&cfg, &mut NeverTrigger), Err(SimError::Timeout { horizon: 5.0 }));
    }

    #[test]
    fn invalid_configs() {
        for cfg in [
            SimConfig { dt: 0.0, ..SimConfig::default() },
            SimConfig { brake_decel: 0.0, ..SimConfig::default() },
            SimConfig { initial_gap: -1.0, ..SimConfig::default() },
        ] {
            assert!(matches!(run(&cfg, &mut NeverTrigger), Err(SimError::InvalidConfig(_))));
        }
    }

    #[test]
    fn freeze_speed_during_delay() {
        let base = kmh_to_ms(25.0);
        let profile =
            PerturbationProfile::late_acceleration(base, 2.0, kmh_to_ms(25.8), 0.1, 8.0, LateralProfile::Ideal)
                .unwrap();
        let mut cfg = SimConfig { profile, ..SimConfig::for_speed(base) };
        let fire_t = 8.5;
        cfg.delay_behavior = DelayBehavior::FreezeSpeed;
        let frozen = run(&cfg, &mut TimeTrigger { at: fire_t }).unwrap();
        cfg.delay_behavior = DelayBehavior::ContinueProgram;
        let cont = run(&cfg, &mut TimeTrigger { at: fire_t }).unwrap();
        let at = |o: &RunOutcome, t: f64| o.trace.samples.iter().find(|s| (s.t() - t).abs() < 1e-9).unwrap().vut.v;
        let v_fire = frozen.trigger.unwrap().v_aeb;
        assert!((at(&frozen, 8.79) - v_fire).abs() < 1e-12);
        assert!(at(&cont, 8.79) > v_fire);
    }

    #[test]
    fn moving_target_and_ttc() {
        let cfg = SimConfig {
            initial_speed: kmh_to_ms(50.0),
            test_speed: kmh_to_ms(50.0),
            profile: PerturbationProfile::constant_speed(kmh_to_ms(50.0), 2.0, LateralProfile::Ideal),
            target: TargetProgram::constant(kmh_to_ms(20.0)),
            ..SimConfig::default()
        };
        let out = run(&cfg, &mut reference_trigger(1.3).unwrap()).unwrap();
        let info = out.trigger.unwrap();
        let closing = kmh_to_ms(30.0);
        assert!((info.d_x - 1.3 * closing).abs() < closing * cfg.dt + 1e-9);
        assert!((info.target_v - kmh_to_ms(20.0)).abs() < 1e-12);
    }
}
