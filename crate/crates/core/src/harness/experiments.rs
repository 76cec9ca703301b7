use std::path::Path;

use serde::Serialize;

use super::{HarnessConfig, HarnessError};
use crate::evaluation::{build_table, Experiment, ResultTable, RunLabel, RunResult, ScoringRegistry, Variant};
use crate::protocol::{check_validity, Nominal, ValidityReport};
use crate::sim::{self, RunEnd, SimConfig, TargetProgram, Trace, TraceMeta, TriggerInfo, TriggerRegistry, TriggerSpec};
use crate::units::{kmh_to_ms, ms_to_kmh};
use crate::variation::{LateralProfile, OscillationSide, PerturbationProfile};

/// Minimum lead time for reaching `target_dv` at `a_modify`, plus `margin`.
pub fn find_t_initiate(target_dv: f64, a_modify: f64, margin: f64) -> Result<f64, HarnessError> {
    if !(a_modify > 0.0) {
        return Err(HarnessError::Config(format!("a_modify must be positive, got {a_modify}")));
    }
    Ok(target_dv / a_modify + margin)
}

/// One simulated run ready for evaluation.
#[derive(Debug, Clone)]
pub struct CaseSpec {
    pub label: RunLabel,
    pub scenario: String,
    pub initial_gap: f64,
    pub profile: PerturbationProfile,
    pub target: TargetProgram,
    /// Trigger override; the config's trigger otherwise.
    pub trigger: Option<TriggerSpec>,
}

#[derive(Debug, Clone)]
pub struct CaseRun {
    pub result: RunResult,
    pub trace: Trace,
    pub validity: ValidityReport,
    pub trigger: Option<TriggerInfo>,
    pub end: RunEnd,
    pub test_start: Option<f64>,
}

#[derive(Serialize)]
struct ValidityLine<'a> {
    experiment: String,
    variant: String,
    test_case: f64,
    #[serde(flatten)]
    report: &'a ValidityReport,
}

impl CaseRun {
    /// File stem for this run's trace.
    pub fn stem(&self) -> String {
        let l = &self.result.label;
        let variant: String = l
            .variant
            .to_string()
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() || c == '.' { c } else { '_' })
            .collect();
        format!("{}-{}-{:.1}", l.experiment, variant, l.test_case_kmh)
    }

    /// JSON-lines record of the validity report.
    pub fn validity_line(&self) -> String {
        let l = &self.result.label;
        serde_json::to_string(&ValidityLine {
            experiment: l.experiment.to_string(),
            variant: l.variant.to_string(),
            test_case: l.test_case_kmh,
            report: &self.validity,
        })
        .expect("report serializes")
    }
}

/// Lateral profile of a canonical variant; oscillations cross the ideal line
/// heading to their side at the test start `anchor`.
pub fn variant_lateral(cfg: &HarnessConfig, variant: &Variant, anchor: f64) -> Result<LateralProfile, HarnessError> {
    let side = match variant {
        Variant::Ideal => return Ok(LateralProfile::Ideal),
        Variant::Left => OscillationSide::Left,
        Variant::Right => OscillationSide::Right,
        Variant::Path(p) => return Err(HarnessError::Config(format!("`{p}` is not a canonical variant"))),
    };
    Ok(LateralProfile::oscillating(side, cfg.oscillation.amplitude, cfg.oscillation.period, anchor)?)
}

/// Test start of an unperturbed approach with `speed_program`.
pub fn predicted_test_start(
    cfg: &HarnessConfig,
    initial_gap: f64,
    profile: &PerturbationProfile,
    target: TargetProgram,
) -> Result<f64, HarnessError> {
    let ideal = PerturbationProfile { lateral: LateralProfile::Ideal, ..profile.clone() };
    let sc = cfg.sim_config(nominal_speed(profile), initial_gap, ideal, target);
    sim::predict_test_start(&sc)?.ok_or(HarnessError::NoTestStart)
}

fn nominal_speed(profile: &PerturbationProfile) -> f64 {
    profile.max_target().unwrap_or(0.0)
}

fn config_hash(cfg: &HarnessConfig, spec: &CaseSpec) -> String {
    use sha2::{Digest, Sha256};
    let mut h = Sha256::new();
    h.update(cfg.to_toml().as_bytes());
    h.update(
        format!("{:?}|{:?}|{}|{:?}|{:?}", spec.label, spec.profile, spec.initial_gap, spec.target, spec.trigger)
            .as_bytes(),
    );
    hex::encode(h.finalize())
}

/// Simulates and evaluates one case.
///
/// With a constant-speed target the residual speed follows from the trigger
/// conditions through the analytic brake model; with a braking target, and
/// when the trigger never fires, the simulated contact speed is used.
pub fn execute_case(cfg: &HarnessConfig, triggers: &TriggerRegistry, spec: &CaseSpec) -> Result<CaseRun, HarnessError> {
    let test_speed = kmh_to_ms(spec.label.test_case_kmh);
    let sc: SimConfig = cfg.sim_config(test_speed, spec.initial_gap, spec.profile.clone(), spec.target);
    let mut trigger = triggers.build(spec.trigger.as_ref().unwrap_or(&cfg.trigger))?;
    let outcome = sim::run(&sc, trigger.as_mut())?;
    let mut trace = outcome.trace;
    trace.meta = TraceMeta {
        scenario: spec.scenario.clone(),
        provenance: spec.label.to_string(),
        config_hash: config_hash(cfg, spec),
    };

    let nominal = Nominal {
        test_speed_kmh: spec.label.test_case_kmh,
        target_speed_kmh: (spec.target.initial_speed > 0.0).then(|| ms_to_kmh(spec.target.initial_speed)),
        target_band_until: spec.target.decel.map(|d| d.onset),
    };
    let validity = check_validity(&trace, &nominal, &cfg.tolerance, outcome.trigger.map(|t| t.t_aeb))?;

    let result = match outcome.trigger {
        Some(info) if spec.target.decel.is_none() => RunResult::analytic(
            spec.label.clone(),
            info.t_aeb,
            info.v_aeb,
            info.d_x,
            info.target_v,
            &cfg.brake,
            validity.valid,
        )?,
        _ => {
            let collided = matches!(outcome.end, RunEnd::Collision { .. });
            let v_res = match outcome.end {
                RunEnd::Collision { v_vut, .. } => v_vut,
                RunEnd::Standstill { .. } => 0.0,
            };
            RunResult {
                label: spec.label.clone(),
                v_aeb_kmh: outcome.trigger.map(|t| ms_to_kmh(t.v_aeb)),
                t_aeb: outcome.trigger.map(|t| t.t_aeb),
                d_x: outcome.trigger.map(|t| t.d_x),
                v_res_kmh: ms_to_kmh(v_res),
                collided,
                valid: validity.valid,
            }
        }
    };
    Ok(CaseRun { result, trace, validity, trigger: outcome.trigger, end: outcome.end, test_start: outcome.test_start })
}

pub const CANONICAL_VARIANTS: [Variant; 3] = [Variant::Left, Variant::Ideal, Variant::Right];

/// Runs of one or more experiments plus what is needed to render them.
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub runs: Vec<CaseRun>,
    /// Profile description per run, one line each.
    pub profiles: Vec<String>,
}

impl ExperimentOutput {
    pub fn results(&self) -> Vec<RunResult> {
        self.runs.iter().map(|r| r.result.clone()).collect()
    }

    pub fn table(&self, cfg: &HarnessConfig) -> Result<ResultTable, HarnessError> {
        let policy = ScoringRegistry::default().get(&cfg.scoring)?;
        Ok(build_table(&self.results(), policy.as_ref())?)
    }

    /// Trigger time of `variant` at `test_case_kmh` for `experiment`.
    pub fn t_aeb(&self, experiment: &Experiment, variant: &Variant, test_case_kmh: f64) -> Option<f64> {
        self.runs
            .iter()
            .find(|r| {
                let l = &r.result.label;
                &l.experiment == experiment && &l.variant == variant && (l.test_case_kmh - test_case_kmh).abs() < 1e-9
            })
            .and_then(|r| r.result.t_aeb)
    }

    pub fn extend(&mut self, other: ExperimentOutput) {
        self.runs.extend(other.runs);
        self.profiles.extend(other.profiles);
    }

    /// In-memory rendering of every output file, relative path → contents.
    pub fn files(&self, cfg: &HarnessConfig) -> Result<Vec<(String, String)>, HarnessError> {
        let table = self.table(cfg)?;
        let mut files = vec![
            ("results.csv".to_string(), table.to_csv()),
            ("results.txt".to_string(), table.to_text()),
            ("config.toml".to_string(), cfg.to_toml()),
            ("profiles.txt".to_string(), self.profiles.iter().map(|p| format!("{p}\n")).collect()),
            ("validity.jsonl".to_string(), self.runs.iter().map(|r| r.validity_line() + "\n").collect()),
        ];
        for run in &self.runs {
            files.push((format!("traces/{}.csv", run.stem()), run.trace.to_csv_string()));
        }
        Ok(files)
    }

    pub fn write_to(&self, dir: &Path, cfg: &HarnessConfig) -> Result<(), HarnessError> {
        write_files(dir, &self.files(cfg)?)
    }
}

pub(crate) fn write_files(dir: &Path, files: &[(String, String)]) -> Result<(), HarnessError> {
    for (rel, contents) in files {
        let path = dir.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| HarnessError::io(parent, e))?;
        }
        std::fs::write(&path, contents).map_err(|e| HarnessError::io(&path, e))?;
    }
    Ok(())
}

fn profile_line(label: &RunLabel, profile: &PerturbationProfile) -> String {
    format!("{label}: {}", serde_json::to_string(profile).expect("profile serializes"))
}

/// Constant-speed runs: each canonical variant at each configured speed.
pub fn run_experiment_1(
    cfg: &HarnessConfig,
    triggers: &TriggerRegistry,
    scenario: &str,
    initial_gap: f64,
) -> Result<ExperimentOutput, HarnessError> {
    let mut out = ExperimentOutput { runs: Vec::new(), profiles: Vec::new() };
    for variant in &CANONICAL_VARIANTS {
        for &kmh in &cfg.experiments.test_speeds_kmh {
            let v = kmh_to_ms(kmh);
            let base = PerturbationProfile::constant_speed(v, cfg.sim.a_accel, LateralProfile::Ideal);
            let anchor = predicted_test_start(cfg, initial_gap, &base, TargetProgram::stationary())?;
            let profile = PerturbationProfile { lateral: variant_lateral(cfg, variant, anchor)?, ..base };
            let label = RunLabel { experiment: Experiment::Exp1, variant: variant.clone(), test_case_kmh: kmh };
            out.profiles.push(profile_line(&label, &profile));
            let spec = CaseSpec {
                label,
                scenario: scenario.into(),
                initial_gap,
                profile,
                target: TargetProgram::stationary(),
                trigger: None,
            };
            out.runs.push(execute_case(cfg, triggers, &spec)?);
        }
    }
    Ok(out)
}

/// Late-acceleration runs: reach the base speed, then accelerate at
/// `a_modify` towards each test speed from `T_AEB − T_initiate`, where
/// `T_AEB` is the same variant's constant base-speed trigger time in `exp1`.
pub fn run_experiment_2(
    cfg: &HarnessConfig,
    triggers: &TriggerRegistry,
    scenario: &str,
    initial_gap: f64,
    exp1: &ExperimentOutput,
) -> Result<ExperimentOutput, HarnessError> {
    let e = &cfg.experiments;
    let base_kmh = e.base_speed_kmh;
    let base_v = kmh_to_ms(base_kmh);
    let mut out = ExperimentOutput { runs: Vec::new(), profiles: Vec::new() };
    for variant in &CANONICAL_VARIANTS {
        let t_aeb = exp1
            .t_aeb(&Experiment::Exp1, variant, base_kmh)
            .ok_or_else(|| HarnessError::MissingReference { variant: variant.to_string(), speed_kmh: base_kmh })?;
        for &kmh in &e.test_speeds_kmh {
            let v = kmh_to_ms(kmh);
            let base = PerturbationProfile::constant_speed(base_v, cfg.sim.a_accel, LateralProfile::Ideal);
            let anchor = predicted_test_start(cfg, initial_gap, &base, TargetProgram::stationary())?;
            let lateral = variant_lateral(cfg, variant, anchor)?;
            let profile = if (kmh - base_kmh).abs() < 1e-9 {
                PerturbationProfile { lateral, ..base }
            } else {
                let t_min = find_t_initiate((v - base_v).abs(), e.a_modify, 0.0)?;
                let t_initiate = match e.t_initiate {
                    Some(t) => t,
                    None => find_t_initiate((v - base_v).abs(), e.a_modify, e.margin)?,
                };
                if t_initiate < t_min - 1e-9 {
                    return Err(HarnessError::InfeasibleTInitiate { t_initiate, minimum: t_min, target_kmh: kmh });
                }
                PerturbationProfile::late_acceleration(
                    base_v,
                    cfg.sim.a_accel,
                    v,
                    e.a_modify,
                    t_aeb - t_initiate,
                    lateral,
                )?
            };
            let label = RunLabel { experiment: Experiment::Exp2, variant: variant.clone(), test_case_kmh: kmh };
            out.profiles.push(profile_line(&label, &profile));
            let spec = CaseSpec {
                label,
                scenario: scenario.into(),
                initial_gap,
                profile,
                target: TargetProgram::stationary(),
                trigger: None,
            };
            out.runs.push(execute_case(cfg, triggers, &spec)?);
        }
    }
    Ok(out)
}
