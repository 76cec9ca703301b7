use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::experiments::{execute_case, predicted_test_start, run_experiment_1, run_experiment_2, variant_lateral};
use super::{CaseSpec, ExperimentOutput, HarnessConfig, HarnessError, CANONICAL_VARIANTS};
use crate::dsl::{builtin_registry, generate_scene, parse, resolve, ResolvedScenario, CCRS_25KMH};
use crate::evaluation::{Experiment, RunLabel, Variant};
use crate::sim::{TargetProgram, TriggerRegistry, TriggerSpec};
use crate::units::kmh_to_ms;
use crate::variation::{
    enumerate_paths, path_to_profile, sample_paths, Interaction, LateralProfile, PerturbationProfile, ProfileParams,
    SamplingStrategy, VariationPath, VariationSpec, DEFAULT_ENUMERATION_LIMIT,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum JobExperiment {
    #[serde(rename = "exp1_constant", alias = "exp1")]
    Exp1Constant,
    #[serde(rename = "exp2_speed_variation", alias = "exp2")]
    Exp2SpeedVariation,
    #[default]
    #[serde(rename = "custom")]
    Custom,
}

impl fmt::Display for JobExperiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            JobExperiment::Exp1Constant => "exp1_constant",
            JobExperiment::Exp2SpeedVariation => "exp2_speed_variation",
            JobExperiment::Custom => "custom",
        })
    }
}

/// Job lifecycle; transitions only move forward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobStatus {
    Queued,
    Running,
    Done,
    Failed,
}

impl JobStatus {
    fn rank(self) -> u8 {
        match self {
            JobStatus::Queued => 0,
            JobStatus::Running => 1,
            JobStatus::Done | JobStatus::Failed => 2,
        }
    }

    pub fn is_terminal(self) -> bool {
        self.rank() == 2
    }
}

impl fmt::Display for JobStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            JobStatus::Queued => "queued",
            JobStatus::Running => "running",
            JobStatus::Done => "done",
            JobStatus::Failed => "failed",
        })
    }
}

/// Variation-path runs of a custom job.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariationJob {
    /// Interaction mnemonics (`left:0.05`, `right:0.05`, `lhold`, `shold`, `accel:0.1`).
    #[serde(default = "default_interactions")]
    pub interactions: Vec<String>,
    pub resolution: usize,
    #[serde(default)]
    pub seed: u64,
    /// `exhaustive`, `uniform_random` or `boundary`.
    #[serde(default = "default_strategy")]
    pub strategy: String,
    /// Number of paths for the sampling strategies.
    #[serde(default)]
    pub n: Option<usize>,
}

fn default_interactions() -> Vec<String> {
    VariationSpec::default_interactions().iter().map(ToString::to_string).collect()
}

fn default_strategy() -> String {
    "exhaustive".into()
}

impl VariationJob {
    pub fn paths(&self) -> Result<Vec<VariationPath>, HarnessError> {
        let set = self
            .interactions
            .iter()
            .map(|s| s.parse::<Interaction>().map_err(HarnessError::Job))
            .collect::<Result<Vec<_>, _>>()?;
        let spec = VariationSpec::new(self.resolution, set, self.seed)?;
        let n = self.n.unwrap_or(spec.interaction_set.len());
        let paths = match self.strategy.as_str() {
            "exhaustive" => enumerate_paths(&spec, DEFAULT_ENUMERATION_LIMIT)?,
            "uniform_random" => sample_paths(&spec, SamplingStrategy::UniformRandom, n),
            "boundary" => sample_paths(&spec, SamplingStrategy::Boundary, n),
            other => return Err(HarnessError::Job(format!("unknown sampling strategy `{other}`"))),
        };
        // Identical draws would collide in the result table.
        let mut seen = BTreeSet::new();
        Ok(paths.into_iter().filter(|p| seen.insert(p.to_line())).collect())
    }
}

/// TOML job manifest. A bare `.scn` job is a custom job with defaults.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JobManifest {
    pub experiment: JobExperiment,
    /// Inline scenario source; the built-in 25 km/h CCRs scenario when absent.
    pub scenario: Option<String>,
    /// Scenario file relative to the manifest; inlined on load.
    pub scenario_file: Option<String>,
    /// Custom jobs: test speeds, km/h. Falls back to the scenario's
    /// `Test.Speed`, then the base speed.
    pub speeds_kmh: Option<Vec<f64>>,
    /// Custom jobs: subset of `ideal`, `osc-left`, `osc-right`.
    pub variants: Option<Vec<String>>,
    pub variation: Option<VariationJob>,
    pub trigger: Option<TriggerSpec>,
    pub t_initiate: Option<f64>,
}

impl JobManifest {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Job(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Job {
    /// SHA-256 over the job's content, including an inlined scenario file.
    pub id: String,
    /// Queue file name.
    pub source: String,
    /// Self-contained manifest (scenario inlined).
    pub manifest: JobManifest,
    pub status: JobStatus,
}

fn hash_parts(parts: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    hex::encode(h.finalize())
}

impl Job {
    /// Reads a queue file. The id is returned even when the file cannot be
    /// turned into a job, so failures can be recorded against it.
    pub fn load(path: &Path) -> (String, String, Result<Job, HarnessError>) {
        let source = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        let bytes = match std::fs::read(path) {
            Ok(b) => b,
            Err(e) => {
                let id = hash_parts(&[b"unreadable", source.as_bytes()]);
                return (id, source, Err(HarnessError::io(path, e)));
            }
        };
        let dir = path.parent().unwrap_or(Path::new("."));
        let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
        let (id, job) = Self::from_bytes(&source, ext, &bytes, dir);
        (id, source, job)
    }

    fn from_bytes(source: &str, ext: &str, bytes: &[u8], dir: &Path) -> (String, Result<Job, HarnessError>) {
        let text = std::str::from_utf8(bytes).map_err(|e| HarnessError::Job(format!("{source} is not UTF-8: {e}")));
        match ext {
            "scn" => {
                let id = hash_parts(&[b"scn", bytes]);
                let job = text.map(|t| Job {
                    id: id.clone(),
                    source: source.into(),
                    manifest: JobManifest { scenario: Some(t.into()), ..JobManifest::default() },
                    status: JobStatus::Queued,
                });
                (id, job)
            }
            "toml" => {
                let manifest = text.and_then(JobManifest::from_toml);
                let scenario_bytes = match &manifest {
                    Ok(JobManifest { scenario_file: Some(f), .. }) => {
                        let p = dir.join(f);
                        Some(std::fs::read(&p).map_err(|e| HarnessError::io(&p, e)))
                    }
                    _ => None,
                };
                let id = match &scenario_bytes {
                    Some(Ok(s)) => hash_parts(&[b"toml", bytes, s]),
                    _ => hash_parts(&[b"toml", bytes]),
                };
                let job = manifest.and_then(|mut m| {
                    if let Some(sb) = scenario_bytes {
                        let sb = sb?;
                        if m.scenario.is_some() {
                            return Err(HarnessError::Job(
                                "give either `scenario` or `scenario_file`, not both".into(),
                            ));
                        }
                        let src =
                            String::from_utf8(sb).map_err(|e| HarnessError::Job(format!("scenario file: {e}")))?;
                        m.scenario = Some(src);
                        m.scenario_file = None;
                    }
                    Ok(Job { id: id.clone(), source: source.into(), manifest: m, status: JobStatus::Queued })
                });
                (id, job)
            }
            other => {
                let id = hash_parts(&[other.as_bytes(), bytes]);
                (id, Err(HarnessError::Job(format!("unsupported job file type `.{other}`"))))
            }
        }
    }

    pub fn advance(&mut self, to: JobStatus) -> Result<(), HarnessError> {
        if to.rank() <= self.status.rank() {
            return Err(HarnessError::StatusRegression { from: self.status, to });
        }
        self.status = to;
        Ok(())
    }

    /// Config the job runs with: `base` plus the manifest's overrides.
    pub fn effective_config(&self, base: &HarnessConfig) -> HarnessConfig {
        let mut cfg = base.clone();
        cfg.store = None;
        if let Some(t) = &self.manifest.trigger {
            cfg.trigger = t.clone();
        }
        if let Some(t) = self.manifest.t_initiate {
            cfg.experiments.t_initiate = Some(t);
        }
        cfg
    }
}

/// Everything a finished job writes to the store.
#[derive(Debug, Clone)]
pub struct JobOutput {
    pub scene_xml: String,
    pub output: ExperimentOutput,
    pub config: HarnessConfig,
    pub manifest: JobManifest,
}

impl JobOutput {
    pub fn files(&self) -> Result<Vec<(String, String)>, HarnessError> {
        let mut files = self.output.files(&self.config)?;
        files.push(("scenario.xml".into(), self.scene_xml.clone()));
        files.push(("job.toml".into(), self.manifest.to_toml()));
        Ok(files)
    }
}

fn parse_variant(name: &str) -> Result<Variant, HarnessError> {
    match name {
        "ideal" => Ok(Variant::Ideal),
        "osc-left" | "left" => Ok(Variant::Left),
        "osc-right" | "right" => Ok(Variant::Right),
        other => Err(HarnessError::Job(format!("unknown variant `{other}` (ideal, osc-left, osc-right)"))),
    }
}

/// Resolves a scenario source against the built-in scenarios.
pub(crate) fn resolve_source(source: &str) -> Result<ResolvedScenario, HarnessError> {
    let ast = parse(source)?;
    let resolved = resolve(&ast, &builtin_registry())?;
    resolved.vut()?;
    Ok(resolved)
}

/// Runs a job against `base` (manifest overrides applied).
pub fn execute_job(job: &Job, base: &HarnessConfig, triggers: &TriggerRegistry) -> Result<JobOutput, HarnessError> {
    let cfg = job.effective_config(base);
    let m = &job.manifest;
    let resolved = resolve_source(m.scenario.as_deref().unwrap_or(CCRS_25KMH))?;
    let scene_xml = generate_scene(&resolved);
    let gap = resolved.initial_gap().unwrap_or(cfg.sim.initial_gap);
    if !(gap > 0.0) {
        return Err(HarnessError::Job(format!("target must be ahead of the VUT, initial gap is {gap} m")));
    }
    let name = resolved.name.clone();

    let output = match m.experiment {
        JobExperiment::Exp1Constant => run_experiment_1(&cfg, triggers, &name, gap)?,
        JobExperiment::Exp2SpeedVariation => {
            let mut all = run_experiment_1(&cfg, triggers, &name, gap)?;
            let exp2 = run_experiment_2(&cfg, triggers, &name, gap, &all)?;
            all.extend(exp2);
            all
        }
        JobExperiment::Custom => run_custom(&cfg, triggers, m, &resolved, gap)?,
    };
    let manifest = JobManifest { scenario: Some(m.scenario.clone().unwrap_or_else(|| CCRS_25KMH.into())), ..m.clone() };
    Ok(JobOutput { scene_xml, output, config: cfg, manifest })
}

fn run_custom(
    cfg: &HarnessConfig,
    triggers: &TriggerRegistry,
    m: &JobManifest,
    scenario: &ResolvedScenario,
    gap: f64,
) -> Result<ExperimentOutput, HarnessError> {
    let speeds = match (&m.speeds_kmh, scenario.misc_number("Test.Speed")) {
        (Some(s), _) => s.clone(),
        (None, Some(s)) => vec![s],
        (None, None) => vec![cfg.experiments.base_speed_kmh],
    };
    if let Some(bad) = speeds.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
        return Err(HarnessError::Job(format!("test speed must be positive, got {bad} km/h")));
    }
    let variants = match &m.variants {
        Some(v) => v.iter().map(|s| parse_variant(s)).collect::<Result<Vec<_>, _>>()?,
        None => CANONICAL_VARIANTS.to_vec(),
    };
    let target = match scenario.misc_number("Test.TargetSpeed") {
        Some(kmh) if kmh > 0.0 => TargetProgram::constant(kmh_to_ms(kmh)),
        _ => TargetProgram::stationary(),
    };
    let paths = m.variation.as_ref().map(VariationJob::paths).transpose()?.unwrap_or_default();
    let experiment = Experiment::Custom(scenario.name.clone());

    let mut out = ExperimentOutput { runs: Vec::new(), profiles: Vec::new() };
    for &kmh in &speeds {
        let v = kmh_to_ms(kmh);
        let base = PerturbationProfile::constant_speed(v, cfg.sim.a_accel, LateralProfile::Ideal);
        let t0 = predicted_test_start(cfg, gap, &base, target)?;
        let case = |variant: Variant, profile: PerturbationProfile| CaseSpec {
            label: RunLabel { experiment: experiment.clone(), variant, test_case_kmh: kmh },
            scenario: scenario.name.clone(),
            initial_gap: gap,
            profile,
            target,
            trigger: None,
        };
        let mut ideal_t_aeb = None;
        for variant in &variants {
            let profile = PerturbationProfile { lateral: variant_lateral(cfg, variant, t0)?, ..base.clone() };
            let spec = case(variant.clone(), profile.clone());
            out.profiles.push(format!("{}: {}", spec.label, serde_json::to_string(&profile).expect("serializes")));
            let run = execute_case(cfg, triggers, &spec)?;
            if *variant == Variant::Ideal {
                ideal_t_aeb = run.result.t_aeb;
            }
            out.runs.push(run);
        }
        if paths.is_empty() {
            continue;
        }
        let resolution = paths[0].len().max(1);
        let t_aeb = match ideal_t_aeb {
            Some(t) => t,
            None => execute_case(cfg, triggers, &case(Variant::Ideal, base.clone()))?
                .result
                .t_aeb
                .ok_or_else(|| HarnessError::Job(format!("trigger never fires at {kmh} km/h; no variation period")))?,
        };
        let params = ProfileParams {
            test_speed: v,
            base_accel: cfg.sim.a_accel,
            test_start: t0,
            slot_duration: (t_aeb - t0).max(cfg.sim.dt) / resolution as f64,
        };
        for path in &paths {
            let profile = path_to_profile(path, &params)?;
            let spec = case(Variant::Path(path.to_line()), profile);
            out.profiles.push(format!("{}: {}", spec.label, path.provenance));
            out.runs.push(execute_case(cfg, triggers, &spec)?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn status_moves_forward_only() {
        let mut job =
            Job { id: "x".into(), source: "x.scn".into(), manifest: JobManifest::default(), status: JobStatus::Queued };
        job.advance(JobStatus::Running).unwrap();
        assert!(matches!(job.advance(JobStatus::Queued), Err(HarnessError::StatusRegression { .. })));
        job.advance(JobStatus::Done).unwrap();
        assert!(job.advance(JobStatus::Failed).is_err());
        assert!(job.status.is_terminal());
    }

    #[test]
    fn id_depends_on_content_only() {
        let (a, _) = Job::from_bytes("a.scn", "scn", CCRS_25KMH.as_bytes(), Path::new("."));
        let (b, _) = Job::from_bytes("b.scn", "scn", CCRS_25KMH.as_bytes(), Path::new("."));
        let (c, _) = Job::from_bytes("a.scn", "scn", b"scenario X extends CCRs_Base { }", Path::new("."));
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.len(), 64);
    }

    #[test]
    fn manifest_round_trip_and_aliases() {
        let m = JobManifest::from_toml("experiment = \"exp1\"\nspeeds_kmh = [20.0]\n").unwrap();
        assert_eq!(m.experiment, JobExperiment::Exp1Constant);
        assert_eq!(JobManifest::from_toml(&m.to_toml()).unwrap(), m);
        assert!(JobManifest::from_toml("experimentt = \"exp1\"").is_err());
    }

    #[test]
    fn custom_job_with_variation_paths() {
        let manifest = JobManifest {
            variants: Some(vec!["ideal".into()]),
            variation: Some(VariationJob {
                interactions: vec!["left:0.05".into(), "right:0.05".into()],
                resolution: 2,
                seed: 0,
                strategy: "exhaustive".into(),
                n: None,
            }),
            ..JobManifest::default()
        };
        let job = Job { id: "j".into(), source: "j.toml".into(), manifest, status: JobStatus::Queued };
        let out = execute_job(&job, &HarnessConfig::default(), &TriggerRegistry::default()).unwrap();
        assert_eq!(out.output.runs.len(), 1 + 4);
        assert!(out.scene_xml.contains("VehicleUnderTest"));
        assert!(out.output.runs[0].validity.valid);
        assert!(out.output.runs.iter().all(|r| r.trigger.is_some()));
        let table = out.output.table(&out.config).unwrap();
        assert!(table.to_csv().contains("\"left:0.05,right:0.05\""));
    }
}
