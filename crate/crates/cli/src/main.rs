use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use ncap_forge::dsl::{self, generate_scene, Registry};
use ncap_forge::evaluation::{Experiment, RunLabel, Variant};
use ncap_forge::harness::{
    self, execute_case, predicted_test_start, run_experiment_1, run_experiment_2, variant_lateral, CaseSpec,
    ExperimentOutput, HarnessConfig, RunStore, WatchOptions,
};
use ncap_forge::sim::{TargetProgram, TriggerRegistry, TriggerSpec};
use ncap_forge::units::kmh_to_ms;
use ncap_forge::variation::{LateralProfile, PerturbationProfile};

#[derive(Parser)]
#[command(name = "ncap-forge", version, about = "EuroNCAP car-to-car rear AEB scenario toolkit")]
struct Cli {
    /// TOML file with simulator, brake, tolerance, trigger and experiment settings.
    #[arg(long, global = true, env = "NCAP_FORGE_CONFIG")]
    config: Option<PathBuf>,
    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    /// Scene description for the simulator.
    Scene,
    /// Flattened scenario DSL without inheritance.
    Dsl,
}

#[derive(Clone, Copy, ValueEnum)]
enum Profile {
    Ideal,
    OscLeft,
    OscRight,
}

#[derive(clap::Args)]
struct TriggerArgs {
    /// Registered trigger name (see `ncap-forge triggers`).
    #[arg(long)]
    trigger: Option<String>,
    /// Trigger parameter, `name=value` (repeatable).
    #[arg(long = "param", value_name = "NAME=VALUE")]
    params: Vec<String>,
    /// Shorthand for `--param threshold=<s>`.
    #[arg(long)]
    threshold: Option<f64>,
}

impl TriggerArgs {
    fn apply(&self, cfg: &mut HarnessConfig) -> Result<()> {
        if let Some(name) = &self.trigger {
            cfg.trigger = TriggerSpec::new(name.clone());
        }
        for p in &self.params {
            let (k, v) = p.split_once('=').with_context(|| format!("`{p}` is not NAME=VALUE"))?;
            let v: f64 = v.trim().parse().with_context(|| format!("bad value in `{p}`"))?;
            cfg.trigger.params.insert(k.trim().into(), v);
        }
        if let Some(t) = self.threshold {
            cfg.trigger.params.insert("threshold".into(), t);
        }
        Ok(())
    }
}

#[derive(Subcommand)]
enum Command {
    /// Resolve a scenario and emit its scene description.
    Generate {
        /// Scenario DSL file.
        input: PathBuf,
        /// Directory of further `.scn` files to resolve `extends` against.
        #[arg(long)]
        registry: Option<PathBuf>,
        /// Scene description, or the flattened DSL.
        #[arg(long, value_enum, default_value = "scene")]
        format: OutputFormat,
        /// Output file; stdout when absent.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Simulate a single approach.
    Run {
        /// Scenario file; the built-in 25 km/h CCRs scenario when absent.
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// Lateral profile of the approach.
        #[arg(long, value_enum, default_value = "ideal")]
        profile: Profile,
        /// Test speed, km/h.
        #[arg(long, default_value_t = 25.0)]
        speed: f64,
        #[command(flatten)]
        trigger: TriggerArgs,
        /// Output directory.
        #[arg(long, default_value = "ncap-out/run")]
        out: PathBuf,
    },
    /// Constant-speed experiment: 3 lateral variants x configured speeds.
    Exp1 {
        /// Scenario file; the built-in 25 km/h CCRs scenario when absent.
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[command(flatten)]
        trigger: TriggerArgs,
        /// Output directory.
        #[arg(long, default_value = "ncap-out/exp1")]
        out: PathBuf,
    },
    /// Speed-variation experiment (runs the constant-speed experiment first
    /// for its trigger times; both appear in the output).
    Exp2 {
        /// Scenario file; the built-in 25 km/h CCRs scenario when absent.
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// Lead time of the late acceleration before the reference trigger, s.
        #[arg(long)]
        t_initiate: Option<f64>,
        /// Margin added to the minimum feasible T_initiate, s.
        #[arg(long)]
        margin: Option<f64>,
        #[command(flatten)]
        trigger: TriggerArgs,
        /// Output directory.
        #[arg(long, default_value = "ncap-out/exp2")]
        out: PathBuf,
    },
    /// Process jobs from a queue directory into the run store.
    Batch {
        /// Directory watched for `.scn` and `.toml` job files.
        #[arg(long)]
        queue: PathBuf,
        /// Store root; NCAP_FORGE_STORE or the config file otherwise.
        #[arg(long)]
        store: Option<PathBuf>,
        /// Jobs run in parallel.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Process the current queue once and exit instead of watching.
        #[arg(long)]
        once: bool,
        /// Seconds between queue scans while idle.
        #[arg(long, default_value_t = 2.0)]
        poll: f64,
    },
    /// Summarise the run store.
    Report {
        /// Store root; NCAP_FORGE_STORE or the config file otherwise.
        #[arg(long)]
        store: Option<PathBuf>,
        /// Print all result rows as CSV instead of the summary.
        #[arg(long)]
        csv: bool,
    },
    /// Re-run a stored job from its config snapshot and compare outputs.
    Replay {
        /// Store root; NCAP_FORGE_STORE or the config file otherwise.
        #[arg(long)]
        store: Option<PathBuf>,
        /// Job id (full or unique prefix).
        id: String,
    },
    /// List registered triggers.
    Triggers,
}

fn load_config(path: Option<&Path>) -> Result<HarnessConfig> {
    Ok(match path {
        Some(p) => HarnessConfig::load(p)?,
        None => HarnessConfig::default(),
    })
}

fn registry_with(dir: Option<&Path>) -> Result<Registry> {
    let mut reg = match dir {
        Some(d) => Registry::load_dir(d)?,
        None => Registry::new(),
    };
    for src in [dsl::CCRS_BASE, dsl::CCRS_25KMH] {
        let ast = dsl::parse(src)?;
        if reg.get(&ast.scenario_name).is_none() {
            reg.insert(ast)?;
        }
    }
    Ok(reg)
}

fn load_scenario(path: Option<&Path>, cfg: &HarnessConfig) -> Result<(String, f64)> {
    let source = match path {
        Some(p) => std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
        None => dsl::CCRS_25KMH.to_string(),
    };
    let reg = registry_with(path.and_then(Path::parent).filter(|d| !d.as_os_str().is_empty()))?;
    let resolved = dsl::resolve(&dsl::parse(&source)?, &reg)?;
    resolved.vut()?;
    let gap = resolved.initial_gap().unwrap_or(cfg.sim.initial_gap);
    if !(gap > 0.0) {
        bail!("target must be ahead of the VUT (initial gap {gap} m)");
    }
    Ok((resolved.name, gap))
}

fn store_for(cfg: &HarnessConfig, explicit: Option<&Path>) -> Result<RunStore> {
    let root = cfg
        .store_root(explicit)
        .context("no run store given: use --store, NCAP_FORGE_STORE or `store` in the config file")?;
    Ok(RunStore::open(&root)?)
}

fn finish(out: &ExperimentOutput, cfg: &HarnessConfig, dir: &Path) -> Result<()> {
    out.write_to(dir, cfg)?;
    print!("{}", out.table(cfg)?.to_text());
    log::info!("wrote {}", dir.display());
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let mut cfg = load_config(cli.config.as_deref())?;
    let triggers = TriggerRegistry::default();

    match cli.command {
        Command::Generate { input, registry, format, output } => {
            let source = std::fs::read(&input).with_context(|| format!("reading {}", input.display()))?;
            let ast = dsl::parse_bytes(&source).with_context(|| input.display().to_string())?;
            let resolved = dsl::resolve(&ast, &registry_with(registry.as_deref())?)?;
            let text = match format {
                OutputFormat::Scene => generate_scene(&resolved),
                OutputFormat::Dsl => resolved.to_ast().to_source(),
            };
            match output {
                Some(p) => std::fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?,
                None => print!("{text}"),
            }
        }
        Command::Run { scenario, profile, speed, trigger, out } => {
            trigger.apply(&mut cfg)?;
            let (name, gap) = load_scenario(scenario.as_deref(), &cfg)?;
            let variant = match profile {
                Profile::Ideal => Variant::Ideal,
                Profile::OscLeft => Variant::Left,
                Profile::OscRight => Variant::Right,
            };
            if !(speed > 0.0) {
                bail!("--speed must be positive");
            }
            let base = PerturbationProfile::constant_speed(kmh_to_ms(speed), cfg.sim.a_accel, LateralProfile::Ideal);
            let t0 = predicted_test_start(&cfg, gap, &base, TargetProgram::stationary())?;
            let profile = PerturbationProfile { lateral: variant_lateral(&cfg, &variant, t0)?, ..base };
            let label = RunLabel { experiment: Experiment::Custom("run".into()), variant, test_case_kmh: speed };
            let spec = CaseSpec {
                label: label.clone(),
                scenario: name,
                initial_gap: gap,
                profile: profile.clone(),
                target: TargetProgram::stationary(),
                trigger: None,
            };
            let run = execute_case(&cfg, &triggers, &spec)?;
            let output = ExperimentOutput {
                runs: vec![run],
                profiles: vec![format!("{label}: {}", serde_json::to_string(&profile)?)],
            };
            finish(&output, &cfg, &out)?;
        }
        Command::Exp1 { scenario, trigger, out } => {
            trigger.apply(&mut cfg)?;
            let (name, gap) = load_scenario(scenario.as_deref(), &cfg)?;
            let output = run_experiment_1(&cfg, &triggers, &name, gap)?;
            finish(&output, &cfg, &out)?;
        }
        Command::Exp2 { scenario, t_initiate, margin, trigger, out } => {
            trigger.apply(&mut cfg)?;
            if t_initiate.is_some() {
                cfg.experiments.t_initiate = t_initiate;
            }
            if let Some(m) = margin {
                cfg.experiments.margin = m;
            }
            let (name, gap) = load_scenario(scenario.as_deref(), &cfg)?;
            let mut output = run_experiment_1(&cfg, &triggers, &name, gap)?;
            let exp2 = run_experiment_2(&cfg, &triggers, &name, gap, &output)?;
            output.extend(exp2);
            finish(&output, &cfg, &out)?;
        }
        Command::Batch { queue, store, jobs, once, poll } => {
            let store = store_for(&cfg, store.as_deref())?;
            if !(poll > 0.0) {
                bail!("--poll must be positive");
            }
            let opts = WatchOptions { jobs: jobs.max(1), poll: Duration::from_secs_f64(poll), once };
            let summary = harness::watch_and_run(&queue, &store, &cfg, opts)?;
            println!("{} done, {} failed, {} skipped", summary.done.len(), summary.failed.len(), summary.skipped.len());
        }
        Command::Report { store, csv } => {
            let store = store_for(&cfg, store.as_deref())?;
            let report = harness::report(&store)?;
            print!("{}", if csv { report.to_csv() } else { report.to_text() });
        }
        Command::Replay { store, id } => {
            let store = store_for(&cfg, store.as_deref())?;
            let matches: Vec<_> = store.records()?.into_iter().filter(|r| r.id.starts_with(&id)).collect();
            let record = match matches.as_slice() {
                [one] => one,
                [] => bail!("no stored job matches `{id}`"),
                _ => bail!("`{id}` matches {} jobs", matches.len()),
            };
            let n = store.replay(&record.id, &triggers)?;
            println!("{}: {n} files reproduced byte-identically", record.id);
        }
        Command::Triggers => {
            for (name, summary, params) in triggers.describe() {
                let params: Vec<String> = params
                    .iter()
                    .map(|p| match p.default {
                        Some(d) => format!("{}={d}", p.name),
                        None => format!("{} (required)", p.name),
                    })
                    .collect();
                println!("{name:<12} {summary}");
                if !params.is_empty() {
                    println!("{:<12} params: {}", "", params.join(", "));
                }
            }
        }
    }
    Ok(())
}
