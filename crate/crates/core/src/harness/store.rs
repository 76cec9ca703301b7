use std::collections::{BTreeSet, VecDeque};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{Duration, SystemTime};

use serde::{Deserialize, Serialize};

use super::experiments::write_files;
use super::{execute_job, HarnessConfig, HarnessError, Job, JobExperiment, JobManifest, JobStatus};
use crate::evaluation::RESULTS_CSV_HEADER;
use crate::sim::TriggerRegistry;

const RECORD_FILE: &str = "job.json";
const TMP_PREFIX: &str = ".tmp-";

/// Store-side summary of one job, kept as `job.json` in its directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobRecord {
    pub id: String,
    pub source: String,
    pub experiment: Option<JobExperiment>,
    pub status: JobStatus,
    pub runs: usize,
    pub diagnostics: Option<String>,
}

/// Content-addressed job directories under one root.
///
/// A job directory appears only through an atomic rename of a fully written
/// temporary directory, so a present directory is always complete.
#[derive(Debug, Clone)]
pub struct RunStore {
    root: PathBuf,
}

impl RunStore {
    pub fn open(root: &Path) -> Result<Self, HarnessError> {
        std::fs::create_dir_all(root).map_err(|e| HarnessError::io(root, e))?;
        Ok(Self { root: root.to_path_buf() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn job_dir(&self, id: &str) -> PathBuf {
        self.root.join(id)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.job_dir(id).is_dir()
    }

    /// Removes temporary directories left by an interrupted run.
    pub fn clean_stale(&self) -> Result<usize, HarnessError> {
        let mut n = 0;
        for entry in std::fs::read_dir(&self.root).map_err(|e| HarnessError::io(&self.root, e))? {
            let entry = entry.map_err(|e| HarnessError::io(&self.root, e))?;
            if entry.file_name().to_string_lossy().starts_with(TMP_PREFIX) {
                std::fs::remove_dir_all(entry.path()).map_err(|e| HarnessError::io(&entry.path(), e))?;
                n += 1;
            }
        }
        Ok(n)
    }

    /// Writes `files` plus the record and publishes them as the job's directory.
    pub fn commit(&self, record: &JobRecord, files: &[(String, String)]) -> Result<PathBuf, HarnessError> {
        let dest = self.job_dir(&record.id);
        if dest.exists() {
            return Err(HarnessError::Job(format!("job {} is already stored", record.id)));
        }
        let tmp = self.root.join(format!("{TMP_PREFIX}{}", record.id));
        if tmp.exists() {
            std::fs::remove_dir_all(&tmp).map_err(|e| HarnessError::io(&tmp, e))?;
        }
        std::fs::create_dir(&tmp).map_err(|e| HarnessError::io(&tmp, e))?;
        let mut all = files.to_vec();
        all.push((RECORD_FILE.into(), serde_json::to_string_pretty(record).expect("record serializes") + "\n"));
        write_files(&tmp, &all)?;
        std::fs::rename(&tmp, &dest).map_err(|e| HarnessError::io(&dest, e))?;
        Ok(dest)
    }

    pub fn record(&self, id: &str) -> Result<JobRecord, HarnessError> {
        let path = self.job_dir(id).join(RECORD_FILE);
        let text = std::fs::read_to_string(&path).map_err(|e| HarnessError::io(&path, e))?;
        serde_json::from_str(&text).map_err(|e| HarnessError::Job(format!("{}: {e}", path.display())))
    }

    /// All stored job records, ordered by id.
    pub fn records(&self) -> Result<Vec<JobRecord>, HarnessError> {
        let mut ids: Vec<String> = Vec::new();
        for entry in std::fs::read_dir(&self.root).map_err(|e| HarnessError::io(&self.root, e))? {
            let entry = entry.map_err(|e| HarnessError::io(&self.root, e))?;
            let name = entry.file_name().to_string_lossy().into_owned();
            if entry.path().is_dir() && !name.starts_with('.') {
                ids.push(name);
            }
        }
        ids.sort();
        ids.iter().map(|id| self.record(id)).collect()
    }

    /// Re-executes a completed job from its stored config and manifest and
    /// checks that every output file comes out byte-identical. Returns the
    /// number of files compared.
    pub fn replay(&self, id: &str, triggers: &TriggerRegistry) -> Result<usize, HarnessError> {
        let dir = self.job_dir(id);
        let read = |name: &str| {
            let p = dir.join(name);
            std::fs::read_to_string(&p).map_err(|e| HarnessError::io(&p, e))
        };
        let record = self.record(id)?;
        if record.status != JobStatus::Done {
            return Err(HarnessError::Job(format!("job {id} is {}, nothing to replay", record.status)));
        }
        let cfg = HarnessConfig::from_toml(&read("config.toml")?)?;
        let manifest = JobManifest::from_toml(&read("job.toml")?)?;
        let job = Job { id: id.into(), source: record.source, manifest, status: JobStatus::Running };
        let files = execute_job(&job, &cfg, triggers)?.files()?;
        for (name, contents) in &files {
            if read(name)? != *contents {
                return Err(HarnessError::ReplayMismatch { id: id.into(), file: name.clone() });
            }
        }
        Ok(files.len())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BatchSummary {
    pub done: Vec<String>,
    pub failed: Vec<String>,
    /// Already stored or duplicated within the batch.
    pub skipped: Vec<String>,
}

impl BatchSummary {
    pub fn processed(&self) -> usize {
        self.done.len() + self.failed.len()
    }

    fn absorb(&mut self, other: BatchSummary) {
        self.done.extend(other.done);
        self.failed.extend(other.failed);
        self.skipped.extend(other.skipped);
    }
}

fn is_job_file(path: &Path) -> bool {
    path.is_file()
        && !path.file_name().is_some_and(|n| n.to_string_lossy().starts_with('.'))
        && path.extension().is_some_and(|e| e == "scn" || e == "toml")
}

/// Job files in arrival order: file name, then modification time.
pub(crate) fn queue_files(queue: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    let mut files: Vec<(String, SystemTime, PathBuf)> = Vec::new();
    for entry in std::fs::read_dir(queue).map_err(|e| HarnessError::io(queue, e))? {
        let path = entry.map_err(|e| HarnessError::io(queue, e))?.path();
        if is_job_file(&path) {
            let mtime = path.metadata().and_then(|m| m.modified()).unwrap_or(SystemTime::UNIX_EPOCH);
            files.push((path.file_name().unwrap().to_string_lossy().into_owned(), mtime, path));
        }
    }
    files.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));
    Ok(files.into_iter().map(|(_, _, p)| p).collect())
}

enum Pending {
    Ready(Job),
    Broken { id: String, source: String, error: HarnessError },
}

fn process(
    pending: Pending,
    store: &RunStore,
    cfg: &HarnessConfig,
    triggers: &TriggerRegistry,
) -> Result<(String, bool), HarnessError> {
    let (id, source, result, experiment) = match pending {
        Pending::Broken { id, source, error } => (id, source, Err(error), None),
        Pending::Ready(mut job) => {
            job.advance(JobStatus::Running)?;
            log::info!("running job {} ({})", &job.id[..12], job.source);
            let r = execute_job(&job, cfg, triggers).and_then(|out| Ok((out.output.runs.len(), out.files()?)));
            let experiment = Some(job.manifest.experiment);
            let status = if r.is_ok() { JobStatus::Done } else { JobStatus::Failed };
            job.advance(status)?;
            (job.id, job.source, r, experiment)
        }
    };
    match result {
        Ok((runs, files)) => {
            let record =
                JobRecord { id: id.clone(), source, experiment, status: JobStatus::Done, runs, diagnostics: None };
            store.commit(&record, &files)?;
            Ok((id, true))
        }
        Err(e) => {
            log::warn!("job {} ({source}) failed: {e}", &id[..12]);
            let diagnostics = e.to_string();
            let record = JobRecord {
                id: id.clone(),
                source,
                experiment,
                status: JobStatus::Failed,
                runs: 0,
                diagnostics: Some(diagnostics.clone()),
            };
            store.commit(&record, &[("diagnostics.txt".into(), diagnostics + "\n")])?;
            Ok((id, false))
        }
    }
}

/// Processes every not-yet-stored job in `queue` once, with up to `jobs`
/// jobs in parallel. Job failures are recorded in the store; store write
/// failures abort the batch.
pub fn run_pending(
    queue: &Path,
    store: &RunStore,
    cfg: &HarnessConfig,
    jobs: usize,
) -> Result<BatchSummary, HarnessError> {
    let triggers = TriggerRegistry::default();
    let mut summary = BatchSummary::default();
    let mut seen = BTreeSet::new();
    let mut work = VecDeque::new();
    for path in queue_files(queue)? {
        let (id, source, job) = Job::load(&path);
        if store.contains(&id) || !seen.insert(id.clone()) {
            log::debug!("skipping {source}: job {} already processed", &id[..12]);
            summary.skipped.push(id);
            continue;
        }
        work.push_back(match job {
            Ok(job) => Pending::Ready(job),
            Err(error) => Pending::Broken { id, source, error },
        });
    }
    if work.is_empty() {
        return Ok(summary);
    }

    let n = work.len();
    let work = Mutex::new(work.into_iter().enumerate().collect::<VecDeque<_>>());
    // (job id, succeeded) per queue index
    type Slot = Option<Result<(String, bool), HarnessError>>;
    let results: Mutex<Vec<Slot>> = Mutex::new((0..n).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..jobs.clamp(1, n) {
            s.spawn(|| loop {
                let Some((i, item)) = work.lock().expect("queue lock").pop_front() else { break };
                let r = process(item, store, cfg, &triggers);
                results.lock().expect("results lock")[i] = Some(r);
            });
        }
    });
    for r in results.into_inner().expect("results lock").into_iter().flatten() {
        let (id, ok) = r?;
        if ok {
            summary.done.push(id);
        } else {
            summary.failed.push(id);
        }
    }
    Ok(summary)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WatchOptions {
    pub jobs: usize,
    pub poll: Duration,
    /// Return after one pass over the queue instead of idling.
    pub once: bool,
}

impl Default for WatchOptions {
    fn default() -> Self {
        Self { jobs: 1, poll: Duration::from_secs(2), once: false }
    }
}

/// Service loop: processes new queue entries as they arrive and idles when
/// there are none. Returns only on a store failure, or after one pass with
/// `once`.
pub fn watch_and_run(
    queue: &Path,
    store: &RunStore,
    cfg: &HarnessConfig,
    opts: WatchOptions,
) -> Result<BatchSummary, HarnessError> {
    if !queue.is_dir() {
        return Err(HarnessError::Io {
            path: queue.display().to_string(),
            message: "queue directory does not exist".into(),
        });
    }
    let stale = store.clean_stale()?;
    if stale > 0 {
        log::warn!("removed {stale} incomplete job directories from an earlier run");
    }
    let mut total = BatchSummary::default();
    loop {
        let pass = run_pending(queue, store, cfg, opts.jobs)?;
        let idle = pass.processed() == 0;
        if !idle {
            log::info!("processed {} jobs ({} failed)", pass.processed(), pass.failed.len());
        }
        total.absorb(pass);
        if opts.once {
            return Ok(total);
        }
        if idle {
            std::thread::sleep(opts.poll);
        }
    }
}

/// Aggregated view over a store.
#[derive(Debug, Clone, PartialEq)]
pub struct StoreReport {
    pub records: Vec<JobRecord>,
    /// `results.csv` rows of completed jobs, prefixed with the job id.
    pub rows: Vec<String>,
}

impl StoreReport {
    pub fn to_csv(&self) -> String {
        let mut out = format!("job,{RESULTS_CSV_HEADER}\n");
        for row in &self.rows {
            out.push_str(row);
            out.push('\n');
        }
        out
    }

    pub fn to_text(&self) -> String {
        let done = self.records.iter().filter(|r| r.status == JobStatus::Done).count();
        let failed = self.records.iter().filter(|r| r.status == JobStatus::Failed).count();
        let mut out = format!("{} jobs: {done} done, {failed} failed\n", self.records.len());
        for r in &self.records {
            let exp = r.experiment.map(|e| e.to_string()).unwrap_or_else(|| "-".into());
            let _ = write!(
                out,
                "{}  {:<6}  {:<20}  {:<24}",
                &r.id[..12.min(r.id.len())],
                r.status.to_string(),
                exp,
                r.source
            );
            match &r.diagnostics {
                Some(d) => {
                    let first = d.lines().next().unwrap_or("");
                    let _ = writeln!(out, "  {first}");
                }
                None => {
                    let prefix = format!("{},", r.id);
                    let mine: Vec<&String> = self.rows.iter().filter(|row| row.starts_with(&prefix)).collect();
                    let collided = mine.iter().filter(|row| row.split(',').rev().nth(2) == Some("true")).count();
                    let invalid = mine.iter().filter(|row| row.split(',').rev().nth(1) == Some("false")).count();
                    let _ = writeln!(out, "  {} runs, {collided} collisions, {invalid} invalid", mine.len());
                }
            }
        }
        out
    }
}

pub fn report(store: &RunStore) -> Result<StoreReport, HarnessError> {
    let records = store.records()?;
    let mut rows = Vec::new();
    for r in records.iter().filter(|r| r.status == JobStatus::Done) {
        let path = store.job_dir(&r.id).join("results.csv");
        let text = std::fs::read_to_string(&path).map_err(|e| HarnessError::io(&path, e))?;
        rows.extend(text.lines().skip(1).filter(|l| !l.is_empty()).map(|l| format!("{},{l}", r.id)));
    }
    Ok(StoreReport { records, rows })
}
