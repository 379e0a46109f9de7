//! Benchmark suites: every (instance, mode) pair of a suite becomes one
//! planning episode and one report row.

mod generate;
mod report;

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, Write};
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use thiserror::Error;

use crate::llm::{CallLog, CompletionClient, LiveClient, LiveConfig, OracleClient, ScriptedClient};
use crate::orchestrator::{self, run_episode_metrics, Mode, PlannerConfig, RunRecord};
use crate::pddl::{parse_domain, parse_problem, Domain, PddlError, Problem};
use crate::search::validate_plan;

pub use generate::{generate_blocks, generate_logistics, LogisticsSize};
pub use report::{emit_report, sort_rows, summary, ReportFormat, ReportRow, CSV_HEADER};

/// Where an instance comes from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InstanceSource {
    File(PathBuf),
    Text { name: String, text: String },
}

impl InstanceSource {
    fn load(&self) -> io::Result<String> {
        match self {
            InstanceSource::File(p) => fs::read_to_string(p),
            InstanceSource::Text { text, .. } => Ok(text.clone()),
        }
    }

    fn fallback_name(&self) -> String {
        match self {
            InstanceSource::File(p) => p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
            InstanceSource::Text { name, .. } => name.clone(),
        }
    }
}

/// How each episode gets its LLM client. Every episode builds a fresh one.
#[derive(Debug, Clone, PartialEq)]
pub enum LlmSource {
    None,
    /// Newline-delimited replies, replayed from the start for every episode.
    Scripted(PathBuf),
    Oracle,
    Live(LiveConfig),
}

impl LlmSource {
    pub fn client_for(&self, domain: &Domain, problem: &Problem) -> Result<Option<Box<dyn CompletionClient>>, BenchError> {
        Ok(match self {
            LlmSource::None => None,
            LlmSource::Scripted(path) => Some(Box::new(ScriptedClient::from_file(path).map_err(|e| {
                BenchError::Usage(format!("cannot read script {}: {e}", path.display()))
            })?)),
            LlmSource::Oracle => Some(Box::new(OracleClient::new(domain, &problem.objects))),
            LlmSource::Live(cfg) => {
                Some(Box::new(LiveClient::new(cfg.clone()).map_err(|e| BenchError::Usage(e.to_string()))?))
            }
        })
    }
}

#[derive(Debug, Clone)]
pub struct SuiteSpec {
    pub domain: PathBuf,
    pub instances: Vec<InstanceSource>,
    pub modes: Vec<Mode>,
    /// Settings shared by all modes; `mode` is overwritten per run.
    pub base: PlannerConfig,
    /// Full replacement config for particular modes.
    pub overrides: BTreeMap<Mode, PlannerConfig>,
    pub llm: LlmSource,
    /// CSV report, appended while the suite runs and rewritten sorted at the end.
    pub csv: Option<PathBuf>,
    /// `key=value` run records, appended per episode.
    pub records: Option<PathBuf>,
    /// JSON-lines LLM transcript, appended per episode.
    pub transcript: Option<PathBuf>,
    /// Worker threads; 0 or 1 runs sequentially.
    pub jobs: usize,
}

impl SuiteSpec {
    pub fn new(domain: impl Into<PathBuf>, instances: Vec<InstanceSource>, modes: Vec<Mode>) -> Self {
        SuiteSpec {
            domain: domain.into(),
            instances,
            modes,
            base: PlannerConfig::default(),
            overrides: BTreeMap::new(),
            llm: LlmSource::None,
            csv: None,
            records: None,
            transcript: None,
            jobs: 1,
        }
    }

    pub fn config_for(&self, mode: Mode) -> PlannerConfig {
        let mut cfg = self.overrides.get(&mode).cloned().unwrap_or_else(|| self.base.clone());
        cfg.mode = mode;
        cfg
    }
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("{0}")]
    Usage(String),
    #[error("cannot parse domain: {0}")]
    Domain(#[from] PddlError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone)]
pub struct SuiteReport {
    /// Sorted by instance, then mode.
    pub rows: Vec<ReportRow>,
    /// Same order as `rows`; `None` where the instance failed to load.
    pub records: Vec<Option<RunRecord>>,
}

impl SuiteReport {
    pub fn summary(&self) -> String {
        summary(&self.rows)
    }
}

struct Sinks {
    csv: Option<File>,
    records: Option<File>,
    transcript: Option<PathBuf>,
}

fn append_file(path: &PathBuf) -> io::Result<File> {
    fs::OpenOptions::new().create(true).append(true).open(path)
}

fn failed_row(instance: String, mode: Mode, reason: String) -> ReportRow {
    ReportRow {
        instance,
        mode: mode.to_string(),
        solved: false,
        plan_length: None,
        solver_ms: 0,
        llm_calls: 0,
        expansions: 0,
        branching: 0.0,
        failure: Some(reason),
    }
}

fn run_one(
    spec: &SuiteSpec,
    domain: &Domain,
    source: &InstanceSource,
    mode: Mode,
) -> Result<(ReportRow, Option<RunRecord>, CallLog), BenchError> {
    let text = match source.load() {
        Ok(t) => t,
        Err(e) => return Ok((failed_row(source.fallback_name(), mode, format!("read: {e}")), None, CallLog::new())),
    };
    let problem = match parse_problem(&text, domain) {
        Ok(p) => p,
        Err(e) => return Ok((failed_row(source.fallback_name(), mode, format!("parse: {e}")), None, CallLog::new())),
    };
    let cfg = spec.config_for(mode);
    let client = if mode.needs_client() { spec.llm.client_for(domain, &problem)? } else { None };
    let episode = orchestrator::plan(&problem, domain, &cfg, client.as_deref())
        .map_err(|e| BenchError::Usage(e.to_string()))?;
    let mut row = run_episode_metrics(&episode.record);
    // count only what an independent validation accepts
    row.solved = episode
        .result
        .as_ref()
        .is_ok_and(|p| validate_plan(&problem.init, &problem.goal, p).is_valid());
    row.instance = problem.name.clone();
    Ok((row, Some(episode.record), episode.transcript))
}

/// Runs every (instance, mode) pair. Per-episode failures become rows; only
/// configuration and I/O problems abort the suite.
pub fn run_suite(spec: &SuiteSpec) -> Result<SuiteReport, BenchError> {
    if spec.instances.is_empty() {
        return Err(BenchError::Usage("suite has no instances".into()));
    }
    if spec.modes.is_empty() {
        return Err(BenchError::Usage("suite has no modes".into()));
    }
    if spec.llm == LlmSource::None {
        if let Some(m) = spec.modes.iter().find(|m| m.needs_client()) {
            return Err(BenchError::Usage(format!("mode {m} needs an LLM client")));
        }
    }
    if let LlmSource::Scripted(path) = &spec.llm {
        if !path.is_file() {
            return Err(BenchError::Usage(format!("script {} not found", path.display())));
        }
    }
    let domain_text = fs::read_to_string(&spec.domain)
        .map_err(|e| BenchError::Usage(format!("cannot read domain {}: {e}", spec.domain.display())))?;
    let domain = parse_domain(&domain_text)?;

    let mut csv = spec.csv.as_ref().map(File::create).transpose()?;
    if let Some(f) = csv.as_mut() {
        writeln!(f, "{CSV_HEADER}")?;
    }
    let sinks = Mutex::new(Sinks {
        csv,
        records: spec.records.as_ref().map(append_file).transpose()?,
        transcript: spec.transcript.clone(),
    });

    let jobs: Vec<(usize, Mode)> = (0..spec.instances.len())
        .flat_map(|i| spec.modes.iter().map(move |&m| (i, m)))
        .collect();
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<(ReportRow, Option<RunRecord>)>> = Mutex::new(Vec::with_capacity(jobs.len()));
    let first_error: Mutex<Option<BenchError>> = Mutex::new(None);

    let worker = || loop {
        if first_error.lock().unwrap().is_some() {
            return;
        }
        let k = next.fetch_add(1, Ordering::SeqCst);
        let Some(&(i, mode)) = jobs.get(k) else { return };
        let outcome = run_one(spec, &domain, &spec.instances[i], mode).and_then(|(row, record, log)| {
            let mut s = sinks.lock().unwrap();
            if let Some(f) = s.csv.as_mut() {
                writeln!(f, "{}", row.csv_line())?;
                f.flush()?;
            }
            if let (Some(f), Some(r)) = (s.records.as_mut(), record.as_ref()) {
                writeln!(f, "{}", r.to_key_values())?;
                f.flush()?;
            }
            if let Some(path) = &s.transcript {
                log.append_to(path)?;
            }
            Ok((row, record))
        });
        match outcome {
            Ok(r) => results.lock().unwrap().push(r),
            Err(e) => {
                first_error.lock().unwrap().get_or_insert(e);
                return;
            }
        }
    };

    let threads = spec.jobs.clamp(1, jobs.len());
    if threads == 1 {
        worker();
    } else {
        std::thread::scope(|s| {
            for _ in 0..threads {
                s.spawn(worker);
            }
        });
    }
    if let Some(e) = first_error.into_inner().unwrap() {
        return Err(e);
    }

    let mut results = results.into_inner().unwrap();
    results.sort_by(|a, b| (&a.0.instance, &a.0.mode).cmp(&(&b.0.instance, &b.0.mode)));
    let (rows, records): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    if let Some(path) = &spec.csv {
        fs::write(path, emit_report(&rows, ReportFormat::Csv))?;
    }
    Ok(SuiteReport { rows, records })
}
