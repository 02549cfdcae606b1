//! Runs a question suite under one mode and adapter: isolated working
//! directories per (trial, question), trials in sequence, questions in
//! parallel, then aggregation into `report.json`.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;
use std::time::Duration;

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::agent::{Agent, AgentConfig, AgentRun, Mode, Termination};
use crate::bench::{aggregate, evaluate_answer, load_suite, materialize_prompt, PromptRoots, QuestionScore, RunReport, ScoredQuestion, Suite, SuiteError, SuiteQuestion};
use crate::model::{ModelAdapter, ModelConfig, ReplayAdapter, WireAdapter};
use crate::tools::{full_registry, FixtureStore, ToolRegistry};

pub const DEFAULT_TRIALS: usize = 3;
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_QUESTION_BUDGET: Duration = Duration::from_secs(30 * 60);
pub const ANSWER_FILE: &str = "answer.json";
pub const REPORT_FILE: &str = "report.json";

#[derive(Debug, Clone, PartialEq)]
pub enum AdapterSpec {
    /// Live OpenAI-compatible endpoint; credentials come from the environment.
    Wire(ModelConfig),
    /// Directory of recorded steps: `<qid>.trial<k>.json` if present, else `<qid>.json`.
    Replay(PathBuf),
}

impl FromStr for AdapterSpec {
    type Err = String;

    /// `wire` or `replay:PATH`.
    fn from_str(s: &str) -> Result<Self, String> {
        if s == "wire" {
            return ModelConfig::from_env().map(AdapterSpec::Wire);
        }
        match s.strip_prefix("replay:") {
            Some(p) if !p.is_empty() => Ok(AdapterSpec::Replay(PathBuf::from(p))),
            _ => Err(format!("adapter must be 'wire' or 'replay:PATH', got '{s}'")),
        }
    }
}

impl fmt::Display for AdapterSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AdapterSpec::Wire(c) => write!(f, "wire:{}", c.model),
            AdapterSpec::Replay(p) => write!(f, "replay:{}", p.display()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    /// Directory with `questions/` and `truth/`.
    pub suite: PathBuf,
    pub dataset_root: PathBuf,
    /// Base for `{path_to_metadata}`; the dataset root when unset.
    pub metadata_root: Option<PathBuf>,
    /// Recorded tool outputs; without them fixture-backed tools report FixtureMiss.
    pub fixtures: Option<PathBuf>,
    pub mode: Mode,
    pub adapter: AdapterSpec,
    pub trials: usize,
    pub parallelism: usize,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub question_budget: Duration,
    pub max_steps: usize,
    pub record_timings: bool,
}

impl RunConfig {
    pub fn new(suite: impl Into<PathBuf>, dataset_root: impl Into<PathBuf>, output_dir: impl Into<PathBuf>, mode: Mode, adapter: AdapterSpec) -> Self {
        Self {
            suite: suite.into(),
            dataset_root: dataset_root.into(),
            metadata_root: None,
            fixtures: None,
            mode,
            adapter,
            trials: DEFAULT_TRIALS,
            parallelism: 1,
            output_dir: output_dir.into(),
            seed: DEFAULT_SEED,
            question_budget: DEFAULT_QUESTION_BUDGET,
            max_steps: crate::agent::DEFAULT_MAX_STEPS,
            record_timings: true,
        }
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("ConfigError: {0}")]
    Config(String),
    #[error("SuiteLoadError: {0}")]
    Suite(#[from] SuiteError),
    #[error("IoError: {0}")]
    Io(#[from] std::io::Error),
}

/// Seed for one (trial, question): the first eight bytes, big-endian, of
/// SHA-256 over `"{seed}:{trial}:{question_id}"`.
pub fn question_seed(seed: u64, trial: usize, question_id: &str) -> u64 {
    let digest = Sha256::digest(format!("{seed}:{trial}:{question_id}").as_bytes());
    u64::from_be_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

/// Replay file for a trial, preferring a per-trial override.
pub fn replay_file(dir: &Path, question_id: &str, trial: usize) -> PathBuf {
    let specific = dir.join(format!("{question_id}.trial{trial}.json"));
    if specific.is_file() {
        specific
    } else {
        dir.join(format!("{question_id}.json"))
    }
}

/// A run that did not finish normally, listed in the report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IncompleteRun {
    pub trial: usize,
    pub question_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchmarkReport {
    pub mode: Mode,
    pub seed: u64,
    #[serde(flatten)]
    pub report: RunReport,
    pub incomplete_runs: Vec<IncompleteRun>,
}

impl BenchmarkReport {
    pub fn all_completed(&self) -> bool {
        self.incomplete_runs.is_empty()
    }
}

#[derive(Debug)]
pub struct SingleOutcome {
    pub run: Option<AgentRun>,
    pub score: QuestionScore,
    pub incomplete: Option<String>,
}

/// Everything shared by the runs of one benchmark invocation.
pub struct Runner {
    config: RunConfig,
    suite: Suite,
    dataset_root: PathBuf,
    metadata_root: PathBuf,
    output_dir: PathBuf,
    registry: Arc<ToolRegistry>,
}

impl fmt::Debug for Runner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Runner")
            .field("mode", &self.config.mode)
            .field("adapter", &self.config.adapter.to_string())
            .field("questions", &self.suite.questions.len())
            .finish()
    }
}

impl Runner {
    /// Validates the configuration and loads the suite and fixtures.
    pub fn prepare(config: RunConfig) -> Result<Self, RunError> {
        if config.trials == 0 {
            return Err(RunError::Config("trials must be at least 1".into()));
        }
        if config.parallelism == 0 {
            return Err(RunError::Config("parallelism must be at least 1".into()));
        }
        if config.max_steps == 0 {
            return Err(RunError::Config("max_steps must be at least 1".into()));
        }
        let dataset_root = config
            .dataset_root
            .canonicalize()
            .map_err(|e| RunError::Config(format!("dataset root {}: {e}", config.dataset_root.display())))?;
        let metadata_root = match &config.metadata_root {
            Some(m) => m.canonicalize().map_err(|e| RunError::Config(format!("metadata root {}: {e}", m.display())))?,
            None => dataset_root.clone(),
        };
        fs::create_dir_all(&config.output_dir)
            .map_err(|e| RunError::Config(format!("output dir {} is not writable: {e}", config.output_dir.display())))?;
        let output_dir = config.output_dir.canonicalize()?;
        let probe = output_dir.join(".write_probe");
        fs::write(&probe, b"")
            .and_then(|_| fs::remove_file(&probe))
            .map_err(|e| RunError::Config(format!("output dir {} is not writable: {e}", output_dir.display())))?;
        if output_dir.starts_with(&dataset_root) {
            return Err(RunError::Config("output dir must not lie inside the dataset root".into()));
        }

        let suite = load_suite(&config.suite)?;
        if suite.questions.is_empty() {
            return Err(RunError::Config(format!("suite {} has no questions", config.suite.display())));
        }
        if let AdapterSpec::Replay(dir) = &config.adapter {
            for q in &suite.questions {
                for trial in 1..=config.trials {
                    let f = replay_file(dir, &q.spec.id, trial);
                    if !f.is_file() {
                        return Err(RunError::Config(format!("no replay for question {} at {}", q.spec.id, f.display())));
                    }
                }
            }
        }
        let store = match &config.fixtures {
            Some(dir) => Some(Arc::new(
                FixtureStore::open(dir, &dataset_root).map_err(|e| RunError::Config(e.to_string()))?,
            )),
            None => None,
        };
        let registry = Arc::new(full_registry(store));
        Ok(Self { config, suite, dataset_root, metadata_root, output_dir, registry })
    }

    pub fn suite(&self) -> &Suite {
        &self.suite
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn run_dir(&self, trial: usize, question_id: &str) -> PathBuf {
        self.output_dir.join(format!("trial_{trial}")).join(question_id)
    }

    fn adapter(&self, q: &SuiteQuestion, trial: usize, working_dir: &Path) -> Result<Box<dyn ModelAdapter>, String> {
        match &self.config.adapter {
            AdapterSpec::Wire(cfg) => {
                let mut cfg = cfg.clone();
                cfg.seed = Some(question_seed(self.config.seed, trial, &q.spec.id));
                WireAdapter::new(cfg).map(|a| Box::new(a) as Box<dyn ModelAdapter>).map_err(|e| e.to_string())
            }
            AdapterSpec::Replay(dir) => {
                let subs = [
                    ("dataset_root".to_string(), self.dataset_root.to_string_lossy().into_owned()),
                    ("working_dir".to_string(), working_dir.to_string_lossy().into_owned()),
                ];
                ReplayAdapter::from_file(&replay_file(dir, &q.spec.id, trial))
                    .map(|a| Box::new(a.with_substitutions(subs)) as Box<dyn ModelAdapter>)
                    .map_err(|e| e.to_string())
            }
        }
    }

    fn agent_config(&self, trial: usize, question_id: &str) -> AgentConfig {
        let mut cfg = AgentConfig::new(self.config.mode);
        cfg.max_steps = self.config.max_steps;
        cfg.time_budget = Some(self.config.question_budget);
        cfg.record_timings = self.config.record_timings;
        cfg.limits.read_roots = vec![self.dataset_root.clone()];
        if self.metadata_root != self.dataset_root {
            cfg.limits.read_roots.push(self.metadata_root.clone());
        }
        cfg.limits.rng_seed = question_seed(self.config.seed, trial, question_id);
        cfg.redactions = vec![(self.dataset_root.clone(), "{dataset_root}".into())];
        cfg
    }

    /// One question in one trial, in a fresh working directory.
    pub fn run_single(&self, q: &SuiteQuestion, trial: usize) -> Result<SingleOutcome, RunError> {
        let dir = self.run_dir(trial, &q.spec.id);
        if dir.exists() {
            fs::remove_dir_all(&dir)?;
        }
        fs::create_dir_all(&dir)?;
        let working_dir = dir.canonicalize()?;
        let wd_text = working_dir.to_string_lossy().into_owned();
        let invalid = |reason: String| SingleOutcome {
            run: None,
            score: QuestionScore::invalid(&q.spec.id, reason.replace(&wd_text, "{working_dir}")),
            incomplete: Some(reason.replace(&wd_text, "{working_dir}")),
        };

        let roots = PromptRoots {
            dataset_root: self.dataset_root.clone(),
            working_dir: working_dir.clone(),
            metadata_root: Some(self.metadata_root.clone()),
        };
        let prompt = match materialize_prompt(&q.spec, &roots) {
            Ok(p) => p,
            Err(e) => return Ok(invalid(e.to_string())),
        };
        let adapter = match self.adapter(q, trial, &working_dir) {
            Ok(a) => a,
            Err(e) => return Ok(invalid(e)),
        };
        let mut agent = match Agent::new(self.agent_config(trial, &q.spec.id), adapter, Arc::clone(&self.registry), &working_dir) {
            Ok(a) => a,
            Err(e) => return Ok(invalid(e.to_string())),
        };
        tracing::info!(trial, question = %q.spec.id, mode = %self.config.mode, "run started");
        let run = agent.run_query(&prompt);
        let mut score = evaluate_answer(&working_dir.join(ANSWER_FILE), &q.truth, &q.spec);
        score.invalid_reason = score.invalid_reason.map(|r| r.replace(&wd_text, "{working_dir}"));
        let (run, incomplete) = match run {
            Ok(run) => {
                let incomplete = if run.terminated_by == Termination::FatalError {
                    Some(run.fatal_error.clone().unwrap_or_else(|| "fatal error".into()))
                } else if run.time_budget_exceeded {
                    Some(format!("time budget of {:?} exceeded", self.config.question_budget))
                } else {
                    None
                };
                (Some(run), incomplete)
            }
            Err(e) => (None, Some(e.to_string())),
        };
        let incomplete = incomplete.map(|r| r.replace(&wd_text, "{working_dir}"));
        tracing::info!(trial, question = %q.spec.id, score = score.score, "run finished");
        Ok(SingleOutcome { run, score, incomplete })
    }

    /// All trials, questions in parallel within a trial. Writes `report.json`.
    pub fn run_benchmark(&self) -> Result<BenchmarkReport, RunError> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.config.parallelism)
            .build()
            .map_err(|e| RunError::Config(format!("cannot start worker pool: {e}")))?;
        let mut scored = Vec::new();
        let mut incomplete_runs = Vec::new();
        for trial in 1..=self.config.trials {
            let outcomes: Vec<Result<SingleOutcome, RunError>> =
                pool.install(|| self.suite.questions.par_iter().map(|q| self.run_single(q, trial)).collect());
            for (q, outcome) in self.suite.questions.iter().zip(outcomes) {
                let outcome = outcome?;
                if let Some(reason) = outcome.incomplete {
                    incomplete_runs.push(IncompleteRun { trial, question_id: q.spec.id.clone(), reason });
                }
                scored.push(ScoredQuestion { trial, category: q.category, score: outcome.score });
            }
        }
        let report = aggregate(scored).map_err(|e| RunError::Config(e.to_string()))?;
        let out = BenchmarkReport { mode: self.config.mode, seed: self.config.seed, report, incomplete_runs };
        let text = serde_json::to_string_pretty(&out).expect("report serializes") + "\n";
        fs::write(self.output_dir.join(REPORT_FILE), text)?;
        Ok(out)
    }
}

/// Prepares and runs a benchmark in one call.
pub fn run_benchmark(config: RunConfig) -> Result<BenchmarkReport, RunError> {
    Runner::prepare(config)?.run_benchmark()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_differ_by_trial_and_question() {
        let a = question_seed(42, 1, "q1");
        assert_eq!(a, question_seed(42, 1, "q1"));
        assert_ne!(a, question_seed(42, 2, "q1"));
        assert_ne!(a, question_seed(42, 1, "q2"));
        assert_ne!(a, question_seed(7, 1, "q1"));
    }

    #[test]
    fn adapter_spec_parses() {
        assert_eq!("replay:/x".parse::<AdapterSpec>().unwrap(), AdapterSpec::Replay("/x".into()));
        assert!("replay:".parse::<AdapterSpec>().is_err());
        assert!("local".parse::<AdapterSpec>().is_err());
    }
}
