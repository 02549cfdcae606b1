use std::collections::BTreeSet;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Duration;

use pathagent_script::InterpreterLimits;
use serde::{Deserialize, Serialize};

use super::prompt::{GENERAL_INSTRUCTIONS, SPECIAL_INSTRUCTIONS};
use crate::tools::Category;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Answer in text only; nothing is executed.
    LlmOnly,
    /// One code block is executed, then the run ends.
    SingleShot,
    /// Code is executed and fed back until done, without tools.
    Iterative,
    /// Iterative, with the tool catalog bound and documented.
    WithTools,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::LlmOnly, Mode::SingleShot, Mode::Iterative, Mode::WithTools];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::LlmOnly => "llm_only",
            Mode::SingleShot => "single_shot",
            Mode::Iterative => "iterative",
            Mode::WithTools => "with_tools",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Mode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown mode '{s}' (expected llm_only, single_shot, iterative or with_tools)"))
    }
}

pub const DEFAULT_MAX_STEPS: usize = 20;
pub const CASE_STUDY_MAX_STEPS: usize = 200;
pub const DEFAULT_OBSERVATION_CAP: usize = 8 * 1024;

#[derive(Debug, Clone)]
pub struct AgentConfig {
    pub max_steps: usize,
    pub mode: Mode,
    /// Tool categories to bind and document; `None` means all.
    pub tool_categories: Option<BTreeSet<Category>>,
    pub general_instructions: String,
    pub special_instructions: String,
    pub reset_memory_after_query: bool,
    /// Interpreter limits; `working_dir` is replaced by the agent's own.
    pub limits: InterpreterLimits,
    /// Bytes of stdout kept in an observation (head and tail halves).
    pub observation_cap: usize,
    /// Wall-clock budget for one query.
    pub time_budget: Option<Duration>,
    /// When false, durations are recorded as zero so artifacts are reproducible.
    pub record_timings: bool,
    /// Absolute path prefixes replaced by placeholders in persisted artifacts.
    pub redactions: Vec<(PathBuf, String)>,
}

impl AgentConfig {
    pub fn new(mode: Mode) -> Self {
        Self {
            max_steps: DEFAULT_MAX_STEPS,
            mode,
            tool_categories: None,
            general_instructions: GENERAL_INSTRUCTIONS.to_string(),
            special_instructions: SPECIAL_INSTRUCTIONS.to_string(),
            reset_memory_after_query: true,
            limits: InterpreterLimits::new("."),
            observation_cap: DEFAULT_OBSERVATION_CAP,
            time_budget: None,
            record_timings: true,
            redactions: Vec::new(),
        }
    }

    /// Interactive preset: 200 steps per query and memory kept between queries.
    pub fn case_study() -> Self {
        Self { max_steps: CASE_STUDY_MAX_STEPS, reset_memory_after_query: false, ..Self::new(Mode::WithTools) }
    }

    pub fn step_limit(&self) -> usize {
        match self.mode {
            Mode::LlmOnly | Mode::SingleShot => self.max_steps.min(1),
            Mode::Iterative | Mode::WithTools => self.max_steps,
        }
    }
}
