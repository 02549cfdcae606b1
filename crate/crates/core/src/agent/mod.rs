//! The thought/code loop: ask the model for a step, run its code, feed the
//! observation back, until `final_answer` is called or the step cap is hit.

mod config;
mod prompt;

use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::Instant;

use pathagent_script::{run_source, Bindings, ExecutionResult};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

pub use config::{AgentConfig, Mode, CASE_STUDY_MAX_STEPS, DEFAULT_MAX_STEPS, DEFAULT_OBSERVATION_CAP};
pub use prompt::{build_system_prompt, GENERAL_INSTRUCTIONS, SPECIAL_HEADER, SPECIAL_INSTRUCTIONS, TOOLS_HEADER};

use crate::model::{ChatMessage, ModelAdapter, Role};
use crate::tools::{ToolContext, ToolRegistry};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentStep {
    /// 1-based; continues across queries while memory is retained.
    pub index: usize,
    pub thought: String,
    pub code: String,
    pub observation: String,
    pub operations_used: u64,
    pub is_final: bool,
    pub duration: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    FinalAnswer,
    StepCap,
    FatalError,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentRun {
    pub query: String,
    pub steps: Vec<AgentStep>,
    pub final_answer: Option<Value>,
    pub working_dir: PathBuf,
    pub terminated_by: Termination,
    pub total_duration: f64,
    /// Stopped between steps by [`Agent::cancel_handle`].
    #[serde(default)]
    pub cancelled: bool,
    /// Stopped between steps because the per-query time budget ran out.
    #[serde(default)]
    pub time_budget_exceeded: bool,
    #[serde(default)]
    pub fatal_error: Option<String>,
}

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("ConfigError: {0}")]
    Config(String),
    #[error("IoError: {0}")]
    Io(#[from] std::io::Error),
}

pub struct Agent {
    config: AgentConfig,
    adapter: Box<dyn ModelAdapter>,
    registry: Arc<ToolRegistry>,
    system_prompt: String,
    memory: Vec<ChatMessage>,
    steps_in_memory: usize,
    base_dir: PathBuf,
    working_dir: PathBuf,
    rotations: u32,
    cancel: Arc<AtomicBool>,
}

impl std::fmt::Debug for Agent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Agent")
            .field("mode", &self.config.mode)
            .field("working_dir", &self.working_dir)
            .field("memory_len", &self.memory.len())
            .finish()
    }
}

impl Agent {
    /// Creates an agent whose first working directory is `working_dir`
    /// (created if missing).
    pub fn new(
        config: AgentConfig,
        adapter: Box<dyn ModelAdapter>,
        registry: Arc<ToolRegistry>,
        working_dir: impl Into<PathBuf>,
    ) -> Result<Self, AgentError> {
        if config.general_instructions.trim().is_empty() {
            return Err(AgentError::Config("general instructions must not be empty".into()));
        }
        if config.mode == Mode::WithTools && registry.is_empty() {
            return Err(AgentError::Config("with_tools mode needs a non-empty tool registry".into()));
        }
        let working_dir = working_dir.into();
        fs::create_dir_all(&working_dir)?;
        let working_dir = working_dir.canonicalize()?;
        let tools = (config.mode == Mode::WithTools).then_some(&*registry);
        let system_prompt = build_system_prompt(
            &config.general_instructions,
            tools,
            config.tool_categories.as_ref(),
            &config.special_instructions,
        );
        Ok(Self {
            config,
            adapter,
            registry,
            system_prompt,
            memory: Vec::new(),
            steps_in_memory: 0,
            base_dir: working_dir.clone(),
            working_dir,
            rotations: 0,
            cancel: Arc::new(AtomicBool::new(false)),
        })
    }

    pub fn config(&self) -> &AgentConfig {
        &self.config
    }

    pub fn system_prompt(&self) -> &str {
        &self.system_prompt
    }

    pub fn working_dir(&self) -> &Path {
        &self.working_dir
    }

    /// Messages after the system prompt, carried into the next query when
    /// memory is retained.
    pub fn memory(&self) -> &[ChatMessage] {
        &self.memory
    }

    /// Setting the flag stops the running query before its next step.
    pub fn cancel_handle(&self) -> Arc<AtomicBool> {
        Arc::clone(&self.cancel)
    }

    /// Clears memory and moves to a fresh, empty working directory. Does
    /// nothing on an agent that has neither memory nor files.
    pub fn reset(&mut self) -> Result<(), AgentError> {
        let untouched = self.memory.is_empty() && dir_is_empty(&self.working_dir);
        self.memory.clear();
        self.steps_in_memory = 0;
        if untouched {
            return Ok(());
        }
        loop {
            self.rotations += 1;
            let mut name = self.base_dir.file_name().unwrap_or_default().to_os_string();
            name.push(format!(".{}", self.rotations));
            let next = self.base_dir.with_file_name(name);
            if !next.exists() {
                fs::create_dir_all(&next)?;
                self.working_dir = next;
                return Ok(());
            }
        }
    }

    pub fn run_query(&mut self, query: &str) -> Result<AgentRun, AgentError> {
        self.run_query_with(query, &mut |_| {})
    }

    /// Runs one query, calling `on_step` after each step is recorded.
    /// A cancel raised before the call stops it ahead of the first step; the flag is cleared on return.
    pub fn run_query_with(&mut self, query: &str, on_step: &mut dyn FnMut(&AgentStep)) -> Result<AgentRun, AgentError> {
        let started = Instant::now();
        let deadline = self.config.time_budget.map(|b| started + b);
        self.memory.push(ChatMessage::new(Role::User, query));

        let bindings = self.bindings();
        let mut limits = self.config.limits.clone();
        limits.working_dir = self.working_dir.clone();
        let mut steps_log = OpenOptions::new().create(true).append(true).open(self.working_dir.join("steps.jsonl"))?;

        let mut run = AgentRun {
            query: query.to_string(),
            steps: Vec::new(),
            final_answer: None,
            working_dir: self.working_dir.clone(),
            terminated_by: Termination::StepCap,
            total_duration: 0.0,
            cancelled: false,
            time_budget_exceeded: false,
            fatal_error: None,
        };

        let cap = self.config.step_limit();
        let offset = self.steps_in_memory;
        for local in 1..=cap {
            let index = offset + local;
            if self.cancel.load(Ordering::SeqCst) {
                run.cancelled = true;
                break;
            }
            if deadline.is_some_and(|d| Instant::now() >= d) {
                run.time_budget_exceeded = true;
                break;
            }
            let step_start = Instant::now();
            let transcript = self.transcript();
            let out = match self.adapter.complete_step(&transcript) {
                Ok(out) => out,
                Err(e) => {
                    tracing::warn!(step = index, error = %e, "model adapter failed");
                    run.terminated_by = Termination::FatalError;
                    run.fatal_error = Some(e.to_string());
                    break;
                }
            };
            let code = strip_fences(&out.code);

            let (observation, operations_used, answer) = if self.config.mode == Mode::LlmOnly {
                (String::new(), 0, Some(Value::String(out.thought.clone())))
            } else {
                if let Some(d) = deadline {
                    let left = d.saturating_duration_since(Instant::now());
                    limits.wall_clock_cap = Some(limits.wall_clock_cap.map_or(left, |c| c.min(left)));
                }
                let result = run_source(&code, &limits, &bindings);
                let answer = result.final_answer.as_ref().map(|v| v.to_json().unwrap_or_else(|_| Value::String(v.repr())));
                (observe(&result, self.config.observation_cap), result.operations_used, answer)
            };

            let step = AgentStep {
                index,
                thought: out.thought.clone(),
                code,
                observation: observation.clone(),
                operations_used,
                is_final: answer.is_some(),
                duration: self.elapsed(step_start),
            };
            self.memory.push(ChatMessage::new(Role::Assistant, out.raw));
            if self.config.mode != Mode::LlmOnly {
                self.memory.push(ChatMessage::new(Role::Observation, observation));
            }
            self.steps_in_memory += 1;
            writeln!(steps_log, "{}", self.redact(&serde_json::to_string(&step).expect("step serializes")))?;
            on_step(&step);
            run.steps.push(step);
            if let Some(a) = answer {
                run.final_answer = Some(a);
                run.terminated_by = Termination::FinalAnswer;
                break;
            }
        }

        self.cancel.store(false, Ordering::SeqCst);
        run.total_duration = self.elapsed(started);
        let summary = serde_json::to_string_pretty(&run).expect("run serializes");
        fs::write(self.working_dir.join("run.json"), self.redact(&summary))?;
        if self.config.reset_memory_after_query {
            self.memory.clear();
            self.steps_in_memory = 0;
        }
        Ok(run)
    }

    /// The full message list sent to the model at the next step.
    pub fn transcript(&self) -> Vec<ChatMessage> {
        let mut t = Vec::with_capacity(self.memory.len() + 1);
        t.push(ChatMessage::new(Role::System, self.system_prompt.clone()));
        t.extend(self.memory.iter().cloned());
        t
    }

    fn bindings(&self) -> Bindings {
        if self.config.mode != Mode::WithTools {
            return Bindings::new();
        }
        let ctx = ToolContext { working_dir: Some(self.working_dir.clone()) };
        self.registry.bindings(self.config.tool_categories.as_ref(), &ctx)
    }

    fn elapsed(&self, since: Instant) -> f64 {
        if self.config.record_timings {
            since.elapsed().as_secs_f64()
        } else {
            0.0
        }
    }

    /// Replaces absolute paths with placeholders in persisted text.
    fn redact(&self, text: &str) -> String {
        let mut out = text.replace(&*json_path(&self.working_dir), "{working_dir}");
        for (path, placeholder) in &self.config.redactions {
            out = out.replace(&*json_path(path), placeholder);
        }
        out
    }
}

/// A path as it appears inside a JSON string.
fn json_path(p: &Path) -> String {
    let s = serde_json::to_string(&p.to_string_lossy()).expect("string serializes");
    s[1..s.len() - 1].to_string()
}

fn dir_is_empty(dir: &Path) -> bool {
    fs::read_dir(dir).map(|mut d| d.next().is_none()).unwrap_or(true)
}

/// Removes a surrounding Markdown code fence, if present.
pub fn strip_fences(code: &str) -> String {
    let t = code.trim();
    if let Some(rest) = t.strip_prefix("```") {
        if let Some(body) = rest.strip_suffix("```") {
            let body = match body.find('\n') {
                Some(i) if body[..i].trim().chars().all(|c| c.is_ascii_alphanumeric()) => &body[i + 1..],
                _ => body,
            };
            return body.trim_end().to_string() + "\n";
        }
    }
    code.to_string()
}

/// Formats an execution result as the text fed back to the model.
pub fn observe(result: &ExecutionResult, cap: usize) -> String {
    let mut out = String::new();
    if !result.stdout.is_empty() {
        out.push_str("Execution logs:\n");
        out.push_str(&truncate_middle(&result.stdout, cap));
        if !out.ends_with('\n') {
            out.push('\n');
        }
    }
    if let Some(e) = &result.error {
        out.push_str(&format!("Error: {e}\n"));
    }
    if let Some(a) = &result.final_answer {
        out.push_str(&format!("Final answer: {}\n", a.repr()));
    }
    if out.is_empty() {
        out.push_str("Execution logs:\n(no output)\n");
    }
    out
}

/// Keeps the first and last `cap / 2` bytes of `s` (on char boundaries) and
/// notes how much was dropped in between.
pub fn truncate_middle(s: &str, cap: usize) -> String {
    if s.len() <= cap {
        return s.to_string();
    }
    let mut head = cap / 2;
    while !s.is_char_boundary(head) {
        head -= 1;
    }
    let mut tail = s.len() - (cap - cap / 2);
    while !s.is_char_boundary(tail) {
        tail += 1;
    }
    format!("{}\n[... {} bytes truncated ...]\n{}", &s[..head], tail - head, &s[tail..])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fences_are_stripped() {
        assert_eq!(strip_fences("```python\nx = 1\n```"), "x = 1\n");
        assert_eq!(strip_fences("```\nx = 1\n```"), "x = 1\n");
        assert_eq!(strip_fences("x = 1"), "x = 1");
    }

    #[test]
    fn truncation_keeps_head_and_tail() {
        let s: String = (0..100).map(|i| char::from(b'a' + (i % 26) as u8)).collect();
        let t = truncate_middle(&s, 20);
        assert!(t.starts_with(&s[..10]));
        assert!(t.ends_with(&s[90..]));
        assert!(t.contains("[... 80 bytes truncated ...]"));
        assert_eq!(truncate_middle("short", 20), "short");
    }

    #[test]
    fn truncation_respects_char_boundaries() {
        let s = "é".repeat(50);
        let t = truncate_middle(&s, 11);
        assert!(t.contains("truncated"));
    }

    #[test]
    fn mode_round_trips() {
        for m in Mode::ALL {
            assert_eq!(m.as_str().parse::<Mode>().unwrap(), m);
        }
        assert!("turbo".parse::<Mode>().is_err());
    }
}
