use std::path::Path;

use serde::Deserialize;

use super::{AdapterError, ChatMessage, ModelAdapter, StepOutput};

/// Serves recorded steps in order, one per call.
#[derive(Debug, Clone)]
pub struct ReplayAdapter {
    steps: Vec<StepOutput>,
    cursor: usize,
    substitutions: Vec<(String, String)>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Recorded {
    thought: String,
    #[serde(default)]
    code: String,
}

impl ReplayAdapter {
    pub fn new(steps: Vec<StepOutput>) -> Self {
        Self { steps, cursor: 0, substitutions: Vec::new() }
    }

    /// Replaces `${name}` tokens in served thoughts and code, so recorded
    /// steps can refer to run-specific paths.
    pub fn with_substitutions(mut self, pairs: impl IntoIterator<Item = (String, String)>) -> Self {
        self.substitutions.extend(pairs.into_iter().map(|(k, v)| (format!("${{{k}}}"), v)));
        self
    }

    /// Reads a JSON array of `{"thought": ..., "code": ...}`.
    pub fn from_file(path: &Path) -> Result<Self, AdapterError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| AdapterError::Transport(format!("cannot read replay fixture {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| AdapterError::Transport(format!("{}: {e}", path.display())))
    }

    pub fn from_json(text: &str) -> Result<Self, String> {
        let recs: Vec<Recorded> = serde_json::from_str(text).map_err(|e| format!("malformed replay fixture: {e}"))?;
        Ok(Self::new(recs.into_iter().map(|r| StepOutput::new(r.thought, r.code)).collect()))
    }

    pub fn remaining(&self) -> usize {
        self.steps.len() - self.cursor
    }
}

impl ModelAdapter for ReplayAdapter {
    fn complete_step(&mut self, _transcript: &[ChatMessage]) -> Result<StepOutput, AdapterError> {
        let step = self.steps.get(self.cursor).ok_or_else(|| AdapterError::Transport("replay exhausted".into()))?;
        self.cursor += 1;
        if self.substitutions.is_empty() {
            return Ok(step.clone());
        }
        let fill = |text: &str| self.substitutions.iter().fold(text.to_string(), |t, (k, v)| t.replace(k, v));
        Ok(StepOutput::new(fill(&step.thought), fill(&step.code)))
    }
}
