//! Obtaining one structured (thought, code) step from a language model.

mod config;
mod replay;
mod wire;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

pub use config::{ApiKey, ModelConfig, ENV_API_KEY, ENV_ENDPOINT, ENV_MODEL};
pub use replay::ReplayAdapter;
pub use wire::WireAdapter;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
    Observation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn new(role: Role, content: impl Into<String>) -> Self {
        Self { role, content: content.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepOutput {
    pub thought: String,
    pub code: String,
    /// The reply exactly as received.
    pub raw: String,
}

impl StepOutput {
    pub fn new(thought: impl Into<String>, code: impl Into<String>) -> Self {
        let (thought, code) = (thought.into(), code.into());
        let raw = serde_json::json!({ "thought": thought, "code": code }).to_string();
        Self { thought, code, raw }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AdapterError {
    #[error("TransportError: {0}")]
    Transport(String),
    #[error("MalformedOutput: {0}")]
    Malformed(String),
}

/// Text appended after a reply that could not be parsed.
pub const CORRECTIVE_MESSAGE: &str =
    "Your reply could not be parsed. The reply must be a single JSON object with the string fields \"thought\" and \"code\".";

pub trait ModelAdapter: Send {
    fn complete_step(&mut self, transcript: &[ChatMessage]) -> Result<StepOutput, AdapterError>;

    /// Retries spent on the most recent call (attempts minus one).
    fn last_retries(&self) -> u32 {
        0
    }
}

impl<A: ModelAdapter + ?Sized> ModelAdapter for Box<A> {
    fn complete_step(&mut self, transcript: &[ChatMessage]) -> Result<StepOutput, AdapterError> {
        (**self).complete_step(transcript)
    }

    fn last_retries(&self) -> u32 {
        (**self).last_retries()
    }
}

/// Parses a model reply into a step. Accepts surrounding prose or a fenced
/// block around the JSON object; both fields must be strings.
pub fn parse_step(raw: &str) -> Result<StepOutput, String> {
    let obj = extract_object(raw).ok_or_else(|| "reply contains no JSON object".to_string())?;
    let field = |name: &str| match obj.get(name) {
        Some(Value::String(s)) => Ok(s.clone()),
        Some(_) => Err(format!("field '{name}' must be a string")),
        None => Err(format!("missing field '{name}'")),
    };
    Ok(StepOutput { thought: field("thought")?, code: field("code")?, raw: raw.to_string() })
}

fn extract_object(raw: &str) -> Option<serde_json::Map<String, Value>> {
    if let Ok(Value::Object(o)) = serde_json::from_str(raw.trim()) {
        return Some(o);
    }
    let start = raw.find('{')?;
    let mut de = serde_json::Deserializer::from_str(&raw[start..]).into_iter::<Value>();
    match de.next() {
        Some(Ok(Value::Object(o))) => Some(o),
        _ => None,
    }
}
