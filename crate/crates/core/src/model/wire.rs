use std::thread;

use reqwest::blocking::Client;
use reqwest::StatusCode;
use serde_json::{json, Value};

use super::{parse_step, AdapterError, ChatMessage, ModelAdapter, ModelConfig, Role, StepOutput, CORRECTIVE_MESSAGE};

/// Client for an OpenAI-compatible chat-completions endpoint.
pub struct WireAdapter {
    config: ModelConfig,
    client: Client,
    last_retries: u32,
}

enum SendError {
    Retryable(String),
    Fatal(String),
}

impl WireAdapter {
    pub fn new(config: ModelConfig) -> Result<Self, AdapterError> {
        config.validate().map_err(AdapterError::Transport)?;
        let client = Client::builder()
            .timeout(config.request_timeout)
            .build()
            .map_err(|e| AdapterError::Transport(format!("cannot build HTTP client: {e}")))?;
        Ok(Self { config, client, last_retries: 0 })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    fn body<'a>(&self, messages: impl Iterator<Item = &'a ChatMessage>) -> Value {
        let messages: Vec<Value> = messages
            .map(|m| match m.role {
                Role::System => json!({"role": "system", "content": m.content}),
                Role::User => json!({"role": "user", "content": m.content}),
                Role::Assistant => json!({"role": "assistant", "content": m.content}),
                Role::Observation => json!({"role": "user", "content": format!("Observation:\n{}", m.content)}),
            })
            .collect();
        let mut body = json!({
            "model": self.config.model,
            "temperature": self.config.temperature,
            "messages": messages,
        });
        if let Some(seed) = self.config.seed {
            body["seed"] = json!(seed);
        }
        if self.config.structured_output {
            body["response_format"] = json!({
                "type": "json_schema",
                "json_schema": {
                    "name": "agent_step",
                    "strict": true,
                    "schema": {
                        "type": "object",
                        "properties": {"thought": {"type": "string"}, "code": {"type": "string"}},
                        "required": ["thought", "code"],
                        "additionalProperties": false
                    }
                }
            });
        }
        body
    }

    fn send(&self, body: &Value) -> Result<String, SendError> {
        let mut req = self.client.post(self.config.chat_url()).json(body);
        if let Some(key) = &self.config.api_key {
            req = req.bearer_auth(key.expose());
        }
        let resp = req.send().map_err(|e| {
            let e = e.without_url();
            if e.is_builder() {
                SendError::Fatal(e.to_string())
            } else {
                SendError::Retryable(e.to_string())
            }
        })?;
        let status = resp.status();
        if status == StatusCode::TOO_MANY_REQUESTS || status == StatusCode::REQUEST_TIMEOUT || status.is_server_error() {
            return Err(SendError::Retryable(format!("HTTP {status}")));
        }
        if !status.is_success() {
            return Err(SendError::Fatal(format!("HTTP {status}")));
        }
        let v: Value = resp.json().map_err(|e| SendError::Retryable(format!("unreadable response body: {}", e.without_url())))?;
        match v.pointer("/choices/0/message/content") {
            Some(Value::String(s)) => Ok(s.clone()),
            _ => Ok(String::new()),
        }
    }
}

impl ModelAdapter for WireAdapter {
    fn complete_step(&mut self, transcript: &[ChatMessage]) -> Result<StepOutput, AdapterError> {
        let mut corrections: Vec<ChatMessage> = Vec::new();
        let mut attempt = 0u32;
        loop {
            let body = self.body(transcript.iter().chain(corrections.iter()));
            let failure = match self.send(&body) {
                Ok(content) => match parse_step(&content) {
                    Ok(step) => {
                        self.last_retries = attempt;
                        return Ok(step);
                    }
                    Err(why) => {
                        if attempt >= self.config.max_retries {
                            self.last_retries = attempt;
                            return Err(AdapterError::Malformed(why));
                        }
                        corrections.push(ChatMessage::new(Role::Assistant, content));
                        corrections.push(ChatMessage::new(Role::Observation, CORRECTIVE_MESSAGE));
                        why
                    }
                },
                Err(SendError::Fatal(msg)) => {
                    self.last_retries = attempt;
                    return Err(AdapterError::Transport(msg));
                }
                Err(SendError::Retryable(msg)) => {
                    if attempt >= self.config.max_retries {
                        self.last_retries = attempt;
                        return Err(AdapterError::Transport(format!("{msg} (after {} attempts)", attempt + 1)));
                    }
                    thread::sleep(self.config.backoff(attempt));
                    msg
                }
            };
            attempt += 1;
            tracing::warn!(retry = attempt, cause = %failure, "retrying model call");
        }
    }

    fn last_retries(&self) -> u32 {
        self.last_retries
    }
}
