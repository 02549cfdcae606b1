use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use pathagent_core::model::{AdapterError, ApiKey, ChatMessage, ModelAdapter, ModelConfig, Role, WireAdapter, CORRECTIVE_MESSAGE};
use serde_json::{json, Value};

struct Request {
    headers: Vec<String>,
    body: Value,
}

/// Serves the scripted `(status, body)` responses in order, one per connection.
fn stub_server(responses: Vec<(u16, String)>) -> (String, Arc<Mutex<Vec<Request>>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1", listener.local_addr().unwrap());
    let seen = Arc::new(Mutex::new(Vec::new()));
    let log = Arc::clone(&seen);
    thread::spawn(move || {
        for (status, body) in responses {
            let (stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream);
            let mut headers = Vec::new();
            let mut len = 0;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                let line = line.trim_end().to_string();
                if line.is_empty() {
                    break;
                }
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    len = v.trim().parse().unwrap();
                }
                headers.push(line);
            }
            let mut buf = vec![0; len];
            reader.read_exact(&mut buf).unwrap();
            log.lock().unwrap().push(Request { headers, body: serde_json::from_slice(&buf).unwrap() });
            let mut stream = reader.into_inner();
            let reply = format!(
                "HTTP/1.1 {status} X\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
                body.len()
            );
            stream.write_all(reply.as_bytes()).unwrap();
        }
    });
    (url, seen)
}

fn completion(content: &str) -> String {
    json!({"choices": [{"index": 0, "message": {"role": "assistant", "content": content}}]}).to_string()
}

fn config(url: &str, max_retries: u32) -> ModelConfig {
    let mut c = ModelConfig::new(url, "test-model");
    c.max_retries = max_retries;
    c.backoff_base = Duration::from_millis(1);
    c.backoff_max = Duration::from_millis(5);
    c.request_timeout = Duration::from_secs(10);
    c
}

fn transcript() -> Vec<ChatMessage> {
    vec![
        ChatMessage::new(Role::System, "sys"),
        ChatMessage::new(Role::User, "count the slides"),
        ChatMessage::new(Role::Assistant, r#"{"thought":"t","code":"print(1)"}"#),
        ChatMessage::new(Role::Observation, "Execution logs:\n1\n"),
    ]
}

const GOOD: &str = r#"{"thought": "list them", "code": "print(2)"}"#;

#[test]
fn rate_limit_then_success_counts_one_retry() {
    let (url, seen) = stub_server(vec![(429, "{}".into()), (200, completion(GOOD))]);
    let mut a = WireAdapter::new(config(&url, 20)).unwrap();
    let t = transcript();
    let before = t.clone();
    let out = a.complete_step(&t).unwrap();
    assert_eq!(out.thought, "list them");
    assert_eq!(out.code, "print(2)");
    assert_eq!(out.raw, GOOD);
    assert_eq!(a.last_retries(), 1);
    assert_eq!(t, before);
    let seen = seen.lock().unwrap();
    assert_eq!(seen.len(), 2);
    assert_eq!(seen[0].body, seen[1].body);
}

#[test]
fn request_body_is_openai_shaped() {
    let (url, seen) = stub_server(vec![(200, completion(GOOD))]);
    let mut c = config(&url, 0);
    c.api_key = Some(ApiKey::new("sk-test-secret"));
    let mut a = WireAdapter::new(c).unwrap();
    a.complete_step(&transcript()).unwrap();
    let seen = seen.lock().unwrap();
    let r = &seen[0];
    assert!(r.headers[0].starts_with("POST /v1/chat/completions "), "{}", r.headers[0]);
    assert!(r.headers.iter().any(|h| h.eq_ignore_ascii_case("authorization: Bearer sk-test-secret")));
    assert_eq!(r.body["model"], "test-model");
    assert_eq!(r.body["temperature"], 0.0);
    let roles: Vec<&str> = r.body["messages"].as_array().unwrap().iter().map(|m| m["role"].as_str().unwrap()).collect();
    assert_eq!(roles, ["system", "user", "assistant", "user"]);
    assert_eq!(r.body["messages"][3]["content"], "Observation:\nExecution logs:\n1\n");
    assert_eq!(r.body["response_format"]["json_schema"]["schema"]["required"], json!(["thought", "code"]));
}

#[test]
fn missing_code_without_retries_is_malformed() {
    let (url, _) = stub_server(vec![(200, completion(r#"{"thought": "no code here"}"#))]);
    let mut a = WireAdapter::new(config(&url, 0)).unwrap();
    let err = a.complete_step(&transcript()).unwrap_err();
    assert!(matches!(err, AdapterError::Malformed(_)), "{err}");
    assert!(err.to_string().starts_with("MalformedOutput"));
}

#[test]
fn malformed_reply_gets_corrective_message() {
    let bad = "I think we should list the slides.";
    let (url, seen) = stub_server(vec![(200, completion(bad)), (200, completion(GOOD))]);
    let mut a = WireAdapter::new(config(&url, 3)).unwrap();
    let t = transcript();
    a.complete_step(&t).unwrap();
    assert_eq!(a.last_retries(), 1);
    let seen = seen.lock().unwrap();
    let msgs = seen[1].body["messages"].as_array().unwrap();
    assert_eq!(msgs.len(), t.len() + 2);
    assert_eq!(msgs[t.len()], json!({"role": "assistant", "content": bad}));
    assert_eq!(msgs[t.len() + 1]["content"], format!("Observation:\n{CORRECTIVE_MESSAGE}"));
    assert_eq!(seen[0].body["messages"].as_array().unwrap().len(), t.len());
}

#[test]
fn client_errors_are_not_retried() {
    let (url, seen) = stub_server(vec![(400, "{}".into())]);
    let mut a = WireAdapter::new(config(&url, 5)).unwrap();
    let err = a.complete_step(&transcript()).unwrap_err();
    assert!(err.to_string().starts_with("TransportError: HTTP 400"), "{err}");
    assert_eq!(seen.lock().unwrap().len(), 1);
    assert_eq!(a.last_retries(), 0);
}

#[test]
fn retry_budget_is_shared_and_logged() {
    let (url, seen) = stub_server(vec![(500, "{}".into()), (503, "{}".into()), (500, "{}".into())]);
    let mut c = config(&url, 2);
    c.api_key = Some(ApiKey::new("sk-very-secret-value"));
    let logs = Arc::new(Mutex::new(Vec::<u8>::new()));
    let sink = Arc::clone(&logs);
    let subscriber = tracing_subscriber::fmt()
        .with_writer(move || SharedBuf(Arc::clone(&sink)))
        .with_ansi(false)
        .finish();
    let err = tracing::subscriber::with_default(subscriber, || {
        let mut a = WireAdapter::new(c).unwrap();
        let err = a.complete_step(&transcript()).unwrap_err();
        assert_eq!(a.last_retries(), 2);
        err
    });
    assert!(err.to_string().contains("after 3 attempts"), "{err}");
    let attempts = seen.lock().unwrap().len();
    assert_eq!(attempts, 3);
    let text = String::from_utf8(logs.lock().unwrap().clone()).unwrap();
    assert_eq!(text.matches("retrying model call").count(), attempts - 1);
    assert!(!text.contains("sk-very-secret-value"));
}

#[test]
fn debug_output_hides_key() {
    let mut c = ModelConfig::new("http://localhost", "m");
    c.api_key = Some(ApiKey::new("sk-hidden"));
    let dbg = format!("{c:?}");
    assert!(!dbg.contains("sk-hidden"));
    assert!(dbg.contains("<redacted>"));
    assert!(!serde_json::to_string(&c).unwrap().contains("sk-hidden"));
}

struct SharedBuf(Arc<Mutex<Vec<u8>>>);

impl Write for SharedBuf {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        self.0.lock().unwrap().extend_from_slice(buf);
        Ok(buf.len())
    }

    fn flush(&mut self) -> std::io::Result<()> {
        Ok(())
    }
}
