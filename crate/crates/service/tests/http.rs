use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::mpsc::{channel, Receiver, Sender};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant, SystemTime};

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use pathagent_core::agent::AgentConfig;
use pathagent_core::model::{AdapterError, ChatMessage, ModelAdapter, ReplayAdapter, StepOutput};
use pathagent_core::tools::full_registry;
use pathagent_service::{openapi, router, AdapterFactory, ServiceConfig, SessionStore, ROUTES};
use serde_json::{json, Value};
use tempfile::TempDir;
use tower::ServiceExt;

const TOKEN: &str = "s3cret-token-value";

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

/// Serves whatever step the test sends next; blocks until then.
struct Gate {
    rx: Receiver<StepOutput>,
    calls: Arc<AtomicUsize>,
}

impl ModelAdapter for Gate {
    fn complete_step(&mut self, _t: &[ChatMessage]) -> Result<StepOutput, AdapterError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.rx.recv().map_err(|_| AdapterError::Transport("gate closed".into()))
    }
}

#[derive(Clone)]
struct Handle {
    tx: Sender<StepOutput>,
    calls: Arc<AtomicUsize>,
}

impl Handle {
    fn send(&self, s: StepOutput) -> Result<(), std::sync::mpsc::SendError<StepOutput>> {
        self.tx.send(s)
    }

    /// Waits until the agent has asked for its `n`th step.
    async fn awaiting(&self, n: usize) {
        let deadline = Instant::now() + Duration::from_secs(5);
        while self.calls.load(Ordering::SeqCst) < n {
            assert!(Instant::now() < deadline, "agent never asked for step {n}");
            tokio::time::sleep(Duration::from_millis(2)).await;
        }
    }
}

type Gates = Arc<Mutex<Vec<Handle>>>;

fn gated() -> (AdapterFactory, Gates) {
    let gates: Gates = Arc::default();
    let g = Arc::clone(&gates);
    let factory: AdapterFactory = Arc::new(move |_wd: &Path| {
        let (tx, rx) = channel();
        let calls = Arc::new(AtomicUsize::new(0));
        g.lock().unwrap().push(Handle { tx, calls: Arc::clone(&calls) });
        Ok(Box::new(Gate { rx, calls }) as Box<dyn ModelAdapter>)
    });
    (factory, gates)
}

fn replayed(file: &str) -> AdapterFactory {
    let path = fixture(file);
    Arc::new(move |wd: &Path| {
        let a = ReplayAdapter::from_file(&path).map_err(|e| e.to_string())?;
        Ok(Box::new(a.with_substitutions([("working_dir".to_string(), wd.display().to_string())])) as Box<dyn ModelAdapter>)
    })
}

struct App {
    dir: TempDir,
    store: Arc<SessionStore>,
    router: Router,
    token: Option<String>,
}

fn app_with(adapter: AdapterFactory, token: Option<&str>, idle_ttl: Duration) -> App {
    let dir = TempDir::new().unwrap();
    let config = ServiceConfig {
        data_dir: dir.path().to_path_buf(),
        token: token.map(str::to_string),
        idle_ttl,
        agent: AgentConfig::case_study(),
        registry: Arc::new(full_registry(None)),
        adapter,
    };
    let store = Arc::new(SessionStore::new(config));
    let router = router(Arc::clone(&store));
    App { dir, store, router, token: token.map(str::to_string) }
}

fn app(adapter: AdapterFactory) -> App {
    app_with(adapter, Some(TOKEN), Duration::from_secs(3600))
}

fn step(thought: &str, code: &str) -> StepOutput {
    StepOutput::new(thought, code)
}

impl App {
    async fn send(&self, method: &str, uri: &str, body: Option<Value>, headers: &[(&str, &str)]) -> axum::response::Response {
        let mut req = Request::builder().method(method).uri(uri);
        if let Some(t) = &self.token {
            req = req.header("authorization", format!("Bearer {t}"));
        }
        for (k, v) in headers {
            req = req.header(*k, *v);
        }
        let body = body.map_or_else(Body::empty, |b| Body::from(b.to_string()));
        self.router.clone().oneshot(req.body(body).unwrap()).await.unwrap()
    }

    async fn call(&self, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
        let resp = self.send(method, uri, body, &[]).await;
        let status = resp.status();
        let bytes = resp.into_body().collect().await.unwrap().to_bytes();
        let v = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap_or(Value::Null) };
        (status, v)
    }

    async fn create(&self, body: Option<Value>) -> String {
        let (status, v) = self.call("POST", "/sessions", body).await;
        assert_eq!(status, StatusCode::CREATED, "{v}");
        v["id"].as_str().unwrap().to_string()
    }

    async fn query(&self, id: &str, q: &str) -> String {
        let (status, v) = self.call("POST", &format!("/sessions/{id}/queries"), Some(json!({ "query": q }))).await;
        assert_eq!(status, StatusCode::ACCEPTED, "{v}");
        assert_eq!(v["status"], "running");
        v["run_id"].as_str().unwrap().to_string()
    }

    async fn stream(&self, id: &str, rid: &str, headers: &[(&str, &str)], query: &str) -> Sse {
        let resp = self.send("GET", &format!("/sessions/{id}/runs/{rid}/stream{query}"), None, headers).await;
        assert_eq!(resp.status(), StatusCode::OK);
        assert!(resp.headers()["content-type"].to_str().unwrap().starts_with("text/event-stream"));
        Sse { body: resp.into_body(), buf: String::new() }
    }

    async fn wait_idle(&self, id: &str) -> Value {
        let deadline = Instant::now() + Duration::from_secs(10);
        loop {
            let (_, v) = self.call("GET", &format!("/sessions/{id}"), None).await;
            if v["status"] != "running" {
                return v;
            }
            assert!(Instant::now() < deadline, "session {id} never went idle");
            tokio::time::sleep(Duration::from_millis(10)).await;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Ev {
    id: u64,
    kind: String,
    data: Value,
}

struct Sse {
    body: Body,
    buf: String,
}

impl Sse {
    /// Next event, or None once the stream ends.
    async fn next(&mut self, wait: Duration) -> Option<Ev> {
        loop {
            if let Some(pos) = self.buf.find("\n\n") {
                let block: String = self.buf.drain(..pos + 2).collect();
                let (mut id, mut kind, mut data) = (None, None, String::new());
                for line in block.lines() {
                    if let Some(v) = line.strip_prefix("id:") {
                        id = Some(v.trim().parse().unwrap());
                    } else if let Some(v) = line.strip_prefix("event:") {
                        kind = Some(v.trim().to_string());
                    } else if let Some(v) = line.strip_prefix("data:") {
                        data.push_str(v.strip_prefix(' ').unwrap_or(v));
                    }
                }
                if let (Some(id), Some(kind)) = (id, kind) {
                    return Some(Ev { id, kind, data: serde_json::from_str(&data).unwrap() });
                }
                continue;
            }
            let frame = tokio::time::timeout(wait, self.body.frame()).await.expect("no event within the wait")?;
            if let Ok(data) = frame.unwrap().into_data() {
                self.buf.push_str(std::str::from_utf8(&data).unwrap());
            }
        }
    }

    async fn all(mut self) -> Vec<Ev> {
        let mut out = Vec::new();
        while let Some(e) = self.next(Duration::from_secs(10)).await {
            out.push(e);
        }
        out
    }
}

fn tree(root: &Path) -> BTreeMap<PathBuf, (Vec<u8>, SystemTime)> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            let meta = fs::symlink_metadata(&p).unwrap();
            if meta.is_dir() {
                stack.push(p.clone());
            }
            let bytes = if meta.is_file() { fs::read(&p).unwrap() } else { Vec::new() };
            out.insert(p, (bytes, meta.modified().unwrap()));
        }
    }
    out
}

fn working_dir(app: &App, id: &str) -> PathBuf {
    app.store.get(id).unwrap().working_dir().to_path_buf()
}

#[tokio::test(flavor = "multi_thread")]
async fn create_applies_case_study_defaults_and_overrides() {
    let app = app(replayed("report_session.json"));
    let (status, v) = app.call("POST", "/sessions", None).await;
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(v["config"]["max_steps"], 200);
    assert_eq!(v["config"]["reset_memory_after_query"], false);
    assert_eq!(v["status"], "idle");
    assert_eq!(v["memory_messages"], 0);
    assert_eq!(v["runs"], json!([]));

    let a = v["id"].as_str().unwrap().to_string();
    let b = app.create(Some(json!({ "max_steps": 20 }))).await;
    let (_, vb) = app.call("GET", &format!("/sessions/{b}"), None).await;
    assert_eq!(vb["config"]["max_steps"], 20);
    assert_ne!(a, b);
    let (da, db) = (working_dir(&app, &a), working_dir(&app, &b));
    assert_ne!(da, db);
    assert!(da.is_dir() && db.is_dir());
    assert!(da.starts_with(app.dir.path().canonicalize().unwrap()));

    let (status, v) = app.call("POST", "/sessions", Some(json!({ "max_steps": 0 }))).await;
    assert_eq!((status, v["error"].as_str()), (StatusCode::BAD_REQUEST, Some("InvalidRequest")));
    let (status, v) = app.call("POST", "/sessions", Some(json!({ "bogus": 1 }))).await;
    assert_eq!((status, v["error"].as_str()), (StatusCode::BAD_REQUEST, Some("InvalidRequest")));
}

#[tokio::test(flavor = "multi_thread")]
async fn unknown_ids_are_reported() {
    let app = app(replayed("report_session.json"));
    let (status, v) = app.call("GET", "/sessions/nope", None).await;
    assert_eq!((status, v["error"].as_str()), (StatusCode::NOT_FOUND, Some("UnknownSession")));
    let (status, v) = app.call("POST", "/sessions/nope/queries", Some(json!({"query": "x"}))).await;
    assert_eq!((status, v["error"].as_str()), (StatusCode::NOT_FOUND, Some("UnknownSession")));
    let (status, v) = app.call("GET", "/sessions/nope/artifacts", None).await;
    assert_eq!((status, v["error"].as_str()), (StatusCode::NOT_FOUND, Some("UnknownSession")));
    let id = app.create(None).await;
    let (status, v) = app.call("GET", &format!("/sessions/{id}/runs/r9"), None).await;
    assert_eq!((status, v["error"].as_str()), (StatusCode::NOT_FOUND, Some("UnknownRun")));
    let (status, v) = app.call("GET", &format!("/sessions/{id}/runs/r9/stream"), None).await;
    assert_eq!((status, v["error"].as_str()), (StatusCode::NOT_FOUND, Some("UnknownRun")));
    let (status, v) = app.call("POST", &format!("/sessions/{id}/queries"), Some(json!({"query": "  "}))).await;
    assert_eq!((status, v["error"].as_str()), (StatusCode::BAD_REQUEST, Some("InvalidRequest")));
}

#[tokio::test(flavor = "multi_thread")]
async fn live_stream_is_ordered_prompt_and_exclusive() {
    let (factory, gates) = gated();
    let app = app(factory);
    let id = app.create(None).await;
    let rid = app.query(&id, "gather the slides").await;
    assert_eq!(rid, "r1");
    let (_, v) = app.call("GET", &format!("/sessions/{id}"), None).await;
    assert_eq!(v["status"], "running");

    let (status, v) = app.call("POST", &format!("/sessions/{id}/queries"), Some(json!({"query": "again"}))).await;
    assert_eq!((status, v["error"].as_str()), (StatusCode::CONFLICT, Some("SessionBusy")));

    let mut sse = app.stream(&id, &rid, &[], "").await;
    let gate = gates.lock().unwrap()[0].clone();
    let codes = ["print(1)", "x = 2\nprint(x)", "final_answer('three')"];
    for (i, code) in codes.iter().enumerate() {
        let sent = Instant::now();
        gate.send(step(&format!("t{i}"), code)).unwrap();
        let ev = sse.next(Duration::from_secs(5)).await.unwrap();
        assert!(sent.elapsed() < Duration::from_secs(1), "step event took {:?}", sent.elapsed());
        assert_eq!(ev.id, i as u64 + 1);
        assert_eq!(ev.kind, "step");
        assert_eq!(ev.data["index"], i as u64 + 1);
        assert_eq!(ev.data["code"], *code);
    }
    let summary = sse.next(Duration::from_secs(5)).await.unwrap();
    assert_eq!((summary.id, summary.kind.as_str()), (4, "summary"));
    assert_eq!(summary.data["terminated_by"], "final_answer");
    assert_eq!(summary.data["final_answer"], "three");
    assert_eq!(summary.data["steps"].as_array().unwrap().len(), 3);
    assert!(sse.next(Duration::from_secs(5)).await.is_none());

    let (_, run) = app.call("GET", &format!("/sessions/{id}/runs/{rid}"), None).await;
    assert_eq!(run["status"], "finished");
    assert_eq!(run["steps"], 3);
    assert_eq!(run["summary"], summary.data);
    let (_, v) = app.call("GET", &format!("/sessions/{id}"), None).await;
    assert_eq!(v["status"], "idle");
}

#[tokio::test(flavor = "multi_thread")]
async fn late_subscribers_replay_and_resume() {
    let app = app(replayed("report_session.json"));
    let id = app.create(None).await;
    let rid = app.query(&id, "write a report").await;
    app.wait_idle(&id).await;

    let full = app.stream(&id, &rid, &[], "").await.all().await;
    let kinds: Vec<&str> = full.iter().map(|e| e.kind.as_str()).collect();
    assert_eq!(kinds, ["step", "step", "step", "summary"]);
    assert_eq!(full.iter().map(|e| e.id).collect::<Vec<_>>(), [1, 2, 3, 4]);
    let idx: Vec<u64> = full[..3].iter().map(|e| e.data["index"].as_u64().unwrap()).collect();
    assert_eq!(idx, [1, 2, 3]);
    assert_eq!(full[3].data["steps"].as_array().unwrap().len(), 3);

    let again = app.stream(&id, &rid, &[], "").await.all().await;
    assert_eq!(again, full);
    let resumed = app.stream(&id, &rid, &[("last-event-id", "2")], "").await.all().await;
    assert_eq!(resumed, full[2..]);
    let resumed = app.stream(&id, &rid, &[], "?last_event_id=3").await.all().await;
    assert_eq!(resumed, full[3..]);
    let resumed = app.stream(&id, &rid, &[("last-event-id", "4")], "").await.all().await;
    assert!(resumed.is_empty());
}

#[tokio::test(flavor = "multi_thread")]
async fn resume_mid_run_then_live_tail() {
    let (factory, gates) = gated();
    let app = app(factory);
    let id = app.create(None).await;
    let rid = app.query(&id, "q").await;
    let gate = gates.lock().unwrap()[0].clone();
    let mut first = app.stream(&id, &rid, &[], "").await;
    gate.send(step("a", "print('a')")).unwrap();
    let e1 = first.next(Duration::from_secs(5)).await.unwrap();
    gate.send(step("b", "print('b')")).unwrap();
    let e2 = first.next(Duration::from_secs(5)).await.unwrap();
    drop(first);

    let mut second = app.stream(&id, &rid, &[("last-event-id", "1")], "").await;
    assert_eq!(second.next(Duration::from_secs(5)).await.unwrap(), e2);
    gate.send(step("c", "final_answer(3)")).unwrap();
    let e3 = second.next(Duration::from_secs(5)).await.unwrap();
    assert_eq!(e3.data["index"], 3);
    assert_eq!(second.next(Duration::from_secs(5)).await.unwrap().kind, "summary");
    assert_eq!(e1.data["index"], 1);
}

#[tokio::test(flavor = "multi_thread")]
async fn disconnected_client_does_not_affect_the_run() {
    let (factory, gates) = gated();
    let app = app(factory);
    let id = app.create(None).await;
    let rid = app.query(&id, "q").await;
    let gate = gates.lock().unwrap()[0].clone();
    let mut sse = app.stream(&id, &rid, &[], "").await;
    gate.send(step("a", "print(1)")).unwrap();
    sse.next(Duration::from_secs(5)).await.unwrap();
    drop(sse);
    gate.send(step("b", "print(2)")).unwrap();
    gate.send(step("c", "final_answer('ok')")).unwrap();
    app.wait_idle(&id).await;
    let events = app.stream(&id, &rid, &[], "").await.all().await;
    assert_eq!(events.len(), 4);
    assert_eq!(events[3].data["final_answer"], "ok");
    assert_eq!(events[3].data["cancelled"], false);
}

#[tokio::test(flavor = "multi_thread")]
async fn many_subscribers_see_the_same_events() {
    let (factory, gates) = gated();
    let app = app(factory);
    let id = app.create(None).await;
    let rid = app.query(&id, "q").await;
    let gate = gates.lock().unwrap()[0].clone();
    let subs: Vec<Sse> = futures::future::join_all((0..4).map(|_| app.stream(&id, &rid, &[], ""))).await;
    let readers: Vec<_> = subs.into_iter().map(|s| tokio::spawn(s.all())).collect();
    for code in ["print(1)", "print(2)", "final_answer(3)"] {
        gate.send(step("t", code)).unwrap();
    }
    let mut seen = Vec::new();
    for r in readers {
        seen.push(r.await.unwrap());
    }
    assert_eq!(seen[0].len(), 4);
    assert!(seen.iter().all(|s| s == &seen[0]));
}

#[tokio::test(flavor = "multi_thread")]
async fn follow_up_queries_continue_indexes_and_memory() {
    let app = app(replayed("report_session.json"));
    let id = app.create(None).await;
    let r1 = app.query(&id, "gather and write a report").await;
    let after1 = app.wait_idle(&id).await;
    assert_eq!(after1["memory_messages"], 1 + 2 * 3);

    let r2 = app.query(&id, "now summarise the report").await;
    assert_eq!(r2, "r2");
    let after2 = app.wait_idle(&id).await;
    assert_eq!(after2["memory_messages"], 7 + 1 + 2 * 2);
    assert_eq!(after2["runs"], json!([r1, r2]));

    let events = app.stream(&id, &r2, &[], "").await.all().await;
    let idx: Vec<u64> = events.iter().filter(|e| e.kind == "step").map(|e| e.data["index"].as_u64().unwrap()).collect();
    assert_eq!(idx, [4, 5]);
    let summary = &events.last().unwrap().data;
    assert_eq!(summary["final_answer"], "# Findings");
    assert_eq!(summary["working_dir"], "{working_dir}");
}

#[tokio::test(flavor = "multi_thread")]
async fn payloads_never_carry_the_working_dir() {
    let app = app(replayed("report_session.json"));
    let id = app.create(None).await;
    let rid = app.query(&id, "write a report").await;
    app.wait_idle(&id).await;
    let wd = working_dir(&app, &id).display().to_string();
    for e in app.stream(&id, &rid, &[], "").await.all().await {
        assert!(!e.data.to_string().contains(&wd), "{}", e.data);
    }
    let (_, run) = app.call("GET", &format!("/sessions/{id}/runs/{rid}"), None).await;
    assert!(!run.to_string().contains(&wd));
    assert!(run["summary"]["steps"][1]["code"].as_str().unwrap().contains("{working_dir}/report.md"));
}

#[tokio::test(flavor = "multi_thread")]
async fn artifacts_are_listed_served_and_confined() {
    let app = app(replayed("report_session.json"));
    let fresh = app.create(None).await;
    let (status, v) = app.call("GET", &format!("/sessions/{fresh}/artifacts"), None).await;
    assert_eq!((status, v), (StatusCode::OK, json!([])));

    let id = app.create(None).await;
    app.query(&id, "write a report").await;
    app.wait_idle(&id).await;
    let wd = working_dir(&app, &id);
    fs::create_dir(wd.join("figs")).unwrap();
    fs::write(wd.join("figs/mask.png"), [0x89, b'P', b'N', b'G']).unwrap();
    std::os::unix::fs::symlink("/etc", wd.join("etc_link")).unwrap();
    fs::write(app.dir.path().join("outside.txt"), "secret").unwrap();

    let (status, v) = app.call("GET", &format!("/sessions/{id}/artifacts"), None).await;
    assert_eq!(status, StatusCode::OK);
    let paths: Vec<&str> = v.as_array().unwrap().iter().map(|a| a["path"].as_str().unwrap()).collect();
    assert_eq!(paths, ["figs/mask.png", "report.md", "run.json", "steps.jsonl"]);
    let report = &v.as_array().unwrap()[1];
    let on_disk = fs::read(wd.join("report.md")).unwrap();
    assert_eq!(report["size"], on_disk.len() as u64);
    assert!(report["modified"].as_u64().unwrap() > 1_600_000_000);

    let before = tree(app.dir.path());
    let resp = app.send("GET", &format!("/sessions/{id}/artifacts/report.md"), None, &[]).await;
    assert_eq!(resp.status(), StatusCode::OK);
    assert!(resp.headers()["content-type"].to_str().unwrap().starts_with("text/markdown"));
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    assert_eq!(&bytes[..], &on_disk[..]);
    assert!(String::from_utf8_lossy(&bytes).starts_with("# Findings"));

    let resp = app.send("GET", &format!("/sessions/{id}/artifacts/figs/mask.png"), None, &[]).await;
    assert_eq!(resp.headers()["content-type"], "image/png");

    for bad in ["../x", "..%2Foutside.txt", "%2e%2e/outside.txt", "figs/../../outside.txt", "etc_link/hostname", "%2Fetc%2Fhostname"] {
        let (status, v) = app.call("GET", &format!("/sessions/{id}/artifacts/{bad}"), None).await;
        assert_eq!((status, v["error"].as_str()), (StatusCode::BAD_REQUEST, Some("PathEscape")), "{bad}");
    }
    let (status, v) = app.call("GET", &format!("/sessions/{id}/artifacts/missing.txt"), None).await;
    assert_eq!((status, v["error"].as_str()), (StatusCode::NOT_FOUND, Some("NotFound")));
    let (status, _) = app.call("GET", &format!("/sessions/{id}/artifacts/figs"), None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    app.call("GET", &format!("/sessions/{id}/artifacts"), None).await;
    assert_eq!(tree(app.dir.path()), before);
}

#[tokio::test(flavor = "multi_thread")]
async fn stop_cancels_between_steps() {
    let (factory, gates) = gated();
    let app = app(factory);
    let id = app.create(None).await;
    let (status, v) = app.call("POST", &format!("/sessions/{id}/stop"), None).await;
    assert_eq!((status, v), (StatusCode::ACCEPTED, json!({"stopping": false})));

    let rid = app.query(&id, "q").await;
    let gate = gates.lock().unwrap()[0].clone();
    let mut sse = app.stream(&id, &rid, &[], "").await;
    gate.send(step("a", "print(1)")).unwrap();
    sse.next(Duration::from_secs(5)).await.unwrap();
    gate.awaiting(2).await;
    let (status, v) = app.call("POST", &format!("/sessions/{id}/stop"), None).await;
    assert_eq!((status, v), (StatusCode::ACCEPTED, json!({"stopping": true})));
    gate.send(step("b", "print(2)")).unwrap();
    let second = sse.next(Duration::from_secs(5)).await.unwrap();
    assert_eq!(second.data["index"], 2);
    let summary = sse.next(Duration::from_secs(5)).await.unwrap();
    assert_eq!(summary.kind, "summary");
    assert_eq!(summary.data["cancelled"], true);
    assert_eq!(summary.data["terminated_by"], "step_cap");
    assert_eq!(summary.data["steps"].as_array().unwrap().len(), 2);

    let rid = app.query(&id, "next").await;
    gate.send(step("c", "final_answer(1)")).unwrap();
    app.wait_idle(&id).await;
    let events = app.stream(&id, &rid, &[], "").await.all().await;
    assert_eq!(events.last().unwrap().data["cancelled"], false);
    assert_eq!(events[0].data["index"], 3);
}

#[tokio::test(flavor = "multi_thread")]
async fn delete_closes_and_archives() {
    let app = app(replayed("report_session.json"));
    let id = app.create(None).await;
    app.query(&id, "write a report").await;
    app.wait_idle(&id).await;
    let wd = working_dir(&app, &id);

    let (status, _) = app.call("DELETE", &format!("/sessions/{id}"), None).await;
    assert_eq!(status, StatusCode::NO_CONTENT);
    let archived = app.dir.path().join("archive").join(&id);
    assert!(archived.join("report.md").is_file());
    assert!(!wd.exists());
    let (_, v) = app.call("GET", &format!("/sessions/{id}"), None).await;
    assert_eq!(v["status"], "closed");
    for (method, uri, body) in [
        ("POST", format!("/sessions/{id}/queries"), Some(json!({"query": "more"}))),
        ("GET", format!("/sessions/{id}/artifacts"), None),
        ("GET", format!("/sessions/{id}/artifacts/report.md"), None),
        ("POST", format!("/sessions/{id}/stop"), None),
    ] {
        let (status, v) = app.call(method, &uri, body).await;
        assert_eq!((status, v["error"].as_str()), (StatusCode::GONE, Some("SessionClosed")), "{uri}");
    }
    let (status, _) = app.call("DELETE", &format!("/sessions/{id}"), None).await;
    assert_eq!(status, StatusCode::NO_CONTENT);
}

#[tokio::test(flavor = "multi_thread")]
async fn delete_while_running_cancels_then_archives() {
    let (factory, gates) = gated();
    let app = app(factory);
    let id = app.create(None).await;
    let rid = app.query(&id, "q").await;
    let (status, _) = app.call("DELETE", &format!("/sessions/{id}"), None).await;
    assert_eq!(status, StatusCode::NO_CONTENT);
    let gate = gates.lock().unwrap()[0].clone();
    let _ = gate.send(step("a", "print(1)"));
    let events = app.stream(&id, &rid, &[], "").await.all().await;
    let summary = &events.last().unwrap().data;
    assert_eq!(summary["cancelled"], true);
    assert!(summary["steps"].as_array().unwrap().len() <= 1);
    let archived = app.dir.path().join("archive").join(&id);
    let deadline = Instant::now() + Duration::from_secs(5);
    while !archived.is_dir() {
        assert!(Instant::now() < deadline, "archive never appeared");
        tokio::time::sleep(Duration::from_millis(10)).await;
    }
}

#[tokio::test(flavor = "multi_thread")]
async fn idle_sessions_expire() {
    let (factory, gates) = gated();
    let app = app_with(factory, None, Duration::ZERO);
    let idle = app.create(None).await;
    let busy = app.create(None).await;
    app.query(&busy, "q").await;
    let closed = app.store.sweep_idle();
    assert_eq!(closed, std::slice::from_ref(&idle));
    assert!(app.dir.path().join("archive").join(&idle).is_dir());
    let (_, v) = app.call("GET", &format!("/sessions/{busy}"), None).await;
    assert_eq!(v["status"], "running");
    gates.lock().unwrap()[1].send(step("a", "final_answer(1)")).unwrap();
    app.wait_idle(&busy).await;
    assert_eq!(app.store.sweep_idle(), [busy]);
}

#[tokio::test(flavor = "multi_thread")]
async fn sessions_run_concurrently() {
    let (factory, gates) = gated();
    let app = app(factory);
    let a = app.create(None).await;
    let b = app.create(None).await;
    let ra = app.query(&a, "qa").await;
    let rb = app.query(&b, "qb").await;
    let (ga, gb) = {
        let g = gates.lock().unwrap();
        (g[0].clone(), g[1].clone())
    };
    gb.send(step("b", "final_answer('b')")).unwrap();
    app.wait_idle(&b).await;
    let (_, v) = app.call("GET", &format!("/sessions/{a}"), None).await;
    assert_eq!(v["status"], "running");
    ga.send(step("a", "final_answer('a')")).unwrap();
    app.wait_idle(&a).await;
    let ea = app.stream(&a, &ra, &[], "").await.all().await;
    let eb = app.stream(&b, &rb, &[], "").await.all().await;
    assert_eq!(ea.last().unwrap().data["final_answer"], "a");
    assert_eq!(eb.last().unwrap().data["final_answer"], "b");
}

#[tokio::test(flavor = "multi_thread")]
async fn bearer_token_guards_session_routes() {
    let mut app = app(replayed("report_session.json"));
    let dbg = format!("{:?}", app.store.config());
    assert!(!dbg.contains(TOKEN) && dbg.contains("redacted"));

    app.token = None;
    let (status, v) = app.call("POST", "/sessions", None).await;
    assert_eq!((status, v["error"].as_str()), (StatusCode::UNAUTHORIZED, Some("Unauthorized")));
    let (status, _) = app.call("GET", "/health", None).await;
    assert_eq!(status, StatusCode::OK);
    let (status, _) = app.call("GET", "/openapi.json", None).await;
    assert_eq!(status, StatusCode::OK);
    app.token = Some("wrong".into());
    let (status, _) = app.call("POST", "/sessions", None).await;
    assert_eq!(status, StatusCode::UNAUTHORIZED);
    let resp = app.send("POST", "/sessions", None, &[("authorization", &format!("Basic {TOKEN}"))]).await;
    assert_eq!(resp.status(), StatusCode::UNAUTHORIZED);
    app.token = Some(TOKEN.into());
    let (status, _) = app.call("POST", "/sessions", None).await;
    assert_eq!(status, StatusCode::CREATED);
}

fn frozen_contract() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("openapi.json")
}

#[tokio::test(flavor = "multi_thread")]
async fn contract_document_is_frozen_and_complete() {
    let app = app(replayed("report_session.json"));
    let (status, served) = app.call("GET", "/openapi.json", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(served, openapi::document());

    let text = serde_json::to_string_pretty(&served).unwrap() + "\n";
    if std::env::var_os("PATHAGENT_FREEZE_CONTRACT").is_some() {
        fs::write(frozen_contract(), &text).unwrap();
    }
    assert_eq!(fs::read_to_string(frozen_contract()).unwrap(), text, "contract changed; rerun with PATHAGENT_FREEZE_CONTRACT=1");

    let documented: BTreeSet<(String, String)> = served["paths"]
        .as_object()
        .unwrap()
        .iter()
        .flat_map(|(p, ops)| ops.as_object().unwrap().keys().map(move |m| (m.clone(), p.clone())))
        .collect();
    let served_routes: BTreeSet<(String, String)> = ROUTES.iter().map(|(m, p)| (m.to_string(), p.to_string())).collect();
    assert_eq!(documented, served_routes);

    let schemas = served["components"]["schemas"].as_object().unwrap();
    let mut refs = Vec::new();
    collect_refs(&served, &mut refs);
    for r in refs {
        let name = r.strip_prefix("#/components/schemas/").unwrap();
        assert!(schemas.contains_key(name), "dangling {r}");
    }
    assert!(served["paths"]["/sessions/{id}/runs/{rid}/stream"]["get"]["x-events"].get("step").is_some());
}

fn collect_refs(v: &Value, out: &mut Vec<String>) {
    match v {
        Value::Object(m) => {
            if let Some(Value::String(r)) = m.get("$ref") {
                out.push(r.clone());
            }
            m.values().for_each(|x| collect_refs(x, out));
        }
        Value::Array(a) => a.iter().for_each(|x| collect_refs(x, out)),
        _ => {}
    }
}

#[tokio::test(flavor = "multi_thread")]
async fn payload_fields_match_the_contract() {
    let app = app(replayed("report_session.json"));
    let id = app.create(None).await;
    let rid = app.query(&id, "write a report").await;
    app.wait_idle(&id).await;
    let events = app.stream(&id, &rid, &[], "").await.all().await;
    let doc = openapi::document();
    let keys = |v: &Value| v.as_object().unwrap().keys().cloned().collect::<BTreeSet<_>>();
    let schema_keys = |name: &str| keys(&doc["components"]["schemas"][name]["properties"]);
    let required = |name: &str| {
        doc["components"]["schemas"][name]["required"].as_array().unwrap().iter().map(|s| s.as_str().unwrap().to_string()).collect::<BTreeSet<_>>()
    };
    for name in ["AgentStep", "AgentRun", "Session", "RunInfo"] {
        assert_eq!(required(name), schema_keys(name), "{name}");
    }
    assert_eq!(keys(&events[0].data), schema_keys("AgentStep"));
    assert_eq!(keys(&events.last().unwrap().data), schema_keys("AgentRun"));
    let (_, session) = app.call("GET", &format!("/sessions/{id}"), None).await;
    assert_eq!(keys(&session), schema_keys("Session"));
    assert_eq!(keys(&session["config"]), keys(&doc["components"]["schemas"]["Session"]["properties"]["config"]["properties"]));
    let (_, run) = app.call("GET", &format!("/sessions/{id}/runs/{rid}"), None).await;
    assert_eq!(keys(&run), schema_keys("RunInfo"));
    let (_, list) = app.call("GET", &format!("/sessions/{id}/artifacts"), None).await;
    assert_eq!(keys(&list[0]), schema_keys("Artifact"));
    let (_, err) = app.call("GET", "/sessions/none", None).await;
    assert_eq!(keys(&err), schema_keys("Error"));
}
