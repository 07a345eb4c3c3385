//! A local chat-completion server for tests. It speaks the OpenAI-style
//! `/v1/chat/completions` and Anthropic-style `/v1/messages` schemas, answers
//! through a caller-supplied script, and records what it saw.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::net::SocketAddr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use axum::extract::State;
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::post;
use axum::{Json, Router};
use serde_json::{json, Value};
use tokio::sync::oneshot;

/// One request as seen by the stub.
#[derive(Debug, Clone)]
pub struct StubRequest {
    /// Arrival order, from 0.
    pub index: usize,
    pub path: String,
    /// Content of the last message.
    pub prompt: String,
    pub body: Value,
    /// Credential as presented (bearer token or `x-api-key`).
    pub credential: Option<String>,
}

#[derive(Debug, Clone)]
pub struct StubReply {
    pub status: u16,
    pub text: String,
    pub delay: Duration,
}

impl StubReply {
    pub fn text(text: impl Into<String>) -> Self {
        Self {
            status: 200,
            text: text.into(),
            delay: Duration::ZERO,
        }
    }

    pub fn status(status: u16) -> Self {
        Self {
            status,
            text: String::new(),
            delay: Duration::ZERO,
        }
    }

    pub fn after(mut self, delay: Duration) -> Self {
        self.delay = delay;
        self
    }
}

type Script = dyn Fn(&StubRequest) -> StubReply + Send + Sync;

struct Shared {
    script: Box<Script>,
    arrivals: AtomicUsize,
    in_flight: AtomicUsize,
    max_in_flight: AtomicUsize,
    log: Mutex<Vec<StubRequest>>,
}

pub struct StubServer {
    addr: SocketAddr,
    shared: Arc<Shared>,
    shutdown: Option<oneshot::Sender<()>>,
    thread: Option<thread::JoinHandle<()>>,
}

impl StubServer {
    /// Starts a server on an ephemeral port, on its own thread and runtime.
    pub fn start<F>(script: F) -> Self
    where
        F: Fn(&StubRequest) -> StubReply + Send + Sync + 'static,
    {
        let shared = Arc::new(Shared {
            script: Box::new(script),
            arrivals: AtomicUsize::new(0),
            in_flight: AtomicUsize::new(0),
            max_in_flight: AtomicUsize::new(0),
            log: Mutex::new(Vec::new()),
        });
        let (addr_tx, addr_rx) = std::sync::mpsc::channel();
        let (stop_tx, stop_rx) = oneshot::channel::<()>();
        let state = shared.clone();
        let thread = thread::spawn(move || {
            let rt = tokio::runtime::Builder::new_multi_thread()
                .worker_threads(4)
                .enable_all()
                .build()
                .expect("stub runtime");
            rt.block_on(async move {
                let app = Router::new()
                    .route("/v1/chat/completions", post(openai))
                    .route("/v1/messages", post(anthropic))
                    .with_state(state);
                let listener = tokio::net::TcpListener::bind("127.0.0.1:0")
                    .await
                    .expect("bind stub");
                addr_tx.send(listener.local_addr().expect("stub addr")).ok();
                axum::serve(listener, app)
                    .with_graceful_shutdown(async {
                        stop_rx.await.ok();
                    })
                    .await
                    .expect("stub server");
            });
        });
        let addr = addr_rx.recv().expect("stub server failed to start");
        Self {
            addr,
            shared,
            shutdown: Some(stop_tx),
            thread: Some(thread),
        }
    }

    /// Always answers `text`.
    pub fn fixed(text: &str) -> Self {
        let text = text.to_string();
        Self::start(move |_| StubReply::text(text.clone()))
    }

    /// Replays canned decisions, picked by a hash of the prompt so that the
    /// same prompt always gets the same answer. Proposal prompts are accepted.
    pub fn canned(responses: Vec<String>) -> Self {
        assert!(!responses.is_empty());
        Self::start(move |req| {
            if req.prompt.contains("ACCEPT or REJECT") {
                return StubReply::text("ACCEPT");
            }
            let mut h = DefaultHasher::new();
            req.prompt.hash(&mut h);
            StubReply::text(responses[(h.finish() % responses.len() as u64) as usize].clone())
        })
    }

    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn openai_url(&self) -> String {
        format!("{}/v1/chat/completions", self.base_url())
    }

    pub fn anthropic_url(&self) -> String {
        format!("{}/v1/messages", self.base_url())
    }

    pub fn requests(&self) -> Vec<StubRequest> {
        self.shared.log.lock().expect("stub log").clone()
    }

    pub fn request_count(&self) -> usize {
        self.shared.arrivals.load(Ordering::SeqCst)
    }

    /// Highest number of requests being handled at the same time.
    pub fn max_in_flight(&self) -> usize {
        self.shared.max_in_flight.load(Ordering::SeqCst)
    }
}

impl Drop for StubServer {
    fn drop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            tx.send(()).ok();
        }
        if let Some(t) = self.thread.take() {
            t.join().ok();
        }
    }
}

fn credential(headers: &HeaderMap) -> Option<String> {
    if let Some(v) = headers.get("x-api-key") {
        return v.to_str().ok().map(String::from);
    }
    headers
        .get("authorization")
        .and_then(|v| v.to_str().ok())
        .map(|v| v.trim_start_matches("Bearer ").to_string())
}

async fn handle(
    shared: &Shared,
    path: &str,
    headers: &HeaderMap,
    body: Value,
) -> Result<String, StatusCode> {
    let index = shared.arrivals.fetch_add(1, Ordering::SeqCst);
    let now = shared.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
    shared.max_in_flight.fetch_max(now, Ordering::SeqCst);
    let prompt = body["messages"]
        .as_array()
        .and_then(|m| m.last())
        .and_then(|m| m["content"].as_str())
        .unwrap_or_default()
        .to_string();
    let req = StubRequest {
        index,
        path: path.to_string(),
        prompt,
        body,
        credential: credential(headers),
    };
    let reply = (shared.script)(&req);
    shared.log.lock().expect("stub log").push(req);
    // Hold the request open briefly so overlapping calls are observable.
    tokio::time::sleep(reply.delay.max(Duration::from_millis(5))).await;
    shared.in_flight.fetch_sub(1, Ordering::SeqCst);
    match reply.status {
        200 => Ok(reply.text),
        s => Err(StatusCode::from_u16(s).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR)),
    }
}

async fn openai(
    State(shared): State<Arc<Shared>>,
    headers: HeaderMap,
    Json(body): Json<Value>,
) -> Response {
    match handle(&shared, "/v1/chat/completions", &headers, body).await {
        Ok(text) => Json(json!({
            "id": "stub",
            "object": "chat.completion",
            "choices": [{"index": 0, "message": {"role": "assistant", "content": text}, "finish_reason": "stop"}]
        }))
        .into_response(),
        Err(status) => (status, Json(json!({"error": {"message": "stub error"}}))).into_response(),
    }
}

async fn anthropic(
    State(shared): State<Arc<Shared>>,
    headers: HeaderMap,
    Json(body): Json<Value>,
) -> Response {
    match handle(&shared, "/v1/messages", &headers, body).await {
        Ok(text) => Json(json!({
            "id": "stub",
            "type": "message",
            "role": "assistant",
            "content": [{"type": "text", "text": text}],
            "stop_reason": "end_turn"
        }))
        .into_response(),
        Err(status) => (status, Json(json!({"error": {"type": "stub_error"}}))).into_response(),
    }
}
