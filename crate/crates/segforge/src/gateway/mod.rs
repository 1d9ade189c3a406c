//! File-grounded prompting: upload a document once, then ask many questions
//! against its handle. Completions are returned verbatim and every exchange
//! lands in the run transcript.

pub mod live;
pub mod script;
pub mod scripted;

use std::collections::{HashMap, HashSet};
use std::io::Write;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Condvar, Mutex};
use std::time::Instant;

use segforge_core::ContentHash;
use serde::{Deserialize, Serialize};

pub use crate::config::BackendKind;
pub use live::LiveBackend;
pub use script::{Script, ScriptEntry, ScriptError};
pub use scripted::ScriptedBackend;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileHandle {
    pub provider_file_id: String,
    pub content_hash: ContentHash,
    /// Unix seconds; excluded from determinism checks.
    pub uploaded_at: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptRequest {
    pub file: FileHandle,
    pub system_preamble: String,
    pub question: String,
    pub format_rules: String,
    pub request_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Completion {
    pub request_id: String,
    pub text: String,
    pub backend: BackendKind,
    pub latency_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GatewayError {
    #[error("no script entry for file {file_hash} and question {question:?}")]
    ScriptMiss { file_hash: String, question: String },
    #[error("upload failed: {0}")]
    Upload(String),
    #[error("provider error for {request_id}: {reason}")]
    Provider { request_id: String, reason: String },
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("gateway configuration: {0}")]
    Config(String),
}

pub trait Backend: Send + Sync {
    fn kind(&self) -> BackendKind;
    fn upload(&self, name: &str, bytes: &[u8], hash: &ContentHash) -> Result<String, GatewayError>;
    fn complete(&self, req: &PromptRequest) -> Result<String, GatewayError>;
}

type Slot = (Result<Completion, GatewayError>, Option<TranscriptEntry>);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub request_id: String,
    pub file_hash: ContentHash,
    pub question: String,
    pub response: String,
    pub backend: BackendKind,
    pub latency_ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Counting semaphore for the global in-flight ceiling.
struct Slots {
    free: Mutex<usize>,
    cv: Condvar,
}

impl Slots {
    fn acquire(&self) {
        let mut n = self.free.lock().unwrap();
        while *n == 0 {
            n = self.cv.wait(n).unwrap();
        }
        *n -= 1;
    }

    fn release(&self) {
        *self.free.lock().unwrap() += 1;
        self.cv.notify_one();
    }
}

pub struct Gateway {
    backend: Arc<dyn Backend>,
    handles: Mutex<HashMap<ContentHash, FileHandle>>,
    upload_calls: AtomicUsize,
    slots: Slots,
    in_flight: AtomicUsize,
    peak: AtomicUsize,
    seen_ids: Mutex<HashSet<String>>,
    transcript: Mutex<Vec<TranscriptEntry>>,
}

impl Gateway {
    /// `max_in_flight` caps outstanding requests across all callers.
    pub fn new(backend: Arc<dyn Backend>, max_in_flight: usize) -> Self {
        Gateway {
            backend,
            handles: Mutex::new(HashMap::new()),
            upload_calls: AtomicUsize::new(0),
            slots: Slots { free: Mutex::new(max_in_flight.max(1)), cv: Condvar::new() },
            in_flight: AtomicUsize::new(0),
            peak: AtomicUsize::new(0),
            seen_ids: Mutex::new(HashSet::new()),
            transcript: Mutex::new(Vec::new()),
        }
    }

    pub fn kind(&self) -> BackendKind {
        self.backend.kind()
    }

    /// Returns the session's existing handle for these bytes or uploads
    /// them. Uploads are serialized, so concurrent callers with the same
    /// document still cause a single backend upload.
    pub fn upload(&self, name: &str, bytes: &[u8]) -> Result<FileHandle, GatewayError> {
        if bytes.is_empty() {
            return Err(GatewayError::InvalidRequest(format!("{name}: empty document")));
        }
        let hash = ContentHash::of(bytes);
        let mut handles = self.handles.lock().unwrap();
        if let Some(h) = handles.get(&hash) {
            return Ok(h.clone());
        }
        self.upload_calls.fetch_add(1, Ordering::SeqCst);
        let id = self.backend.upload(name, bytes, &hash)?;
        let handle = FileHandle { provider_file_id: id, content_hash: hash, uploaded_at: crate::edgar::unix_now() };
        handles.insert(hash, handle.clone());
        Ok(handle)
    }

    pub fn upload_calls(&self) -> usize {
        self.upload_calls.load(Ordering::SeqCst)
    }

    /// Largest number of concurrently outstanding backend calls seen so far.
    pub fn peak_in_flight(&self) -> usize {
        self.peak.load(Ordering::SeqCst)
    }

    fn check(&self, req: &PromptRequest) -> Result<(), GatewayError> {
        if req.question.trim().is_empty() {
            return Err(GatewayError::InvalidRequest(format!("{}: empty question", req.request_id)));
        }
        let known = self.handles.lock().unwrap().get(&req.file.content_hash).map(|h| h.provider_file_id.clone());
        if known.as_deref() != Some(req.file.provider_file_id.as_str()) {
            return Err(GatewayError::InvalidRequest(format!(
                "{}: file {} was not uploaded in this session",
                req.request_id, req.file.provider_file_id
            )));
        }
        if !self.seen_ids.lock().unwrap().insert(req.request_id.clone()) {
            return Err(GatewayError::InvalidRequest(format!("duplicate request id {}", req.request_id)));
        }
        Ok(())
    }

    fn run(&self, req: &PromptRequest) -> (Result<Completion, GatewayError>, Option<TranscriptEntry>) {
        if let Err(e) = self.check(req) {
            return (Err(e), None);
        }
        self.slots.acquire();
        let now = self.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
        self.peak.fetch_max(now, Ordering::SeqCst);
        let started = Instant::now();
        let result = self.backend.complete(req);
        let elapsed = started.elapsed().as_millis() as u64;
        self.in_flight.fetch_sub(1, Ordering::SeqCst);
        self.slots.release();

        let kind = self.backend.kind();
        let latency_ms = if kind == BackendKind::Scripted { 0 } else { elapsed };
        let entry = TranscriptEntry {
            request_id: req.request_id.clone(),
            file_hash: req.file.content_hash,
            question: req.question.clone(),
            response: result.as_ref().map_or_else(|_| String::new(), Clone::clone),
            backend: kind,
            latency_ms,
            error: result.as_ref().err().map(ToString::to_string),
        };
        let completion =
            result.map(|text| Completion { request_id: req.request_id.clone(), text, backend: kind, latency_ms });
        (completion, Some(entry))
    }

    pub fn ask(&self, req: &PromptRequest) -> Result<Completion, GatewayError> {
        let (result, entry) = self.run(req);
        if let Some(e) = entry {
            self.transcript.lock().unwrap().push(e);
        }
        result
    }

    /// Runs `reqs` on up to `max_in_flight` worker threads. Results and
    /// transcript entries come back in input order; one failure does not
    /// cancel the others.
    pub fn ask_many(&self, reqs: &[PromptRequest], max_in_flight: usize) -> Vec<Result<Completion, GatewayError>> {
        let workers = max_in_flight.max(1).min(reqs.len());
        let next = AtomicUsize::new(0);
        let slots: Vec<Mutex<Option<Slot>>> = reqs.iter().map(|_| Mutex::new(None)).collect();
        std::thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    if i >= reqs.len() {
                        break;
                    }
                    let out = self.run(&reqs[i]);
                    *slots[i].lock().unwrap() = Some(out);
                });
            }
        });
        let mut results = Vec::with_capacity(reqs.len());
        let mut transcript = self.transcript.lock().unwrap();
        for slot in slots {
            let (r, e) = slot.into_inner().unwrap().expect("every request ran");
            transcript.extend(e);
            results.push(r);
        }
        results
    }

    pub fn transcript(&self) -> Vec<TranscriptEntry> {
        self.transcript.lock().unwrap().clone()
    }

    pub fn write_transcript(&self, path: &Path) -> std::io::Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        for e in self.transcript.lock().unwrap().iter() {
            serde_json::to_writer(&mut f, e)?;
            f.write_all(b"\n")?;
        }
        f.flush()
    }
}
