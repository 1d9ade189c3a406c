use std::sync::Arc;
use std::time::Duration;

use segforge_core::ContentHash;

use super::script::Script;
use super::{Backend, BackendKind, GatewayError, PromptRequest};

/// Replays canned responses keyed by (document hash, question).
pub struct ScriptedBackend {
    script: Arc<Script>,
    jitter_ms: u64,
}

impl ScriptedBackend {
    pub fn new(script: Script) -> Self {
        ScriptedBackend { script: Arc::new(script), jitter_ms: 0 }
    }

    /// Sleeps a pseudo-random 0..max_ms per request, derived from the
    /// request id, so completions finish out of order. Responses are
    /// unaffected.
    pub fn with_jitter(mut self, max_ms: u64) -> Self {
        self.jitter_ms = max_ms;
        self
    }

    pub fn script(&self) -> &Script {
        &self.script
    }
}

pub fn provider_id(hash: &ContentHash) -> String {
    format!("scripted:{}", hash.short_hex(12))
}

impl Backend for ScriptedBackend {
    fn kind(&self) -> BackendKind {
        BackendKind::Scripted
    }

    fn upload(&self, _name: &str, _bytes: &[u8], hash: &ContentHash) -> Result<String, GatewayError> {
        Ok(provider_id(hash))
    }

    fn complete(&self, req: &PromptRequest) -> Result<String, GatewayError> {
        if self.jitter_ms > 0 {
            let d = ContentHash::of(req.request_id.as_bytes());
            let n = u64::from_le_bytes(d.as_bytes()[..8].try_into().expect("8 bytes"));
            std::thread::sleep(Duration::from_micros(n % (self.jitter_ms * 1000)));
        }
        let hash = req.file.content_hash.to_hex();
        self.script
            .lookup(&hash, &req.question)
            .map(str::to_string)
            .ok_or_else(|| GatewayError::ScriptMiss { file_hash: hash, question: req.question.clone() })
    }
}
