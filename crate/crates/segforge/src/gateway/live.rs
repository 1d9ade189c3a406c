//! OpenAI-style Files + Responses wire protocol. Nothing outside this file
//! knows the provider schema.

use std::time::Duration;

use segforge_core::ContentHash;
use serde_json::{json, Value};

use super::{Backend, BackendKind, GatewayError, PromptRequest};
use crate::config::LlmConfig;

pub struct LiveBackend {
    client: reqwest::blocking::Client,
    api_base: String,
    api_key: String,
    model: String,
    max_retries: u32,
}

impl LiveBackend {
    pub fn new(cfg: &LlmConfig) -> Result<Self, GatewayError> {
        let api_key = std::env::var(&cfg.api_key_env)
            .map_err(|_| GatewayError::Config(format!("environment variable {} is not set", cfg.api_key_env)))?;
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(cfg.timeout_secs))
            .build()
            .map_err(|e| GatewayError::Config(e.to_string()))?;
        Ok(LiveBackend {
            client,
            api_base: cfg.api_base.trim_end_matches('/').to_string(),
            api_key,
            model: cfg.model.clone(),
            max_retries: 3,
        })
    }

    fn send(&self, build: impl Fn() -> reqwest::blocking::RequestBuilder, what: &str) -> Result<Value, String> {
        let mut attempt = 0;
        loop {
            let result = build().bearer_auth(&self.api_key).send();
            let retry = match result {
                Ok(resp) => {
                    let status = resp.status();
                    if status.is_success() {
                        return resp.json::<Value>().map_err(|e| format!("{what}: bad JSON: {e}"));
                    }
                    let body = resp.text().unwrap_or_default();
                    if status.as_u16() != 429 && !status.is_server_error() {
                        return Err(format!("{what}: HTTP {status}: {body}"));
                    }
                    format!("{what}: HTTP {status}")
                }
                Err(e) => format!("{what}: {e}"),
            };
            if attempt >= self.max_retries {
                return Err(retry);
            }
            std::thread::sleep(Duration::from_millis(500 << attempt));
            attempt += 1;
        }
    }
}

/// Concatenated `output_text` parts of a Responses API result.
pub fn response_text(v: &Value) -> Option<String> {
    if let Some(s) = v.get("output_text").and_then(Value::as_str) {
        return Some(s.to_string());
    }
    let mut out = String::new();
    for item in v.get("output")?.as_array()? {
        for part in item.get("content").and_then(Value::as_array).into_iter().flatten() {
            if part.get("type").and_then(Value::as_str) == Some("output_text") {
                out.push_str(part.get("text").and_then(Value::as_str).unwrap_or(""));
            }
        }
    }
    Some(out)
}

impl Backend for LiveBackend {
    fn kind(&self) -> BackendKind {
        BackendKind::Live
    }

    fn upload(&self, name: &str, bytes: &[u8], _hash: &ContentHash) -> Result<String, GatewayError> {
        let url = format!("{}/files", self.api_base);
        let v = self
            .send(
                || {
                    let part = reqwest::blocking::multipart::Part::bytes(bytes.to_vec()).file_name(name.to_string());
                    let form = reqwest::blocking::multipart::Form::new().text("purpose", "user_data").part("file", part);
                    self.client.post(&url).multipart(form)
                },
                "upload",
            )
            .map_err(GatewayError::Upload)?;
        v.get("id")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| GatewayError::Upload("upload response has no id".into()))
    }

    fn complete(&self, req: &PromptRequest) -> Result<String, GatewayError> {
        let url = format!("{}/responses", self.api_base);
        let body = json!({
            "model": self.model,
            "instructions": req.system_preamble,
            "temperature": 0,
            "input": [{
                "role": "user",
                "content": [
                    {"type": "input_file", "file_id": req.file.provider_file_id},
                    {"type": "input_text", "text": format!("{}\n\n{}", req.question, req.format_rules)},
                ],
            }],
        });
        let v = self
            .send(|| self.client.post(&url).json(&body), &req.request_id)
            .map_err(|reason| GatewayError::Provider { request_id: req.request_id.clone(), reason })?;
        response_text(&v).ok_or_else(|| GatewayError::Provider {
            request_id: req.request_id.clone(),
            reason: "response has no output text".into(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extracts_output_text() {
        let v = json!({"output": [{"type": "message", "content": [{"type": "output_text", "text": "320193"}]}]});
        assert_eq!(response_text(&v).as_deref(), Some("320193"));
    }
}
