use std::path::PathBuf;
use std::time::Duration;

#[derive(Debug, Clone)]
pub struct HttpResponse {
    pub status: u16,
    pub body: Vec<u8>,
}

#[derive(Debug, Clone, thiserror::Error)]
#[error("network error: {0}")]
pub struct TransportError(pub String);

pub trait Transport: Send + Sync {
    fn get(&self, url: &str, user_agent: &str) -> Result<HttpResponse, TransportError>;

    /// Whether requests leave the machine. Fixture transports return false.
    fn is_network(&self) -> bool;
}

/// Serves URLs from a directory laid out like the EDGAR host paths:
/// `submissions/CIK##########.json` and `Archives/edgar/data/<cik>/<acc>/<doc>`.
pub struct FixtureTransport {
    root: PathBuf,
}

impl FixtureTransport {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        FixtureTransport { root: root.into() }
    }

    fn local_path(&self, url: &str) -> Option<PathBuf> {
        let path = match url.split_once("://") {
            Some((_, rest)) => rest.split_once('/').map_or("", |(_, p)| p),
            None => url.trim_start_matches('/'),
        };
        let path = path.split(['?', '#']).next().unwrap_or("");
        if path.split('/').any(|seg| seg == "..") {
            return None;
        }
        Some(self.root.join(path))
    }
}

impl Transport for FixtureTransport {
    fn get(&self, url: &str, _user_agent: &str) -> Result<HttpResponse, TransportError> {
        let Some(path) = self.local_path(url) else {
            return Ok(HttpResponse { status: 400, body: Vec::new() });
        };
        match std::fs::read(&path) {
            Ok(body) => Ok(HttpResponse { status: 200, body }),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(HttpResponse { status: 404, body: Vec::new() }),
            Err(e) => Err(TransportError(format!("{}: {e}", path.display()))),
        }
    }

    fn is_network(&self) -> bool {
        false
    }
}

pub struct HttpTransport {
    client: reqwest::blocking::Client,
}

impl HttpTransport {
    pub fn new(timeout: Duration) -> Result<Self, TransportError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| TransportError(e.to_string()))?;
        Ok(HttpTransport { client })
    }
}

impl Transport for HttpTransport {
    fn get(&self, url: &str, user_agent: &str) -> Result<HttpResponse, TransportError> {
        let resp = self
            .client
            .get(url)
            .header(reqwest::header::USER_AGENT, user_agent)
            .send()
            .map_err(|e| TransportError(e.to_string()))?;
        let status = resp.status().as_u16();
        let body = resp.bytes().map_err(|e| TransportError(e.to_string()))?.to_vec();
        Ok(HttpResponse { status, body })
    }

    fn is_network(&self) -> bool {
        true
    }
}
