//! EDGAR access: resolve a firm-year to its 10-K, fetch the primary
//! document under a rate limit, and keep it in a content-addressed cache.

pub mod cache;
pub mod clock;
pub mod limiter;
pub mod transport;

use std::collections::HashMap;
use std::sync::{Arc, Mutex};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use segforge_core::filing::{dashed_accession, is_accession_number, EARLIEST_FISCAL_YEAR};
use segforge_core::FilingRef;
use serde::Deserialize;

pub use cache::{Cache, CacheError, CachedDocument};
pub use clock::{Clock, FakeClock, SystemClock};
pub use limiter::RateLimiter;
pub use transport::{FixtureTransport, HttpResponse, HttpTransport, Transport, TransportError};

use crate::config::EdgarConfig;

#[derive(Debug, thiserror::Error)]
pub enum EdgarError {
    #[error("no 10-K found for CIK {cik} fiscal year {fiscal_year}")]
    NotFound { cik: u64, fiscal_year: i32 },
    #[error("several original 10-Ks for CIK {cik} fiscal year {fiscal_year}: {accessions:?}")]
    Ambiguous { cik: u64, fiscal_year: i32, accessions: Vec<String> },
    #[error("{url}: {reason}")]
    Network { url: String, reason: String },
    #[error("{url}: HTTP {status}")]
    Http { url: String, status: u16 },
    #[error("malformed submissions index {url}: {reason}")]
    Index { url: String, reason: String },
    #[error(transparent)]
    Cache(#[from] CacheError),
}

impl EdgarError {
    pub fn is_retryable(&self) -> bool {
        match self {
            EdgarError::Network { .. } => true,
            EdgarError::Http { status, .. } => *status == 429 || *status >= 500,
            _ => false,
        }
    }
}

#[derive(Debug, Deserialize)]
struct Submissions {
    filings: SubmissionFilings,
}

#[derive(Debug, Deserialize)]
struct SubmissionFilings {
    recent: FilingColumns,
    #[serde(default)]
    files: Vec<SubmissionFile>,
}

#[derive(Debug, Deserialize)]
struct SubmissionFile {
    name: String,
}

#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "camelCase")]
struct FilingColumns {
    accession_number: Vec<String>,
    form: Vec<String>,
    report_date: Vec<String>,
    #[serde(default)]
    filing_date: Vec<String>,
    primary_document: Vec<String>,
}

#[derive(Debug, Clone)]
struct Listing {
    accession: String,
    form: String,
    report_year: Option<i32>,
    filing_date: String,
    primary_document: String,
}

impl FilingColumns {
    fn rows(&self) -> Vec<Listing> {
        (0..self.accession_number.len())
            .map(|i| Listing {
                accession: self.accession_number[i].clone(),
                form: self.form.get(i).cloned().unwrap_or_default(),
                report_year: self.report_date.get(i).and_then(|d| d.get(..4)).and_then(|y| y.parse().ok()),
                filing_date: self.filing_date.get(i).cloned().unwrap_or_default(),
                primary_document: self.primary_document.get(i).cloned().unwrap_or_default(),
            })
            .collect()
    }
}

fn is_original_10k(form: &str) -> bool {
    matches!(form, "10-K" | "10-K405" | "10-KSB" | "10-KT")
}

fn is_amended_10k(form: &str) -> bool {
    matches!(form, "10-K/A" | "10-K405/A" | "10-KSB/A" | "10-KT/A")
}

pub fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

/// Gregorian year of a Unix timestamp.
pub fn year_of(unix_secs: u64) -> i32 {
    // Days-from-civil inverse (proleptic Gregorian).
    let z = (unix_secs / 86_400) as i64 + 719_468;
    let era = z.div_euclid(146_097);
    let doe = z - era * 146_097;
    let yoe = (doe - doe / 1460 + doe / 36_524 - doe / 146_096) / 365;
    let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    let mp = (5 * doy + 2) / 153;
    let month = if mp < 10 { mp + 3 } else { mp - 9 };
    (yoe + era * 400 + i64::from(month <= 2)) as i32
}

pub struct EdgarClient {
    transport: Arc<dyn Transport>,
    limiter: RateLimiter,
    clock: Arc<dyn Clock>,
    cache: Cache,
    user_agent: String,
    max_retries: u32,
    backoff: Duration,
    archive_base: String,
    data_base: String,
    /// Submission listings already read, per CIK.
    listings: Mutex<HashMap<u64, Vec<Listing>>>,
}

impl EdgarClient {
    pub fn new(cfg: &EdgarConfig, transport: Arc<dyn Transport>, clock: Arc<dyn Clock>) -> Self {
        let archive_base = cfg.base_url.trim_end_matches('/').to_string();
        let data_base = archive_base.replace("://www.sec.gov", "://data.sec.gov");
        EdgarClient {
            transport,
            limiter: RateLimiter::new(cfg.rate_limit_rps, clock.clone()),
            clock,
            cache: Cache::new(&cfg.cache_dir),
            user_agent: cfg.user_agent.clone(),
            max_retries: cfg.max_retries,
            backoff: Duration::from_millis(cfg.backoff_ms),
            archive_base,
            data_base,
            listings: Mutex::default(),
        }
    }

    pub fn cache(&self) -> &Cache {
        &self.cache
    }

    /// GET with exponential backoff on 429/5xx and transport failures.
    /// Network transports are rate limited; local fixtures are not. Returns
    /// the body of a 200 response.
    pub fn get(&self, url: &str) -> Result<Vec<u8>, EdgarError> {
        let mut attempt = 0;
        loop {
            if self.transport.is_network() {
                self.limiter.acquire();
            }
            let result = match self.transport.get(url, &self.user_agent) {
                Ok(r) if r.status == 200 => return Ok(r.body),
                Ok(r) => EdgarError::Http { url: url.to_string(), status: r.status },
                Err(e) => EdgarError::Network { url: url.to_string(), reason: e.0 },
            };
            if !result.is_retryable() || attempt >= self.max_retries {
                return Err(result);
            }
            self.clock.sleep(self.backoff * 2u32.saturating_pow(attempt));
            attempt += 1;
        }
    }

    fn listings(&self, cik: u64) -> Result<Vec<Listing>, EdgarError> {
        if let Some(rows) = self.listings.lock().unwrap().get(&cik) {
            return Ok(rows.clone());
        }
        let rows = self.read_listings(cik)?;
        self.listings.lock().unwrap().insert(cik, rows.clone());
        Ok(rows)
    }

    fn read_listings(&self, cik: u64) -> Result<Vec<Listing>, EdgarError> {
        let url = format!("{}/submissions/CIK{cik:010}.json", self.data_base);
        let body = match self.get(&url) {
            Err(EdgarError::Http { status: 404, .. }) => return Ok(Vec::new()),
            other => other?,
        };
        let subs: Submissions =
            serde_json::from_slice(&body).map_err(|e| EdgarError::Index { url: url.clone(), reason: e.to_string() })?;
        let mut rows = subs.filings.recent.rows();
        for f in &subs.filings.files {
            let page_url = format!("{}/submissions/{}", self.data_base, f.name);
            let body = self.get(&page_url)?;
            let cols: FilingColumns = serde_json::from_slice(&body)
                .map_err(|e| EdgarError::Index { url: page_url.clone(), reason: e.to_string() })?;
            rows.extend(cols.rows());
        }
        Ok(rows)
    }

    /// The 10-K whose period of report falls in `fiscal_year`. Originals win
    /// over amendments; an amendment is used only when no original exists.
    pub fn resolve_filing(&self, cik: u64, fiscal_year: i32) -> Result<FilingRef, EdgarError> {
        let not_found = || EdgarError::NotFound { cik, fiscal_year };
        if cik == 0 || fiscal_year < EARLIEST_FISCAL_YEAR || fiscal_year > year_of(unix_now()) {
            return Err(not_found());
        }
        let rows: Vec<Listing> =
            self.listings(cik)?.into_iter().filter(|r| r.report_year == Some(fiscal_year)).collect();
        let mut originals: Vec<&Listing> = rows.iter().filter(|r| is_original_10k(&r.form)).collect();
        originals.sort_by(|a, b| a.accession.cmp(&b.accession));
        originals.dedup_by(|a, b| a.accession == b.accession);
        let (chosen, amended) = match originals.as_slice() {
            [one] => (*one, false),
            [] => {
                let mut amendments: Vec<&Listing> = rows.iter().filter(|r| is_amended_10k(&r.form)).collect();
                amendments.sort_by(|a, b| (&a.filing_date, &a.accession).cmp(&(&b.filing_date, &b.accession)));
                (*amendments.first().ok_or_else(not_found)?, true)
            }
            many => {
                return Err(EdgarError::Ambiguous {
                    cik,
                    fiscal_year,
                    accessions: many.iter().map(|r| r.accession.clone()).collect(),
                })
            }
        };
        let accession = if is_accession_number(&chosen.accession) {
            chosen.accession.clone()
        } else {
            dashed_accession(&chosen.accession).ok_or_else(|| EdgarError::Index {
                url: format!("CIK{cik:010}"),
                reason: format!("bad accession {:?}", chosen.accession),
            })?
        };
        let compact: String = accession.chars().filter(|c| *c != '-').collect();
        Ok(FilingRef {
            cik,
            fiscal_year,
            document_url: format!("{}/Archives/edgar/data/{cik}/{compact}/{}", self.archive_base, chosen.primary_document),
            accession_number: accession,
            fetched_at: 0,
            form: chosen.form.clone(),
            amended,
        })
    }

    /// Returns the cached document, downloading it on a miss.
    pub fn fetch(&self, r: &FilingRef) -> Result<CachedDocument, EdgarError> {
        if let Some(doc) = self.cache.lookup(r) {
            return Ok(doc);
        }
        let bytes = self.get(&r.document_url)?;
        let mut stamped = r.clone();
        stamped.fetched_at = unix_now();
        Ok(self.cache.store(&stamped, &bytes)?)
    }

    pub fn uses_network(&self) -> bool {
        self.transport.is_network()
    }
}
