use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use segforge_core::{ContentHash, FilingRef, MediaKind};
use serde::{Deserialize, Serialize};

/// A filing's primary document on local disk.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CachedDocument {
    #[serde(rename = "ref")]
    pub filing: FilingRef,
    pub content_hash: ContentHash,
    pub byte_length: u64,
    pub media_kind: MediaKind,
    #[serde(skip)]
    pub path: PathBuf,
}

#[derive(Debug, thiserror::Error)]
pub enum CacheError {
    #[error("cache write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("cache read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cached bytes for {0} do not match the recorded hash")]
    HashMismatch(String),
}

impl CachedDocument {
    /// Reads the bytes back and checks them against `content_hash`.
    pub fn bytes(&self) -> Result<Vec<u8>, CacheError> {
        let bytes = std::fs::read(&self.path).map_err(|source| CacheError::Read { path: self.path.clone(), source })?;
        if ContentHash::of(&bytes) != self.content_hash {
            return Err(CacheError::HashMismatch(self.filing.accession_number.clone()));
        }
        Ok(bytes)
    }
}

pub fn detect_media_kind(name: &str, bytes: &[u8]) -> MediaKind {
    let lower = name.to_ascii_lowercase();
    if lower.ends_with(".htm") || lower.ends_with(".html") {
        return MediaKind::Html;
    }
    let head = String::from_utf8_lossy(&bytes[..bytes.len().min(4096)]).to_ascii_lowercase();
    if head.contains("<html") || head.contains("<body") || head.contains("<table") {
        MediaKind::Html
    } else {
        MediaKind::SgmlText
    }
}

/// `<root>/<cik>/<accession>/<primary-doc>` plus `meta.json`.
#[derive(Debug, Clone)]
pub struct Cache {
    root: PathBuf,
}

const META: &str = "meta.json";

impl Cache {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Cache { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn dir(&self, r: &FilingRef) -> PathBuf {
        self.root.join(r.cik.to_string()).join(&r.accession_number)
    }

    /// A cached document whose bytes still hash to the recorded value.
    pub fn lookup(&self, r: &FilingRef) -> Option<CachedDocument> {
        let dir = self.dir(r);
        let meta = std::fs::read(dir.join(META)).ok()?;
        let mut doc: CachedDocument = serde_json::from_slice(&meta).ok()?;
        doc.path = dir.join(r.primary_document());
        doc.bytes().ok()?;
        Some(doc)
    }

    pub fn store(&self, r: &FilingRef, bytes: &[u8]) -> Result<CachedDocument, CacheError> {
        let dir = self.dir(r);
        std::fs::create_dir_all(&dir).map_err(|source| CacheError::Write { path: dir.clone(), source })?;
        let path = dir.join(r.primary_document());
        write_atomic(&path, bytes)?;
        let doc = CachedDocument {
            filing: r.clone(),
            content_hash: ContentHash::of(bytes),
            byte_length: bytes.len() as u64,
            media_kind: detect_media_kind(r.primary_document(), bytes),
            path,
        };
        let meta = serde_json::to_vec_pretty(&doc).expect("metadata serializes");
        write_atomic(&dir.join(META), &meta)?;
        Ok(doc)
    }
}

pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CacheError> {
    let err = |source| CacheError::Write { path: path.to_path_buf(), source };
    static SEQ: AtomicU64 = AtomicU64::new(0);
    let n = SEQ.fetch_add(1, Ordering::Relaxed);
    let tmp = path.with_extension(format!("tmp{}-{n}", std::process::id()));
    let mut f = std::fs::File::create(&tmp).map_err(err)?;
    f.write_all(bytes).map_err(err)?;
    f.sync_all().map_err(err)?;
    std::fs::rename(&tmp, path).map_err(err)
}
