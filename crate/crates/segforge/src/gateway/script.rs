//! Script files for the offline backend: JSON Lines of
//! `{"file_hash", "question", "response"}` with an optional
//! `"match": "prefix"`.
//!
//! `file_hash` is the 64-hex content digest of the uploaded document, or
//! `*` for entries that apply to any document (used for retrieval-built
//! context, whose bytes depend on the index).

use std::collections::HashMap;
use std::path::Path;

use segforge_core::text::collapse_whitespace;
use serde::{Deserialize, Serialize};

pub const ANY_FILE: &str = "*";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Matcher {
    #[default]
    Exact,
    Prefix,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptEntry {
    pub file_hash: String,
    pub question: String,
    pub response: String,
    #[serde(default, rename = "match", skip_serializing_if = "is_exact")]
    pub matcher: Matcher,
}

fn is_exact(m: &Matcher) -> bool {
    *m == Matcher::Exact
}

#[derive(Debug, thiserror::Error)]
pub enum ScriptError {
    #[error("{path}:{line}: {reason}")]
    Parse { path: String, line: usize, reason: String },
    #[error("duplicate script entry for file {file_hash} and question {question:?}")]
    Duplicate { file_hash: String, question: String },
    #[error("reading {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

pub fn normalize_question(q: &str) -> String {
    collapse_whitespace(q)
}

fn normalize_prefix(q: &str) -> String {
    collapse_whitespace(q).to_lowercase()
}

/// Read-only lookup table built from script entries.
#[derive(Debug, Default, Clone)]
pub struct Script {
    exact: HashMap<(String, String), String>,
    prefix: Vec<(String, String, String)>,
}

impl Script {
    pub fn from_entries(entries: impl IntoIterator<Item = ScriptEntry>) -> Result<Script, ScriptError> {
        let mut s = Script::default();
        for e in entries {
            s.insert(e)?;
        }
        Ok(s)
    }

    fn insert(&mut self, e: ScriptEntry) -> Result<(), ScriptError> {
        let hash = e.file_hash.trim().to_ascii_lowercase();
        let dup = || ScriptError::Duplicate { file_hash: hash.clone(), question: e.question.clone() };
        match e.matcher {
            Matcher::Exact => {
                let key = (hash.clone(), normalize_question(&e.question));
                if self.exact.contains_key(&key) {
                    return Err(dup());
                }
                self.exact.insert(key, e.response);
            }
            Matcher::Prefix => {
                let p = normalize_prefix(&e.question);
                if self.prefix.iter().any(|(h, q, _)| *h == hash && *q == p) {
                    return Err(dup());
                }
                self.prefix.push((hash, p, e.response));
            }
        }
        Ok(())
    }

    pub fn parse_jsonl(text: &str, origin: &str) -> Result<Vec<ScriptEntry>, ScriptError> {
        text.lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with("//"))
            .map(|(i, l)| {
                serde_json::from_str(l).map_err(|e| ScriptError::Parse {
                    path: origin.to_string(),
                    line: i + 1,
                    reason: e.to_string(),
                })
            })
            .collect()
    }

    /// Loads every `*.jsonl` under the given files or directories, in sorted
    /// path order.
    pub fn load(paths: &[impl AsRef<Path>]) -> Result<Script, ScriptError> {
        let mut files = Vec::new();
        for p in paths {
            let p = p.as_ref();
            if p.is_dir() {
                let rd = std::fs::read_dir(p).map_err(|source| ScriptError::Io { path: p.display().to_string(), source })?;
                for e in rd.flatten() {
                    let path = e.path();
                    if path.extension().is_some_and(|x| x == "jsonl") {
                        files.push(path);
                    }
                }
            } else {
                files.push(p.to_path_buf());
            }
        }
        files.sort();
        let mut entries = Vec::new();
        for f in &files {
            let text = std::fs::read_to_string(f).map_err(|source| ScriptError::Io { path: f.display().to_string(), source })?;
            entries.extend(Self::parse_jsonl(&text, &f.display().to_string())?);
        }
        Script::from_entries(entries)
    }

    /// Exact question for this file, then a prefix for this file, then the
    /// same two against wildcard entries. Among prefixes the longest wins.
    pub fn lookup(&self, file_hash: &str, question: &str) -> Option<&str> {
        let q = normalize_question(question);
        let lq = q.to_lowercase();
        for h in [file_hash, ANY_FILE] {
            if let Some(r) = self.exact.get(&(h.to_string(), q.clone())) {
                return Some(r);
            }
            let best = self
                .prefix
                .iter()
                .filter(|(eh, p, _)| eh == h && lq.starts_with(p.as_str()))
                .max_by_key(|(_, p, _)| p.len());
            if let Some((_, _, r)) = best {
                return Some(r);
            }
        }
        None
    }

    pub fn len(&self) -> usize {
        self.exact.len() + self.prefix.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(h: &str, q: &str, r: &str, m: Matcher) -> ScriptEntry {
        ScriptEntry { file_hash: h.into(), question: q.into(), response: r.into(), matcher: m }
    }

    #[test]
    fn priority_and_whitespace() {
        let s = Script::from_entries([
            e("aa", "What  is the CIK?", "1", Matcher::Exact),
            e("aa", "what is", "prefix", Matcher::Prefix),
            e("*", "What is the CIK?", "wild", Matcher::Exact),
            e("*", "explain", "wild-prefix", Matcher::Prefix),
        ])
        .unwrap();
        assert_eq!(s.lookup("aa", "What is the\n CIK?"), Some("1"));
        assert_eq!(s.lookup("aa", "What is the name?"), Some("prefix"));
        assert_eq!(s.lookup("bb", "What is the CIK?"), Some("wild"));
        assert_eq!(s.lookup("bb", "Explain 2014"), Some("wild-prefix"));
        assert_eq!(s.lookup("bb", "nothing"), None);
    }

    #[test]
    fn duplicates_rejected() {
        let r = Script::from_entries([e("aa", "q", "1", Matcher::Exact), e("AA", "q ", "2", Matcher::Exact)]);
        assert!(matches!(r, Err(ScriptError::Duplicate { .. })));
    }

    #[test]
    fn jsonl_roundtrip() {
        let line = serde_json::to_string(&e("aa", "q", "r", Matcher::Prefix)).unwrap();
        assert!(line.contains("\"match\":\"prefix\""));
        let parsed = Script::parse_jsonl(&format!("{line}\n\n"), "t").unwrap();
        assert_eq!(parsed[0].matcher, Matcher::Prefix);
    }
}
