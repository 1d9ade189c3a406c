//! Cross-filing chunk index with saturated-TF / IDF lexical ranking.
//!
//! Sections are cut into chunks on paragraph boundaries, chunks overlapping
//! a located segment region are flagged, and queries are scored with
//!
//! ```text
//! score(c, q) = boost(c) · Σ_t idf(t) · tf(t,c)·(k1+1) / (tf(t,c) + k1·(1 − b + b·|c|/avg|c|))
//! idf(t)      = ln(1 + (N − df(t) + 0.5) / (df(t) + 0.5))
//! ```
//!
//! over the unique query terms in first-occurrence order. Idf is always
//! positive, so scores are non-negative.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::ops::Range;

use serde::{Deserialize, Serialize};

use crate::document::ParsedFiling;
use crate::filing::SectionKey;
use crate::segment::FirmYear;
use crate::signals::locate_segment_regions;
use crate::text::tokenize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChunkConfig {
    /// Lower length bound in bytes (the last chunk of a section may be shorter).
    pub min_len: usize,
    pub max_len: usize,
}

impl Default for ChunkConfig {
    fn default() -> Self {
        ChunkConfig { min_len: 800, max_len: 1600 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankParams {
    pub k1: f64,
    pub b: f64,
    /// Multiplier applied to chunks inside a segment-disclosure region.
    pub segment_boost: f64,
}

impl Default for RankParams {
    fn default() -> Self {
        RankParams { k1: 1.2, b: 0.75, segment_boost: 1.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RetrievalError {
    #[error("invalid chunk bounds: min_len {min} must be positive and below max_len {max}")]
    ChunkBounds { min: usize, max: usize },
    #[error("context budget of {budget} bytes cannot hold any retrieved chunk (smallest needs {smallest})")]
    BudgetTooSmall { budget: usize, smallest: usize },
    #[error("unknown chunk id {0:?}")]
    UnknownChunk(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chunk {
    pub chunk_id: String,
    pub source: FirmYear,
    pub section: SectionKey,
    pub start: usize,
    pub end: usize,
    pub text: String,
    pub is_segment_region: bool,
}

/// Splits `text` into byte ranges on line boundaries. Every range except
/// the last lies within `[min_len, max_len]`; a paragraph that cannot fit is
/// cut at whitespace (or hard-cut when it has none).
pub fn chunk_ranges(text: &str, cfg: &ChunkConfig) -> Result<Vec<Range<usize>>, RetrievalError> {
    if cfg.min_len == 0 || cfg.max_len < cfg.min_len + 4 {
        return Err(RetrievalError::ChunkBounds { min: cfg.min_len, max: cfg.max_len });
    }
    let mut out = Vec::new();
    let mut cur_start = 0usize;
    let mut cur_end = 0usize;
    let mut pos = 0usize;
    for para in text.split_inclusive('\n') {
        let mut p_start = pos;
        let p_end = pos + para.len();
        pos = p_end;
        while p_start < p_end {
            let cur_len = cur_end - cur_start;
            let remaining = p_end - p_start;
            if cur_len + remaining <= cfg.max_len {
                cur_end = p_end;
                break;
            }
            if cur_len >= cfg.min_len {
                out.push(cur_start..cur_end);
                cur_start = p_start;
                cur_end = p_start;
                continue;
            }
            let cut = cut_point(text, p_start, p_end, cfg.min_len - cur_len, cfg.max_len - cur_len);
            out.push(cur_start..cut);
            cur_start = cut;
            cur_end = cut;
            p_start = cut;
        }
    }
    if cur_end > cur_start {
        out.push(cur_start..cur_end);
    }
    Ok(out)
}

/// Absolute cut position within `[start + lo, start + hi]`, preferring the
/// last whitespace boundary.
fn cut_point(text: &str, start: usize, end: usize, lo: usize, hi: usize) -> usize {
    let hi_abs = (start + hi).min(end);
    let lo_abs = (start + lo).min(hi_abs);
    let window = &text.as_bytes()[lo_abs..hi_abs];
    if let Some(i) = window.iter().rposition(|b| b.is_ascii_whitespace()) {
        return lo_abs + i + 1;
    }
    let mut cut = hi_abs;
    while cut > lo_abs && !text.is_char_boundary(cut) {
        cut -= 1;
    }
    if cut == lo_abs && !text.is_char_boundary(cut) {
        cut = hi_abs;
        while !text.is_char_boundary(cut) {
            cut += 1;
        }
    }
    cut
}

/// Chunk selection predicate. Unset fields match everything.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChunkFilter {
    #[serde(default)]
    pub ciks: Option<BTreeSet<u64>>,
    #[serde(default)]
    pub fiscal_years: Option<BTreeSet<i32>>,
    #[serde(default)]
    pub sections: Option<BTreeSet<SectionKey>>,
}

impl ChunkFilter {
    pub fn any() -> Self {
        ChunkFilter::default()
    }

    pub fn firm(cik: u64) -> Self {
        ChunkFilter { ciks: Some([cik].into_iter().collect()), ..Default::default() }
    }

    pub fn with_years(mut self, years: impl IntoIterator<Item = i32>) -> Self {
        self.fiscal_years = Some(years.into_iter().collect());
        self
    }

    pub fn with_sections(mut self, sections: impl IntoIterator<Item = SectionKey>) -> Self {
        self.sections = Some(sections.into_iter().collect());
        self
    }

    pub fn matches(&self, chunk: &Chunk) -> bool {
        self.ciks.as_ref().is_none_or(|s| s.contains(&chunk.source.cik))
            && self.fiscal_years.as_ref().is_none_or(|s| s.contains(&chunk.source.fiscal_year))
            && self.sections.as_ref().is_none_or(|s| s.contains(&chunk.section))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hit {
    pub chunk_id: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalResult {
    pub query: String,
    pub hits: Vec<Hit>,
    pub filter_used: ChunkFilter,
}

/// Term statistics for one chunk.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChunkTerms {
    pub length: usize,
    pub counts: BTreeMap<String, u32>,
}

impl ChunkTerms {
    fn of(text: &str) -> ChunkTerms {
        let tokens = tokenize(text);
        let mut counts = BTreeMap::new();
        for t in &tokens {
            *counts.entry(t.clone()).or_insert(0u32) += 1;
        }
        ChunkTerms { length: tokens.len(), counts }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChunkIndex {
    pub params: RankParams,
    pub chunks: Vec<Chunk>,
    pub terms: Vec<ChunkTerms>,
    pub doc_freq: BTreeMap<String, usize>,
    pub avg_length: f64,
}

impl ChunkIndex {
    /// Index over already-cut chunks; statistics are derived from chunk text.
    pub fn from_chunks(chunks: Vec<Chunk>, params: RankParams) -> ChunkIndex {
        let terms: Vec<ChunkTerms> = chunks.iter().map(|c| ChunkTerms::of(&c.text)).collect();
        let mut doc_freq: BTreeMap<String, usize> = BTreeMap::new();
        for t in &terms {
            for term in t.counts.keys() {
                *doc_freq.entry(term.clone()).or_insert(0) += 1;
            }
        }
        let total: usize = terms.iter().map(|t| t.length).sum();
        let avg_length = if terms.is_empty() { 0.0 } else { total as f64 / terms.len() as f64 };
        ChunkIndex { params, chunks, terms, doc_freq, avg_length }
    }

    pub fn len(&self) -> usize {
        self.chunks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chunks.is_empty()
    }

    pub fn chunk(&self, id: &str) -> Option<&Chunk> {
        self.position(id).map(|i| &self.chunks[i])
    }

    fn position(&self, id: &str) -> Option<usize> {
        self.chunks.iter().position(|c| c.chunk_id == id)
    }

    /// True when stored statistics equal a rebuild from chunk text.
    pub fn statistics_consistent(&self) -> bool {
        let rebuilt = ChunkIndex::from_chunks(self.chunks.clone(), self.params);
        rebuilt.terms == self.terms && rebuilt.doc_freq == self.doc_freq && rebuilt.avg_length == self.avg_length
    }

    pub fn idf(&self, term: &str) -> f64 {
        let n = self.chunks.len() as f64;
        let df = self.doc_freq.get(term).copied().unwrap_or(0) as f64;
        libm::log(1.0 + (n - df + 0.5) / (df + 0.5))
    }

    /// Score of one chunk (by position) for the given unique query terms.
    pub fn score_at(&self, i: usize, query_terms: &[String]) -> f64 {
        let RankParams { k1, b, segment_boost } = self.params;
        let stats = &self.terms[i];
        let norm = if self.avg_length > 0.0 { stats.length as f64 / self.avg_length } else { 0.0 };
        let mut score = 0.0;
        for term in query_terms {
            let tf = stats.counts.get(term).copied().unwrap_or(0) as f64;
            if tf == 0.0 {
                continue;
            }
            score += self.idf(term) * (tf * (k1 + 1.0)) / (tf + k1 * (1.0 - b + b * norm));
        }
        if self.chunks[i].is_segment_region {
            score *= segment_boost;
        }
        score
    }

    /// Top-`k` chunks satisfying `filter`, by descending score with ties
    /// broken by (fiscal year, chunk id). Fewer than `k` hits when the
    /// filter admits fewer chunks.
    pub fn retrieve(&self, query: &str, k: usize, filter: &ChunkFilter) -> RetrievalResult {
        let terms = query_terms(query);
        let mut scored: Vec<(usize, f64)> = (0..self.chunks.len())
            .filter(|&i| filter.matches(&self.chunks[i]))
            .map(|i| (i, self.score_at(i, &terms)))
            .collect();
        scored.sort_by(|a, b| self.rank_order(*a, *b));
        scored.truncate(k);
        RetrievalResult {
            query: query.to_string(),
            hits: scored
                .into_iter()
                .map(|(i, score)| Hit { chunk_id: self.chunks[i].chunk_id.clone(), score })
                .collect(),
            filter_used: filter.clone(),
        }
    }

    fn rank_order(&self, (ia, sa): (usize, f64), (ib, sb): (usize, f64)) -> Ordering {
        sb.partial_cmp(&sa).unwrap_or(Ordering::Equal).then_with(|| {
            let (a, b) = (&self.chunks[ia], &self.chunks[ib]);
            a.source.fiscal_year.cmp(&b.source.fiscal_year).then_with(|| a.chunk_id.cmp(&b.chunk_id))
        })
    }

    /// Packs retrieved chunks into one context block under `budget` bytes.
    ///
    /// Chunks are deduplicated (keeping their best score), selected round by
    /// round, taking each result's next-best hit in turn so every result's
    /// top hit is considered before any second hit, and emitted in
    /// (fiscal year, descending score, id) order. Truncation only happens
    /// at chunk boundaries.
    pub fn assemble_context(&self, results: &[RetrievalResult], budget: usize) -> Result<ContextBlock, RetrievalError> {
        let mut best: BTreeMap<&str, f64> = BTreeMap::new();
        for r in results {
            for h in &r.hits {
                if self.chunk(&h.chunk_id).is_none() {
                    return Err(RetrievalError::UnknownChunk(h.chunk_id.clone()));
                }
                let e = best.entry(h.chunk_id.as_str()).or_insert(h.score);
                if h.score > *e {
                    *e = h.score;
                }
            }
        }
        let mut selected: Vec<&str> = Vec::new();
        let mut used = 0usize;
        let mut smallest = usize::MAX;
        let rounds = results.iter().map(|r| r.hits.len()).max().unwrap_or(0);
        for round in 0..rounds {
            for r in results {
                let Some(h) = r.hits.get(round) else { continue };
                if selected.contains(&h.chunk_id.as_str()) {
                    continue;
                }
                let chunk = self.chunk(&h.chunk_id).expect("checked above");
                let size = rendered_len(chunk);
                smallest = smallest.min(size);
                if used + size <= budget {
                    used += size;
                    selected.push(h.chunk_id.as_str());
                }
            }
        }
        if selected.is_empty() {
            if smallest == usize::MAX {
                return Ok(ContextBlock::default());
            }
            return Err(RetrievalError::BudgetTooSmall { budget, smallest });
        }
        let mut ordered: Vec<(&Chunk, f64)> = selected
            .iter()
            .map(|id| (self.chunk(id).expect("checked above"), best[id]))
            .collect();
        ordered.sort_by(|(a, sa), (b, sb)| {
            a.source
                .fiscal_year
                .cmp(&b.source.fiscal_year)
                .then(sb.partial_cmp(sa).unwrap_or(Ordering::Equal))
                .then_with(|| a.chunk_id.cmp(&b.chunk_id))
        });
        let mut block = ContextBlock::default();
        for (chunk, _) in ordered {
            let start = block.text.len();
            block.text.push_str(&provenance_header(chunk));
            block.text.push_str(&chunk.text);
            if !chunk.text.ends_with('\n') {
                block.text.push('\n');
            }
            block.spans.push(ContextSpan { chunk_id: chunk.chunk_id.clone(), start, end: block.text.len() });
        }
        Ok(block)
    }
}

/// Unique query tokens in first-occurrence order.
pub fn query_terms(query: &str) -> Vec<String> {
    let mut seen = BTreeSet::new();
    tokenize(query).into_iter().filter(|t| seen.insert(t.clone())).collect()
}

pub fn provenance_header(chunk: &Chunk) -> String {
    alloc::format!(
        "[cik={}, fy={}, item={}]\n",
        chunk.source.cik, chunk.source.fiscal_year, chunk.section
    )
}

fn rendered_len(chunk: &Chunk) -> usize {
    provenance_header(chunk).len() + chunk.text.len() + usize::from(!chunk.text.ends_with('\n'))
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextSpan {
    pub chunk_id: String,
    pub start: usize,
    pub end: usize,
}

/// Assembled retrieval context. Spans tile `text` exactly, one per chunk.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextBlock {
    pub text: String,
    pub spans: Vec<ContextSpan>,
}

impl ContextBlock {
    pub fn chunk_ids(&self) -> impl Iterator<Item = &str> {
        self.spans.iter().map(|s| s.chunk_id.as_str())
    }

    /// The chunk that produced the byte at `offset`.
    pub fn chunk_at(&self, offset: usize) -> Option<&str> {
        self.spans
            .iter()
            .find(|s| s.start <= offset && offset < s.end)
            .map(|s| s.chunk_id.as_str())
    }
}

/// Cuts every section of every filing into chunks, flags segment regions
/// and computes term statistics.
pub fn build_index(
    filings: &[ParsedFiling],
    chunking: &ChunkConfig,
    params: RankParams,
) -> Result<ChunkIndex, RetrievalError> {
    let mut chunks = Vec::new();
    for filing in filings {
        let source = FirmYear::new(filing.filing.cik, filing.filing.fiscal_year);
        let regions = locate_segment_regions(filing);
        for section in filing.sections() {
            let mut seq = 0usize;
            for r in chunk_ranges(&section.text, chunking)? {
                let text = &section.text[r.clone()];
                if text.trim().is_empty() {
                    continue;
                }
                let (start, end) = (section.start + r.start, section.start + r.end);
                let is_segment_region = regions.iter().any(|g| g.start < end && start < g.end);
                chunks.push(Chunk {
                    chunk_id: alloc::format!(
                        "{}-{}-{}-{:03}",
                        source.cik,
                        source.fiscal_year,
                        section.key.slug(),
                        seq
                    ),
                    source,
                    section: section.key.clone(),
                    start,
                    end,
                    text: text.to_string(),
                    is_segment_region,
                });
                seq += 1;
            }
        }
    }
    Ok(ChunkIndex::from_chunks(chunks, params))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn chunk(id: &str, fy: i32, text: &str, region: bool) -> Chunk {
        Chunk {
            chunk_id: id.to_string(),
            source: FirmYear::new(8818, fy),
            section: SectionKey::FrontMatter,
            start: 0,
            end: text.len(),
            text: text.to_string(),
            is_segment_region: region,
        }
    }

    #[test]
    fn chunk_bounds_hold() {
        let para = "word ".repeat(50) + "\n";
        let text = para.repeat(40);
        let cfg = ChunkConfig { min_len: 800, max_len: 1600 };
        let ranges = chunk_ranges(&text, &cfg).unwrap();
        let n = ranges.len();
        for (i, r) in ranges.iter().enumerate() {
            let len = r.end - r.start;
            assert!(len <= cfg.max_len);
            if i + 1 < n {
                assert!(len >= cfg.min_len, "chunk {i} has {len}");
            }
        }
        assert_eq!(ranges.first().unwrap().start, 0);
        assert_eq!(ranges.last().unwrap().end, text.len());
        assert!(ranges.windows(2).all(|w| w[0].end == w[1].start));
    }

    #[test]
    fn oversized_paragraph_is_cut() {
        let text = "x".repeat(5000);
        let ranges = chunk_ranges(&text, &ChunkConfig { min_len: 100, max_len: 300 }).unwrap();
        assert!(ranges.iter().all(|r| r.end - r.start <= 300));
        assert!(chunk_ranges("a", &ChunkConfig { min_len: 10, max_len: 5 }).is_err());
    }

    #[test]
    fn k_larger_than_corpus_returns_all_sorted() {
        let idx = ChunkIndex::from_chunks(
            alloc::vec![
                chunk("a", 2020, "revenue revenue segments", false),
                chunk("b", 2021, "nothing relevant", false),
                chunk("c", 2019, "reportable segments revenue", true),
            ],
            RankParams::default(),
        );
        let r = idx.retrieve("reportable segments revenue", 10, &ChunkFilter::any());
        assert_eq!(r.hits.len(), 3);
        assert_eq!(r.hits[0].chunk_id, "c");
        assert_eq!(r.hits[2].chunk_id, "b");
        assert!(r.hits.windows(2).all(|w| w[0].score >= w[1].score));
        assert_eq!(r.hits[2].score, 0.0);
    }

    #[test]
    fn ties_break_by_year_then_id() {
        let idx = ChunkIndex::from_chunks(
            alloc::vec![chunk("z", 2020, "same text", false), chunk("y", 2020, "same text", false), chunk("x", 2021, "same text", false)],
            RankParams::default(),
        );
        let ids: Vec<String> = idx.retrieve("same", 3, &ChunkFilter::any()).hits.into_iter().map(|h| h.chunk_id).collect();
        assert_eq!(ids, ["y", "z", "x"]);
    }

    #[test]
    fn filter_is_sound() {
        let idx = ChunkIndex::from_chunks(
            alloc::vec![chunk("a", 2020, "segments", false), chunk("b", 2021, "segments", false)],
            RankParams::default(),
        );
        let r = idx.retrieve("segments", 5, &ChunkFilter::firm(8818).with_years([2021]));
        assert_eq!(r.hits.len(), 1);
        assert_eq!(r.hits[0].chunk_id, "b");
        assert!(idx.retrieve("segments", 5, &ChunkFilter::firm(1)).hits.is_empty());
    }

    #[test]
    fn context_dedups_and_orders_chronologically() {
        let idx = ChunkIndex::from_chunks(
            alloc::vec![chunk("a", 2021, "alpha segments\n", false), chunk("b", 2020, "beta segments\n", false)],
            RankParams::default(),
        );
        let r1 = idx.retrieve("alpha segments", 2, &ChunkFilter::any());
        let r2 = idx.retrieve("beta segments", 2, &ChunkFilter::any());
        let block = idx.assemble_context(&[r1, r2], 10_000).unwrap();
        let ids: Vec<&str> = block.chunk_ids().collect();
        assert_eq!(ids, ["b", "a"]);
        assert!(block.text.starts_with("[cik=8818, fy=2020, item=front_matter]\n"));
        assert_eq!(block.spans.last().unwrap().end, block.text.len());
        for off in 0..block.text.len() {
            assert!(block.chunk_at(off).is_some());
        }
    }

    #[test]
    fn budget_too_small() {
        let idx = ChunkIndex::from_chunks(alloc::vec![chunk("a", 2021, "alpha segments\n", false)], RankParams::default());
        let r = idx.retrieve("alpha", 1, &ChunkFilter::any());
        assert!(matches!(idx.assemble_context(&[r], 5), Err(RetrievalError::BudgetTooSmall { .. })));
    }

    #[test]
    fn statistics_rebuild_equal() {
        let idx = ChunkIndex::from_chunks(alloc::vec![chunk("a", 2021, "a b b c", false)], RankParams::default());
        assert!(idx.statistics_consistent());
        assert_eq!(idx.doc_freq["b"], 1);
        assert_eq!(idx.terms[0].counts["b"], 2);
    }

    proptest! {
        #[test]
        fn chunks_tile_text(words in proptest::collection::vec("[a-z]{1,12}", 1..400), breaks in proptest::collection::vec(any::<bool>(), 400)) {
            let mut text = String::new();
            for (i, w) in words.iter().enumerate() {
                text.push_str(w);
                text.push(if breaks[i] { '\n' } else { ' ' });
            }
            let cfg = ChunkConfig { min_len: 60, max_len: 150 };
            let ranges = chunk_ranges(&text, &cfg).unwrap();
            prop_assert_eq!(ranges.first().unwrap().start, 0);
            prop_assert_eq!(ranges.last().unwrap().end, text.len());
            for w in ranges.windows(2) {
                prop_assert_eq!(w[0].end, w[1].start);
                prop_assert!(w[0].end - w[0].start >= cfg.min_len);
            }
            for r in &ranges {
                prop_assert!(r.end - r.start <= cfg.max_len);
            }
        }
    }
}
