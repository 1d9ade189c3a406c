//! Raw 10-K bytes → [`ParsedFiling`]. HTML goes through an html5ever DOM;
//! SGML-era plain-text submissions are read line by line with `<TABLE>`
//! blocks split on column gaps.

mod html;
mod sgml;
pub mod table;

use segforge_core::document::{HeadingCandidate, NormalizedTable, ParsedFiling};
use segforge_core::{FilingRef, MediaKind};

use crate::edgar::{CacheError, CachedDocument};
use table::RawTable;

#[derive(Debug, thiserror::Error)]
pub enum ParseError {
    #[error("cannot decode document: {0}")]
    Decode(String),
    #[error("document has no visible text")]
    EmptyDocument,
    #[error(transparent)]
    Cache(#[from] CacheError),
}

/// Accumulates the extracted text one line at a time.
#[derive(Default)]
pub(crate) struct TextBuilder {
    text: String,
    line: String,
    pending_space: bool,
    bold_chars: usize,
    plain_chars: usize,
    headings: Vec<HeadingCandidate>,
    tables: Vec<NormalizedTable>,
}

const CONTEXT_BYTES: usize = 600;

impl TextBuilder {
    pub(crate) fn push_text(&mut self, s: &str, bold: bool) {
        for c in s.chars() {
            if c.is_whitespace() || c == '\u{a0}' {
                self.pending_space = !self.line.is_empty();
                continue;
            }
            if self.pending_space {
                self.line.push(' ');
                self.pending_space = false;
            }
            self.line.push(c);
            if bold {
                self.bold_chars += 1;
            } else {
                self.plain_chars += 1;
            }
        }
    }

    pub(crate) fn break_line(&mut self) {
        if !self.line.is_empty() {
            let emphasized = self.bold_chars > 0 && self.plain_chars == 0;
            let line = std::mem::take(&mut self.line);
            self.push_line(&line, emphasized);
        }
        self.pending_space = false;
        self.bold_chars = 0;
        self.plain_chars = 0;
    }

    /// A finished text line that may open a section.
    pub(crate) fn push_line(&mut self, line: &str, emphasized: bool) {
        let line = line.trim();
        if line.is_empty() {
            return;
        }
        let start = self.text.len();
        self.text.push_str(line);
        self.headings.push(HeadingCandidate { start, end: self.text.len(), emphasized });
        self.text.push('\n');
    }

    fn context(&self) -> &str {
        let mut from = self.text.len().saturating_sub(CONTEXT_BYTES);
        while !self.text.is_char_boundary(from) {
            from += 1;
        }
        &self.text[from..]
    }

    pub(crate) fn push_table(&mut self, raw: RawTable) {
        self.break_line();
        if raw.rows.iter().all(|r| r.is_blank()) {
            if !raw.caption.trim().is_empty() {
                self.push_line(&raw.caption.clone(), false);
            }
            return;
        }
        if raw.is_layout() {
            for l in raw.text_lines() {
                self.push_line(&l, false);
            }
            return;
        }
        let lines = raw.text_lines();
        let id = format!("t{:03}", self.tables.len());
        let mut t = table::normalize(raw, id, self.context());
        t.start = self.text.len();
        for l in lines {
            self.text.push_str(&l);
            self.text.push('\n');
        }
        self.tables.push(t);
    }

    fn finish(mut self, filing: FilingRef) -> Result<ParsedFiling, ParseError> {
        self.break_line();
        if self.text.trim().is_empty() {
            return Err(ParseError::EmptyDocument);
        }
        let mut parsed = ParsedFiling::assemble(filing, self.text, self.headings, self.tables);
        let defaulted = parsed.tables.iter().filter(|t| !t.scale_from_caption && !t.numeric_cells.is_empty()).count();
        if defaulted > 0 {
            parsed.warnings.push(format!("{defaulted} numeric table(s) had no scale caption; units assumed"));
        }
        Ok(parsed)
    }
}

fn declared_charset(bytes: &[u8]) -> Option<String> {
    let head = String::from_utf8_lossy(&bytes[..bytes.len().min(4096)]).to_ascii_lowercase();
    let at = head.find("charset=")? + "charset=".len();
    let label: String = head[at..]
        .trim_start_matches(['"', '\''])
        .chars()
        .take_while(|c| c.is_ascii_alphanumeric() || *c == '-' || *c == '_')
        .collect();
    (!label.is_empty()).then_some(label)
}

/// UTF-8 when valid, else the declared charset, else Windows-1252 (the
/// usual encoding of older EDGAR text).
pub fn decode(bytes: &[u8]) -> Result<String, ParseError> {
    if bytes.iter().all(|b| b.is_ascii_whitespace()) {
        return Err(ParseError::EmptyDocument);
    }
    let nuls = bytes.iter().filter(|b| **b == 0).count();
    let utf16_bom = bytes.starts_with(&[0xFF, 0xFE]) || bytes.starts_with(&[0xFE, 0xFF]);
    if !utf16_bom && nuls * 100 > bytes.len() {
        return Err(ParseError::Decode("binary content".into()));
    }
    if let Some((enc, _)) = encoding_rs::Encoding::for_bom(bytes) {
        return Ok(enc.decode(bytes).0.into_owned());
    }
    if let Ok(s) = std::str::from_utf8(bytes) {
        return Ok(s.to_string());
    }
    let enc = match declared_charset(bytes) {
        Some(label) => encoding_rs::Encoding::for_label(label.as_bytes())
            .ok_or_else(|| ParseError::Decode(format!("unknown charset {label:?}")))?,
        None => encoding_rs::WINDOWS_1252,
    };
    Ok(enc.decode(bytes).0.into_owned())
}

pub fn parse_bytes(filing: FilingRef, bytes: &[u8], kind: MediaKind) -> Result<ParsedFiling, ParseError> {
    let text = decode(bytes)?;
    let mut out = TextBuilder::default();
    match kind {
        MediaKind::Html => html::extract(&text, &mut out),
        MediaKind::SgmlText => sgml::extract(&text, &mut out),
    }
    out.finish(filing)
}

pub fn parse(doc: &CachedDocument) -> Result<ParsedFiling, ParseError> {
    let bytes = doc.bytes()?;
    parse_bytes(doc.filing.clone(), &bytes, doc.media_kind)
}
