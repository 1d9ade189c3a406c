//! Raw table grid → [`NormalizedTable`].

use segforge_core::document::{NormalizedTable, NumericCell};
use segforge_core::money::{parse_cell, Scale};
use segforge_core::text::{collapse_whitespace, find_ignore_case};

#[derive(Debug, Clone, Default)]
pub struct RawCell {
    pub text: String,
    pub colspan: usize,
    pub header: bool,
}

#[derive(Debug, Clone, Default)]
pub struct RawRow {
    pub cells: Vec<RawCell>,
    pub in_thead: bool,
}

impl RawRow {
    pub fn is_blank(&self) -> bool {
        self.cells.iter().all(|c| c.text.trim().is_empty())
    }
}

#[derive(Debug, Clone, Default)]
pub struct RawTable {
    pub caption: String,
    pub rows: Vec<RawRow>,
}

impl RawTable {
    /// Layout tables (no figures, a few rows) read as ordinary text.
    pub fn is_layout(&self) -> bool {
        let rows: Vec<&RawRow> = self.rows.iter().filter(|r| !r.is_blank()).collect();
        rows.len() <= 3
            && !rows
                .iter()
                .any(|r| r.cells.iter().skip(1).any(|c| parse_cell(&c.text).is_some()))
    }

    /// One text line per non-blank row.
    pub fn text_lines(&self) -> Vec<String> {
        self.rows
            .iter()
            .filter(|r| !r.is_blank())
            .map(|r| {
                r.cells
                    .iter()
                    .map(|c| c.text.trim())
                    .filter(|t| !t.is_empty())
                    .collect::<Vec<_>>()
                    .join(" | ")
            })
            .collect()
    }
}

const SCALE_PATTERNS: &[(&str, Scale)] = &[
    ("in billions", Scale::Billions),
    ("in millions", Scale::Millions),
    ("in thousands", Scale::Thousands),
    ("(billions", Scale::Billions),
    ("(millions", Scale::Millions),
    ("(thousands", Scale::Thousands),
    ("billions of dollars", Scale::Billions),
    ("millions of dollars", Scale::Millions),
    ("thousands of dollars", Scale::Thousands),
    ("$000", Scale::Thousands),
];

/// Earliest scale phrase in `text` ("in millions", "(thousands)", …).
pub fn scale_hint(text: &str) -> Option<Scale> {
    SCALE_PATTERNS
        .iter()
        .filter_map(|(p, s)| find_ignore_case(text, p).map(|at| (at, *s)))
        .min_by_key(|(at, _)| *at)
        .map(|(_, s)| s)
}

/// Currency and closing-paren fragments that EDGAR splits into their own
/// cells are folded into their neighbors so the number reads whole.
fn merge_fragments(cells: &mut [RawCell]) {
    for i in 0..cells.len() {
        let t = cells[i].text.trim().to_string();
        if t == "$" || t == "US$" {
            cells[i].text.clear();
        } else if t == ")" || t == "%" || t == ")%" {
            if let Some(prev) = (0..i).rev().find(|&j| !cells[j].text.trim().is_empty()) {
                cells[prev].text.push_str(&t);
            }
            cells[i].text.clear();
        }
    }
}

fn expand(row: &RawRow, header: bool) -> Vec<String> {
    let mut out = Vec::new();
    for c in &row.cells {
        let text = collapse_whitespace(&c.text);
        let span = c.colspan.max(1);
        out.push(text.clone());
        for _ in 1..span {
            // Spanning headers label every column they cover; spanning body
            // cells occupy only their first column.
            out.push(if header { text.clone() } else { String::new() });
        }
    }
    out
}

fn looks_numeric_row(row: &RawRow) -> bool {
    row.cells.iter().skip(1).any(|c| parse_cell(&c.text).is_some())
}

/// `context` is the text just before the table, used for the caption and
/// scale when the table carries none of its own.
pub fn normalize(mut raw: RawTable, table_id: String, context: &str) -> NormalizedTable {
    for r in &mut raw.rows {
        merge_fragments(&mut r.cells);
    }
    let rows: Vec<RawRow> = raw.rows.into_iter().filter(|r| !r.is_blank()).collect();

    let explicit = rows.iter().any(|r| r.in_thead || (r.cells.iter().all(|c| c.header || c.text.trim().is_empty())));
    let header_count = if explicit {
        rows.iter()
            .take_while(|r| r.in_thead || r.cells.iter().all(|c| c.header || c.text.trim().is_empty()))
            .count()
    } else {
        rows.iter().take_while(|r| !looks_numeric_row(r)).count().min(rows.len().saturating_sub(1))
    };

    let mut header_rows: Vec<Vec<String>> = rows[..header_count].iter().map(|r| expand(r, true)).collect();
    let mut body_rows: Vec<Vec<String>> = rows[header_count..].iter().map(|r| expand(r, false)).collect();
    let width = header_rows.iter().chain(body_rows.iter()).map(Vec::len).max().unwrap_or(0);
    for r in header_rows.iter_mut().chain(body_rows.iter_mut()) {
        r.resize(width, String::new());
    }

    let caption_text = if raw.caption.trim().is_empty() {
        context
            .lines()
            .rev()
            .map(str::trim)
            .find(|l| !l.is_empty())
            .filter(|l| l.chars().count() <= 200)
            .unwrap_or("")
            .to_string()
    } else {
        collapse_whitespace(&raw.caption)
    };
    let header_text: String = header_rows.iter().flatten().map(String::as_str).collect::<Vec<_>>().join(" ");
    let hint = scale_hint(&caption_text)
        .or_else(|| scale_hint(&header_text))
        .or_else(|| {
            let tail: Vec<&str> = context.lines().rev().filter(|l| !l.trim().is_empty()).take(5).collect();
            tail.iter().find_map(|l| scale_hint(l))
        });
    let scale = hint.unwrap_or(Scale::Units);

    let mut numeric_cells = Vec::new();
    for (ri, row) in body_rows.iter().enumerate() {
        for (ci, cell) in row.iter().enumerate() {
            if let Some(value) = parse_cell(cell) {
                numeric_cells.push(NumericCell { row: ri, col: ci, value, scale });
            }
        }
    }
    NormalizedTable {
        table_id,
        section: None,
        start: 0,
        caption_text,
        header_rows,
        body_rows,
        numeric_cells,
        scale_from_caption: hint.is_some(),
    }
}
