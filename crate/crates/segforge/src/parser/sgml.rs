//! SGML-wrapped plain-text filings (pre-2001 style).

use segforge_core::text::find_ignore_case;

use super::table::{RawCell, RawRow, RawTable};
use super::{html, TextBuilder};

/// Body of the 10-K document inside an EDGAR submission, or the whole text
/// when there is no `<DOCUMENT>` wrapper.
fn primary_body(text: &str) -> &str {
    let mut docs = Vec::new();
    let mut rest = text;
    while let Some(at) = find_ignore_case(rest, "<DOCUMENT>") {
        let after = &rest[at + "<DOCUMENT>".len()..];
        let end = find_ignore_case(after, "</DOCUMENT>").unwrap_or(after.len());
        docs.push(&after[..end]);
        rest = &after[end..];
    }
    if docs.is_empty() {
        return text;
    }
    let is_10k = |d: &&&str| {
        find_ignore_case(d, "<TYPE>").is_some_and(|at| {
            let t = d[at + 6..].trim_start();
            t.get(..4).is_some_and(|p| p.eq_ignore_ascii_case("10-K"))
        })
    };
    let doc = docs.iter().find(is_10k).unwrap_or(&docs[0]);
    match find_ignore_case(doc, "<TEXT>") {
        Some(at) => {
            let body = &doc[at + "<TEXT>".len()..];
            let end = find_ignore_case(body, "</TEXT>").unwrap_or(body.len());
            &body[..end]
        }
        None => doc,
    }
}

fn tag_only(line: &str) -> Option<String> {
    let t = line.trim();
    if t.starts_with('<') && t.ends_with('>') && !t[1..].contains('<') {
        Some(t[1..t.len() - 1].trim_start_matches('/').to_ascii_uppercase())
    } else {
        None
    }
}

fn is_rule(line: &str) -> bool {
    let t = line.trim();
    !t.is_empty() && t.chars().all(|c| matches!(c, '-' | '=' | '_' | ' '))
}

/// Splits a fixed-width row on runs of two or more spaces.
fn split_columns(line: &str) -> Vec<RawCell> {
    line.split("  ")
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| RawCell { text: s.to_string(), colspan: 1, header: false })
        .collect()
}

fn is_shouting(line: &str) -> bool {
    let letters: Vec<char> = line.chars().filter(|c| c.is_alphabetic()).collect();
    letters.len() >= 3 && letters.iter().all(|c| c.is_uppercase())
}

pub(super) fn extract(text: &str, out: &mut TextBuilder) {
    let body = primary_body(text);
    if find_ignore_case(body, "<html").is_some() {
        html::extract(body, out);
        return;
    }
    let mut table: Option<RawTable> = None;
    let mut in_caption = false;
    for raw_line in body.lines() {
        let line = raw_line.trim_end().replace('\u{a0}', " ");
        match tag_only(&line).as_deref() {
            Some("TABLE") if find_ignore_case(&line, "</").is_none() => {
                table = Some(RawTable::default());
                continue;
            }
            Some("TABLE") => {
                if let Some(t) = table.take() {
                    out.push_table(t);
                }
                in_caption = false;
                continue;
            }
            Some("CAPTION") => {
                in_caption = find_ignore_case(&line, "</").is_none();
                continue;
            }
            Some(_) => continue,
            None => {}
        }
        let cleaned = strip_inline_tags(&line);
        match table.as_mut() {
            Some(t) => {
                if cleaned.trim().is_empty() || is_rule(&cleaned) {
                    continue;
                }
                if in_caption {
                    if !t.caption.is_empty() {
                        t.caption.push(' ');
                    }
                    t.caption.push_str(cleaned.trim());
                } else {
                    t.rows.push(RawRow { cells: split_columns(&cleaned), in_thead: false });
                }
            }
            None => {
                if is_rule(&cleaned) {
                    continue;
                }
                let shouting = is_shouting(&cleaned);
                out.push_line(&cleaned, shouting);
            }
        }
    }
    if let Some(t) = table.take() {
        out.push_table(t);
    }
}

/// Drops `<S>`, `<C>`, `<PAGE>` and similar markers that share a line with text.
fn strip_inline_tags(line: &str) -> String {
    let mut out = String::with_capacity(line.len());
    let mut rest = line;
    while let Some(open) = rest.find('<') {
        let Some(close) = rest[open..].find('>') else { break };
        let tag = &rest[open + 1..open + close];
        let known = tag.trim_start_matches('/').split_whitespace().next().is_some_and(|n| {
            matches!(n.to_ascii_uppercase().as_str(), "S" | "C" | "PAGE" | "FN" | "F1" | "F2" | "F3" | "R")
        });
        out.push_str(&rest[..open]);
        if !known {
            out.push_str(&rest[open..open + close + 1]);
        }
        rest = &rest[open + close + 1..];
    }
    out.push_str(rest);
    out
}
