//! HTML 10-K → plain text lines, heading candidates and raw tables.

use ego_tree::NodeRef;
use scraper::{ElementRef, Html, Node};

use super::table::{RawCell, RawRow, RawTable};
use super::TextBuilder;

const SKIP: &[&str] = &["script", "style", "head", "title", "noscript", "template"];
const BLOCK: &[&str] = &[
    "p", "div", "br", "hr", "h1", "h2", "h3", "h4", "h5", "h6", "li", "ul", "ol", "center", "blockquote", "pre",
    "section", "article", "header", "footer", "dt", "dd", "dl", "address", "form", "body", "html", "page",
];
const HEADINGS: &[&str] = &["h1", "h2", "h3", "h4", "h5", "h6"];

fn is_hidden(el: &ElementRef<'_>) -> bool {
    let v = el.value();
    if v.name().eq_ignore_ascii_case("ix:header") {
        return true;
    }
    v.attr("style").is_some_and(|s| {
        let s: String = s.chars().filter(|c| !c.is_whitespace()).collect::<String>().to_ascii_lowercase();
        s.contains("display:none")
    })
}

fn is_bold(el: &ElementRef<'_>) -> bool {
    let v = el.value();
    let name = v.name();
    if matches!(name, "b" | "strong") || HEADINGS.contains(&name) {
        return true;
    }
    v.attr("style").is_some_and(|s| {
        let s: String = s.chars().filter(|c| !c.is_whitespace()).collect::<String>().to_ascii_lowercase();
        s.contains("font-weight:bold") || s.contains("font-weight:700") || s.contains("font-weight:800")
    })
}

pub(super) fn extract(html: &str, out: &mut TextBuilder) {
    let doc = Html::parse_document(html);
    walk(doc.tree.root(), false, out);
    out.break_line();
}

fn walk(node: NodeRef<'_, Node>, bold: bool, out: &mut TextBuilder) {
    match node.value() {
        Node::Text(t) => out.push_text(t, bold),
        Node::Element(_) => {
            let el = ElementRef::wrap(node).expect("element node");
            let name = el.value().name().to_ascii_lowercase();
            if SKIP.contains(&name.as_str()) || is_hidden(&el) {
                return;
            }
            if name == "table" {
                out.break_line();
                let raw = collect_table(el);
                out.push_table(raw);
                return;
            }
            let block = BLOCK.contains(&name.as_str());
            if block {
                out.break_line();
            }
            let bold = bold || is_bold(&el);
            for child in node.children() {
                walk(child, bold, out);
            }
            if block {
                out.break_line();
            }
        }
        _ => {
            for child in node.children() {
                walk(child, bold, out);
            }
        }
    }
}

/// Rows of `table` with nested tables spliced in depth-first after the row
/// that contains them.
fn collect_table(table: ElementRef<'_>) -> RawTable {
    let mut raw = RawTable::default();
    collect_rows(*table, false, &mut raw);
    raw
}

fn collect_rows(node: NodeRef<'_, Node>, in_thead: bool, raw: &mut RawTable) {
    for child in node.children() {
        let Some(el) = ElementRef::wrap(child) else { continue };
        if is_hidden(&el) {
            continue;
        }
        match el.value().name().to_ascii_lowercase().as_str() {
            "caption" => raw.caption = cell_text(child, &mut Vec::new()),
            "thead" => collect_rows(child, true, raw),
            "tbody" | "tfoot" => collect_rows(child, in_thead, raw),
            "tr" => {
                let mut nested = Vec::new();
                let mut row = RawRow { cells: Vec::new(), in_thead };
                for c in child.children() {
                    let Some(cel) = ElementRef::wrap(c) else { continue };
                    let cname = cel.value().name().to_ascii_lowercase();
                    if cname != "td" && cname != "th" {
                        continue;
                    }
                    let colspan = cel.value().attr("colspan").and_then(|s| s.trim().parse().ok()).unwrap_or(1usize);
                    row.cells.push(RawCell {
                        text: cell_text(c, &mut nested),
                        colspan: colspan.clamp(1, 64),
                        header: cname == "th",
                    });
                }
                raw.rows.push(row);
                for t in nested {
                    let inner = collect_table(ElementRef::wrap(t).expect("table element"));
                    raw.rows.extend(inner.rows);
                }
            }
            _ => collect_rows(child, in_thead, raw),
        }
    }
}

fn cell_text<'a>(node: NodeRef<'a, Node>, nested: &mut Vec<NodeRef<'a, Node>>) -> String {
    let mut s = String::new();
    fn go<'a>(n: NodeRef<'a, Node>, s: &mut String, nested: &mut Vec<NodeRef<'a, Node>>) {
        for c in n.children() {
            match c.value() {
                Node::Text(t) => s.push_str(t),
                Node::Element(e) => {
                    let name = e.name().to_ascii_lowercase();
                    let hidden = SKIP.contains(&name.as_str()) || ElementRef::wrap(c).is_some_and(|el| is_hidden(&el));
                    if name == "table" {
                        nested.push(c);
                    } else if !hidden {
                        if name == "br" || name == "p" || name == "div" {
                            s.push(' ');
                        }
                        go(c, s, nested);
                    }
                }
                _ => {}
            }
        }
    }
    go(node, &mut s, nested);
    segforge_core::text::collapse_whitespace(&s.replace('\u{a0}', " "))
}
