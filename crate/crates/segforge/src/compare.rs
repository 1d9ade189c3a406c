//! Cross-document questions: why a firm's segments changed between years,
//! and how two firms' geographic disclosures line up within one region.

use std::collections::BTreeSet;
use std::ops::RangeInclusive;

use segforge_core::answer::{self, ValidationError};
use segforge_core::changes::{self, ChangeRow, DetectError, ReasonClass};
use segforge_core::geo::{self, AggregateError, Membership, RegionScheme, RegionalExposure};
use segforge_core::retrieval::{ChunkFilter, ChunkIndex, ContextBlock, RetrievalResult};
use segforge_core::{Axis, ExtractionBundle, FirmYear, MeasureKind, MonetaryValue, SegmentRecord};
use serde::{Deserialize, Serialize};

use crate::gateway::{Gateway, GatewayError, PromptRequest};
use crate::pipeline::Templates;
use crate::store::SegmentStore;

#[derive(Debug, thiserror::Error)]
pub enum CompareError {
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Detect(#[from] DetectError),
    #[error("{key}: {source}")]
    Aggregate { key: FirmYear, source: AggregateError },
}

/// Retrieval settings for grounded questions.
#[derive(Debug, Clone)]
pub struct Grounding {
    pub query: String,
    pub top_k: usize,
    pub budget_chars: usize,
    pub max_in_flight: usize,
}

impl Default for Grounding {
    fn default() -> Self {
        Grounding { query: "reportable segments segment reorganization".into(), top_k: 4, budget_chars: 40_000, max_in_flight: 5 }
    }
}

/// Per-year reportable business-segment names for `cik`, from the store.
pub fn segment_panel(store: &SegmentStore, cik: u64, years: RangeInclusive<i32>) -> Vec<(i32, Vec<String>)> {
    let mut panel: Vec<(i32, Vec<String>)> = Vec::new();
    for year in years {
        if let Some(b) = store.get(FirmYear::new(cik, year)) {
            let names: Vec<String> = b.reportable.iter().filter(|r| r.axis == Axis::Business).map(|r| r.name.clone()).collect();
            if !names.is_empty() {
                panel.push((year, names));
            }
        }
    }
    panel
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChangeReport {
    pub cik: u64,
    pub rows: Vec<ChangeRow>,
    pub warnings: Vec<String>,
}

struct Pending {
    row: usize,
    context: ContextBlock,
    fallback: Option<String>,
    request: PromptRequest,
}

/// Runs the deterministic detector over `panel`, then asks the gateway to
/// classify every changed year using context retrieved from that year and
/// the one before. Unchanged years issue no queries.
pub fn explain_changes(
    cik: u64,
    panel: &[(i32, Vec<String>)],
    index: &ChunkIndex,
    gateway: &Gateway,
    templates: &Templates,
    opts: &Grounding,
) -> Result<ChangeReport, CompareError> {
    let detection = changes::detect_changes(panel)?;
    let mut rows = detection.rows;
    let mut warnings: Vec<String> = detection
        .gaps
        .iter()
        .map(|(a, b)| format!("{cik}: no segment data between {a} and {b}; {b} compared against {a}"))
        .collect();
    let mut pending = Vec::new();
    for i in 1..rows.len() {
        if !rows[i].changed {
            continue;
        }
        let (prior_year, year) = (rows[i - 1].fiscal_year, rows[i].fiscal_year);
        let results: Vec<RetrievalResult> = [prior_year, year]
            .iter()
            .map(|y| index.retrieve(&opts.query, opts.top_k, &ChunkFilter::firm(cik).with_years([*y])))
            .collect();
        if results.iter().all(|r| r.hits.is_empty()) {
            warnings.push(format!("{cik} {year}: retrieval returned no passages for {prior_year}-{year}; reason left unknown"));
            mark_unknown(&mut rows[i], "no retrieved context");
            continue;
        }
        let context = match index.assemble_context(&results, opts.budget_chars) {
            Ok(c) => c,
            Err(e) => {
                warnings.push(format!("{cik} {year}: {e}; reason left unknown"));
                mark_unknown(&mut rows[i], "context assembly failed");
                continue;
            }
        };
        let fallback = results.iter().rev().find_map(|r| r.hits.first()).map(|h| h.chunk_id.clone());
        let ids: Vec<&str> = context.chunk_ids().collect();
        let handle = gateway.upload(&format!("context_{cik}_{prior_year}_{year}.txt"), context.text.as_bytes())?;
        let question = templates.render(
            "changes",
            &[
                ("prior_year", &prior_year.to_string()),
                ("fiscal_year", &year.to_string()),
                ("prior_segments", &rows[i - 1].segment_names.join("; ")),
                ("current_segments", &rows[i].segment_names.join("; ")),
                ("chunk_ids", &ids.join("; ")),
            ],
        );
        let request = PromptRequest {
            file: handle,
            system_preamble: templates.get("context_preamble").to_string(),
            question,
            format_rules: templates.get("changes_rules").to_string(),
            request_id: format!("{cik}_{year}/changes"),
        };
        pending.push(Pending { row: i, context, fallback, request });
    }

    let reqs: Vec<PromptRequest> = pending.iter().map(|p| p.request.clone()).collect();
    let answers = gateway.ask_many(&reqs, opts.max_in_flight);
    for (p, a) in pending.iter().zip(answers) {
        let prior = rows[p.row - 1].segment_names.clone();
        let current = rows[p.row].segment_names.clone();
        let mut text = a?.text;
        let mut parsed = changes::parse_change_answer(&text, &prior, &current);
        if parsed.is_err() {
            let mut retry = p.request.clone();
            retry.request_id.push_str("/retry");
            retry.format_rules = format!("{} {}", retry.format_rules, templates.get("reminder"));
            text = gateway.ask(&retry)?.text;
            parsed = changes::parse_change_answer(&text, &prior, &current);
        }
        let row = &mut rows[p.row];
        match parsed {
            Ok(ans) => {
                let in_context: BTreeSet<&str> = p.context.chunk_ids().collect();
                let mut evidence: Vec<String> = ans.evidence.into_iter().filter(|e| in_context.contains(e.as_str())).collect();
                if evidence.is_empty() {
                    if let Some(f) = &p.fallback {
                        warnings.push(format!("{}: answer cited no retrieved chunk; citing top hit {f}", p.request.request_id));
                        evidence.push(f.clone());
                    }
                }
                row.reason = Some(ans.reason);
                row.reason_text = ans.reason_text;
                row.linkage = Some(ans.linkage);
                row.linkage_text = ans.linkage_text;
                row.mapping = ans.mapping;
                row.evidence = evidence;
            }
            Err(e) => {
                warnings.push(format!("{}: {e}; reason left unknown", p.request.request_id));
                mark_unknown(row, "model answer did not follow the required format");
                row.evidence = p.fallback.iter().cloned().collect();
            }
        }
    }
    Ok(ChangeReport { cik, rows, warnings })
}

fn mark_unknown(row: &mut ChangeRow, why: &str) {
    row.reason = Some(ReasonClass::Unknown);
    row.reason_text = format!("Unexplained: {why}");
    row.linkage = None;
    row.linkage_text.clear();
    row.mapping.clear();
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentRow {
    pub fiscal_year: i32,
    pub firm_a: RegionalExposure,
    pub firm_b: RegionalExposure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Alignment {
    pub region_name: String,
    pub firm_a: (u64, String),
    pub firm_b: (u64, String),
    pub rows: Vec<AlignmentRow>,
    pub warnings: Vec<String>,
}

/// Gateway access for labels the scheme does not cover.
pub struct LabelArbiter<'a> {
    pub gateway: &'a Gateway,
    pub templates: &'a Templates,
    pub index: &'a ChunkIndex,
    pub grounding: Grounding,
}

impl LabelArbiter<'_> {
    fn is_member(&self, key: FirmYear, label: &str, region: &str, warnings: &mut Vec<String>) -> Result<bool, GatewayError> {
        let filter = ChunkFilter::firm(key.cik).with_years([key.fiscal_year]);
        let result = self.index.retrieve(label, self.grounding.top_k, &filter);
        let context = match self.index.assemble_context(std::slice::from_ref(&result), self.grounding.budget_chars) {
            Ok(c) if !c.spans.is_empty() => c,
            Ok(_) | Err(_) => {
                warnings.push(format!("{key}: no retrieved context for label {label:?}; excluded from {region}"));
                return Ok(false);
            }
        };
        let handle = self.gateway.upload(&format!("context_{}_{}_{}.txt", key.cik, key.fiscal_year, geo::normalize_label(label).replace(' ', "_")), context.text.as_bytes())?;
        let mut req = PromptRequest {
            file: handle,
            system_preamble: self.templates.get("context_preamble").to_string(),
            question: self.templates.render(
                "region_member",
                &[("label", label), ("fiscal_year", &key.fiscal_year.to_string()), ("region", region)],
            ),
            format_rules: answer::AnswerShape::YesNo.format_rules().to_string(),
            request_id: format!("{key}/region/{}", geo::normalize_label(label).replace(' ', "_")),
        };
        let mut verdict: Result<bool, ValidationError> = answer::parse_yes_no(&self.gateway.ask(&req)?.text);
        if verdict.is_err() {
            req.request_id.push_str("/retry");
            req.format_rules = format!("{} {}", req.format_rules, self.templates.get("reminder"));
            verdict = answer::parse_yes_no(&self.gateway.ask(&req)?.text);
        }
        Ok(verdict.unwrap_or_else(|e| {
            warnings.push(format!("{}: {e}; label {label:?} excluded from {region}", req.request_id));
            false
        }))
    }
}

/// Geographic records of a bundle: the reportable tier when the firm
/// reports geographic segments, otherwise geographic nested components.
pub fn geographic_records(bundle: &ExtractionBundle) -> Vec<&SegmentRecord> {
    let reportable: Vec<&SegmentRecord> = bundle.reportable.iter().filter(|r| r.axis == Axis::Geographic).collect();
    if !reportable.is_empty() {
        return reportable;
    }
    bundle.nested.iter().filter(|r| r.axis == Axis::Geographic).collect()
}

pub fn firm_label(bundle: &ExtractionBundle) -> String {
    match bundle.general_fields.get("tic").map(|t| t.trim()) {
        Some(t) if !t.is_empty() && !t.eq_ignore_ascii_case(answer::NOT_PROVIDED) => t.to_string(),
        _ => bundle.firm_year.cik.to_string(),
    }
}

fn exposure(
    bundle: &ExtractionBundle,
    scheme: &RegionScheme,
    arbiter: Option<&LabelArbiter<'_>>,
    warnings: &mut Vec<String>,
) -> Result<RegionalExposure, CompareError> {
    let key = bundle.firm_year;
    let mut members: Vec<(String, MonetaryValue)> = Vec::new();
    for r in geographic_records(bundle) {
        let Some(v) = r.measures.get(&MeasureKind::Revenue) else {
            warnings.push(format!("{key}: geographic record {:?} has no revenue; skipped", r.name));
            continue;
        };
        let member = match scheme.classify(&r.name) {
            Membership::Member => true,
            Membership::NonMember => false,
            Membership::Ambiguous => match arbiter {
                Some(a) => a.is_member(key, &r.name, &scheme.region_name, warnings)?,
                None => {
                    warnings.push(format!("{key}: label {:?} is not in the {} scheme; excluded", r.name, scheme.region_name));
                    false
                }
            },
        };
        if member {
            members.push((r.name.clone(), *v));
        }
    }
    let total = bundle.total_revenue();
    let e = geo::aggregate(&members, total).map_err(|source| CompareError::Aggregate { key, source })?;
    warnings.extend(e.warnings.iter().map(|w| format!("{key}: {w}")));
    Ok(e)
}

/// Region totals and revenue shares for two firms over `years`. Years
/// missing a stored bundle for either firm are skipped with a warning.
pub fn align_regions(
    firm_a: u64,
    firm_b: u64,
    scheme: &RegionScheme,
    years: RangeInclusive<i32>,
    store: &SegmentStore,
    arbiter: Option<&LabelArbiter<'_>>,
) -> Result<Alignment, CompareError> {
    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    let mut labels = (firm_a.to_string(), firm_b.to_string());
    for year in years {
        let (a, b) = (store.get(FirmYear::new(firm_a, year)), store.get(FirmYear::new(firm_b, year)));
        let (Some(a), Some(b)) = (a, b) else {
            warnings.push(format!("{year}: missing stored bundle for {}; year skipped", if store.get(FirmYear::new(firm_a, year)).is_none() { firm_a } else { firm_b }));
            continue;
        };
        labels = (firm_label(&a), firm_label(&b));
        let ea = exposure(&a, scheme, arbiter, &mut warnings)?;
        let eb = exposure(&b, scheme, arbiter, &mut warnings)?;
        rows.push(AlignmentRow { fiscal_year: year, firm_a: ea, firm_b: eb });
    }
    Ok(Alignment {
        region_name: scheme.region_name.clone(),
        firm_a: (firm_a, labels.0),
        firm_b: (firm_b, labels.1),
        rows,
        warnings,
    })
}

/// A header plus string rows, rendered as CSV or aligned text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
    }

    pub fn to_text(&self) -> String {
        let mut widths: Vec<usize> = self.header.iter().map(|h| h.chars().count()).collect();
        for r in &self.rows {
            for (i, c) in r.iter().enumerate() {
                widths[i] = widths[i].max(c.chars().count());
            }
        }
        let line = |cells: &[String]| {
            let mut s = String::new();
            for (i, c) in cells.iter().enumerate() {
                if i + 1 == cells.len() {
                    s.push_str(c);
                } else {
                    s.push_str(c);
                    s.extend(std::iter::repeat_n(' ', widths[i] - c.chars().count() + 2));
                }
            }
            s.truncate(s.trim_end().len());
            s.push('\n');
            s
        };
        let mut out = line(&self.header);
        let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
        out.push_str(&line(&rule));
        for r in &self.rows {
            out.push_str(&line(r));
        }
        out
    }
}

pub const CHANGE_HEADER: [&str; 5] =
    ["Year", "Reportable Segment Name(s)", "Change?", "Reason for Change", "Linked with Prior Segment?"];

pub fn change_table(rows: &[ChangeRow]) -> Table {
    Table {
        header: CHANGE_HEADER.iter().map(|s| s.to_string()).collect(),
        rows: rows
            .iter()
            .map(|r| {
                let reason = match (&r.reason, r.reason_text.is_empty()) {
                    (Some(c), true) => c.keyword().to_string(),
                    _ => r.reason_text.clone(),
                };
                let linked = match r.linkage {
                    Some(l) if r.linkage_text.is_empty() => l.label().to_string(),
                    // "Yes (re-grouping)" + text reads "Yes (re-grouping; text)".
                    Some(l) => match l.label().strip_suffix(')') {
                        Some(open) => format!("{open}; {})", r.linkage_text),
                        None => format!("{} ({})", l.label(), r.linkage_text),
                    },
                    None => String::new(),
                };
                vec![
                    r.fiscal_year.to_string(),
                    r.segment_names.join("; "),
                    if r.changed { "Yes" } else { "No" }.to_string(),
                    reason,
                    linked,
                ]
            })
            .collect(),
    }
}

fn pct(p: &Option<segforge_core::Decimal>) -> String {
    p.map(|p| format!("{}%", p.to_fixed(1))).unwrap_or_default()
}

pub fn alignment_table(al: &Alignment) -> Table {
    let (a, b, region) = (&al.firm_a.1, &al.firm_b.1, &al.region_name);
    let header = vec![
        "Year".to_string(),
        format!("Segments in {region} for {a}"),
        format!("Segments in {region} for {b}"),
        format!("Detailed Segment Performance for {a}"),
        format!("Detailed Segment Performance for {b}"),
        format!("Sales for {a} in {region}"),
        format!("Sales for {b} in {region}"),
        format!("% {region} / Total {a}"),
        format!("% {region} / Total {b}"),
    ];
    let labels = |e: &RegionalExposure| e.components.iter().map(|c| c.label.clone()).collect::<Vec<_>>().join(", ");
    let detail = |e: &RegionalExposure| {
        e.components.iter().map(|c| format!("{}, {}", c.label, c.value.to_grouped_string())).collect::<Vec<_>>().join("; ")
    };
    Table {
        header,
        rows: al
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.fiscal_year.to_string(),
                    labels(&r.firm_a),
                    labels(&r.firm_b),
                    detail(&r.firm_a),
                    detail(&r.firm_b),
                    r.firm_a.region_total.to_grouped_string(),
                    r.firm_b.region_total.to_grouped_string(),
                    pct(&r.firm_a.pct_of_total),
                    pct(&r.firm_b.pct_of_total),
                ]
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_tables_are_header_only() {
        let t = change_table(&[]);
        assert_eq!(t.to_csv(), "Year,Reportable Segment Name(s),Change?,Reason for Change,Linked with Prior Segment?\n");
        let al = Alignment {
            region_name: "Asia".into(),
            firm_a: (50863, "INTC".into()),
            firm_b: (97476, "TXN".into()),
            rows: vec![],
            warnings: vec![],
        };
        let csv = alignment_table(&al).to_csv();
        assert_eq!(csv.lines().count(), 1);
        assert!(csv.contains("% Asia / Total INTC"));
    }

    #[test]
    fn text_rendering_aligns_columns() {
        let t = Table {
            header: vec!["Year".into(), "Name".into()],
            rows: vec![vec!["2012".into(), "A; B".into()]],
        };
        assert_eq!(t.to_text(), "Year  Name\n----  ----\n2012  A; B\n");
    }
}
