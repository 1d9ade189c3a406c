//! The three-stage extraction workflow for one firm-year: classify the
//! segmentation, extract reportable segments and their measures, then
//! detect and extract nested disclosures linked to their parents.

pub mod prompts;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use segforge_core::answer::{self, Answer, AnswerShape, ValidationError, NOT_PROVIDED};
use segforge_core::changes::normalize_name;
use segforge_core::segment::{infer_nested_axis, is_geographic_label, BundleError, BundleSource};
use segforge_core::{
    Axis, ExtractionBundle, FirmYear, MeasureKind, MonetaryValue, SegmentRecord, SegmentationClass, SegmentationKind,
};

use crate::edgar::{CacheError, CachedDocument};
use crate::gateway::{FileHandle, Gateway, GatewayError, PromptRequest};
pub use prompts::{FieldSpec, Templates};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("{request_id}: {error} (answer {raw:?})")]
    Validation { request_id: String, error: ValidationError, raw: String },
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),
    #[error("bundle invariant violated: {0}")]
    Bundle(#[from] BundleError),
    #[error(transparent)]
    Cache(#[from] CacheError),
    #[error("writing {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

/// Stage output that may be incomplete; `warnings` say what was dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct Partial<T> {
    pub value: T,
    pub warnings: Vec<String>,
}

/// One uploaded filing being worked on.
#[derive(Debug, Clone)]
pub struct Session {
    pub handle: FileHandle,
    pub firm_year: FirmYear,
}

impl Session {
    fn id(&self, suffix: &str) -> String {
        format!("{}/{suffix}", self.firm_year)
    }
}

struct Validated<T> {
    value: T,
    request_ids: Vec<String>,
}

type Check<'c, T> = &'c (dyn Fn(&str) -> Result<T, ValidationError> + Sync);

struct Query {
    id: String,
    question: String,
    rules: String,
}

pub struct Pipeline<'g> {
    gateway: &'g Gateway,
    templates: Templates,
    measures: Vec<MeasureKind>,
    nested_measures: Vec<MeasureKind>,
    max_in_flight: usize,
}

const GVKEY_WARNING: &str =
    "GVKEY is a commercial database identifier that does not appear in 10-K filings; answer is unverifiable from source";

impl<'g> Pipeline<'g> {
    pub fn new(gateway: &'g Gateway, measures: Vec<MeasureKind>, nested_measures: Vec<MeasureKind>, max_in_flight: usize) -> Self {
        Pipeline { gateway, templates: Templates::builtin(), measures, nested_measures, max_in_flight: max_in_flight.max(1) }
    }

    pub fn with_templates(mut self, templates: Templates) -> Self {
        self.templates = templates;
        self
    }

    pub fn templates(&self) -> &Templates {
        &self.templates
    }

    pub fn open(&self, doc: &CachedDocument) -> Result<Session, PipelineError> {
        let bytes = doc.bytes()?;
        let handle = self.gateway.upload(doc.filing.primary_document(), &bytes)?;
        Ok(Session { handle, firm_year: FirmYear::new(doc.filing.cik, doc.filing.fiscal_year) })
    }

    fn request(&self, s: &Session, q: &Query) -> PromptRequest {
        PromptRequest {
            file: s.handle.clone(),
            system_preamble: self.templates.get("preamble").to_string(),
            question: q.question.clone(),
            format_rules: q.rules.clone(),
            request_id: q.id.clone(),
        }
    }

    /// Asks every query, validates, and re-asks each failure once with a
    /// format reminder. Gateway errors abort; validation failures come back
    /// per query.
    fn ask_all<T>(&self, s: &Session, queries: &[Query], check: Check<'_, T>) -> Result<Vec<Result<Validated<T>, PipelineError>>, GatewayError> {
        let reqs: Vec<PromptRequest> = queries.iter().map(|q| self.request(s, q)).collect();
        let first = self.gateway.ask_many(&reqs, self.max_in_flight);
        let mut out: Vec<Option<Result<Validated<T>, PipelineError>>> = Vec::with_capacity(queries.len());
        let mut retry = Vec::new();
        for (i, r) in first.into_iter().enumerate() {
            let c = r?;
            match check(&c.text) {
                Ok(value) => out.push(Some(Ok(Validated { value, request_ids: vec![c.request_id] }))),
                Err(_) => {
                    out.push(None);
                    retry.push(i);
                }
            }
        }
        if !retry.is_empty() {
            let reminder = self.templates.get("reminder");
            let reqs: Vec<PromptRequest> = retry
                .iter()
                .map(|&i| {
                    let q = &queries[i];
                    self.request(s, &Query {
                        id: format!("{}/retry", q.id),
                        question: q.question.clone(),
                        rules: format!("{} {reminder}", q.rules),
                    })
                })
                .collect();
            let second = self.gateway.ask_many(&reqs, self.max_in_flight);
            for (&i, r) in retry.iter().zip(second) {
                let c = r?;
                out[i] = Some(match check(&c.text) {
                    Ok(value) => Ok(Validated { value, request_ids: vec![queries[i].id.clone(), c.request_id] }),
                    Err(error) => Err(PipelineError::Validation { request_id: c.request_id, error, raw: c.text }),
                });
            }
        }
        Ok(out.into_iter().map(|o| o.expect("filled")).collect())
    }

    fn ask_one<T>(&self, s: &Session, q: Query, check: Check<'_, T>) -> Result<Validated<T>, PipelineError> {
        self.ask_all(s, std::slice::from_ref(&q), check)?.pop().expect("one result")
    }

    /// Stage 1. An answer that is not Yes/No fails the whole firm-year.
    pub fn classify_segmentation(&self, s: &Session) -> Result<SegmentationClass, PipelineError> {
        let q = Query {
            id: s.id("classify"),
            question: self.templates.get("classify").to_string(),
            rules: AnswerShape::YesNo.format_rules().to_string(),
        };
        let check = |raw: &str| answer::parse_yes_no(raw).map(|yes| (yes, raw.trim().to_string()));
        let v = self.ask_one(s, q, &check)?;
        let (multi, raw) = v.value;
        Ok(SegmentationClass {
            kind: if multi { SegmentationKind::MultiSegment } else { SegmentationKind::SingleUnit },
            raw_response: raw,
        })
    }

    /// One query per catalog field. Invalid answers are stored as
    /// "Not provided" with a warning naming the request.
    pub fn extract_general_fields(&self, s: &Session, specs: &[FieldSpec]) -> Result<Partial<BTreeMap<String, String>>, GatewayError> {
        let mut fields = BTreeMap::new();
        let mut warnings = Vec::new();
        // Shapes differ per field, so validation happens after the batch.
        let queries: Vec<Query> = specs
            .iter()
            .map(|f| Query {
                id: s.id(&format!("general/{}", f.field_name)),
                question: f.render(s.firm_year),
                rules: f.answer_shape.format_rules().to_string(),
            })
            .collect();
        let raw_ok = |raw: &str| Ok::<String, ValidationError>(raw.to_string());
        let answers = self.ask_all(s, &queries, &raw_ok)?;
        let mut retry = Vec::new();
        for (i, (spec, a)) in specs.iter().zip(answers).enumerate() {
            let raw = a.map(|v| v.value).unwrap_or_default();
            match answer::validate(spec.answer_shape, &raw) {
                Ok(ans) => {
                    fields.insert(spec.field_name.clone(), field_text(&ans, &raw));
                }
                Err(_) => retry.push(i),
            }
        }
        if !retry.is_empty() {
            let reminder = self.templates.get("reminder");
            let qs: Vec<Query> = retry
                .iter()
                .map(|&i| Query {
                    id: format!("{}/retry", queries[i].id),
                    question: queries[i].question.clone(),
                    rules: format!("{} {reminder}", queries[i].rules),
                })
                .collect();
            let second = self.ask_all(s, &qs, &raw_ok)?;
            for (&i, a) in retry.iter().zip(second) {
                let spec = &specs[i];
                let raw = a.map(|v| v.value).unwrap_or_default();
                match answer::validate(spec.answer_shape, &raw) {
                    Ok(ans) => {
                        fields.insert(spec.field_name.clone(), field_text(&ans, &raw));
                    }
                    Err(e) => {
                        warnings.push(format!("{}/retry: {e}; stored as {NOT_PROVIDED}", queries[i].id));
                        fields.insert(spec.field_name.clone(), NOT_PROVIDED.to_string());
                    }
                }
            }
        }
        if specs.iter().any(|f| f.field_name == "gvkey") {
            warnings.push(format!("{}: {GVKEY_WARNING}", s.id("general/gvkey")));
        }
        Ok(Partial { value: fields, warnings })
    }

    /// Stage 2: the list of reportable segment names, then one query per
    /// (segment, measure). Segments named after places get the geographic
    /// axis.
    pub fn extract_reportable(&self, s: &Session) -> Result<Partial<Vec<SegmentRecord>>, PipelineError> {
        let list_q = Query {
            id: s.id("segments"),
            question: self.templates.get("segments").to_string(),
            rules: AnswerShape::DelimitedList.format_rules().to_string(),
        };
        let check_list = |raw: &str| match answer::validate(AnswerShape::DelimitedList, raw)? {
            Answer::NotProvided => Ok((Vec::new(), Vec::new())),
            Answer::List { items, warnings } => Ok((items, warnings)),
            _ => unreachable!("list shape"),
        };
        let listed = self.ask_one(s, list_q, &check_list)?;
        let (names, list_warnings) = listed.value;
        let list_id = listed.request_ids.last().cloned().unwrap_or_default();
        let mut warnings: Vec<String> = list_warnings.into_iter().map(|w| format!("{list_id}: {w}")).collect();
        if names.is_empty() {
            warnings.push(format!("{list_id}: no reportable segments named"));
        }

        let mut records: Vec<SegmentRecord> = names
            .iter()
            .map(|n| {
                let axis = if is_geographic_label(n) { Axis::Geographic } else { Axis::Business };
                let mut r = SegmentRecord::new(s.firm_year, n, axis);
                r.provenance = listed.request_ids.clone();
                r
            })
            .collect();
        let mut queries = Vec::new();
        let mut targets = Vec::new();
        for (i, name) in names.iter().enumerate() {
            for m in &self.measures {
                queries.push(Query {
                    id: s.id(&format!("measure/{i}/{}", m.key())),
                    question: self.templates.render("measure", &[("measure", m.phrase()), ("segment", name)]),
                    rules: AnswerShape::Monetary.format_rules().to_string(),
                });
                targets.push((i, m.clone()));
            }
        }
        let check_money = |raw: &str| match answer::validate(AnswerShape::Monetary, raw)? {
            Answer::Monetary(v) => Ok(Some(v)),
            _ => Ok(None),
        };
        for (res, (i, m)) in self.ask_all(s, &queries, &check_money)?.into_iter().zip(targets) {
            match res {
                Ok(Validated { value: Some(v), request_ids }) => {
                    records[i].measures.insert(m, v);
                    records[i].provenance.extend(request_ids);
                }
                Ok(Validated { value: None, request_ids }) => records[i].provenance.extend(request_ids),
                Err(e) => warnings.push(e.to_string()),
            }
        }
        Ok(Partial { value: records, warnings })
    }

    /// Stage 3a: one Yes/No query per reportable segment.
    pub fn detect_nested(&self, s: &Session, reportable: &[SegmentRecord]) -> Result<Partial<BTreeMap<String, bool>>, GatewayError> {
        let queries: Vec<Query> = reportable
            .iter()
            .enumerate()
            .map(|(i, r)| Query {
                id: s.id(&format!("nested_flag/{i}")),
                question: self.templates.render("nested_flag", &[("segment", &r.name)]),
                rules: AnswerShape::YesNo.format_rules().to_string(),
            })
            .collect();
        let mut flags = BTreeMap::new();
        let mut warnings = Vec::new();
        for (r, res) in reportable.iter().zip(self.ask_all(s, &queries, &answer::parse_yes_no)?) {
            match res {
                Ok(v) => {
                    flags.insert(r.name.clone(), v.value);
                }
                Err(e) => warnings.push(e.to_string()),
            }
        }
        Ok(Partial { value: flags, warnings })
    }

    /// Stage 3b: component names under `parent`, then each nested measure
    /// for all components in one query.
    pub fn extract_nested(
        &self,
        s: &Session,
        parent: &SegmentRecord,
        flags: &BTreeMap<String, bool>,
        reportable: &[SegmentRecord],
    ) -> Result<Partial<Vec<SegmentRecord>>, PipelineError> {
        if flags.get(&parent.name) != Some(&true) {
            return Err(PipelineError::PreconditionFailed(format!(
                "nested extraction requested for {:?}, which was not detected as having nested disclosures",
                parent.name
            )));
        }
        let idx = reportable.iter().position(|r| r.name == parent.name).unwrap_or(0);
        let names_q = Query {
            id: s.id(&format!("nested/{idx}")),
            question: self.templates.render("nested_names", &[("segment", &parent.name)]),
            rules: AnswerShape::DelimitedList.format_rules().to_string(),
        };
        let question = names_q.question.clone();
        let reportable_names: Vec<&str> = reportable.iter().map(|r| r.name.as_str()).collect();
        let check_names = |raw: &str| nested_names(raw, &parent.name, &reportable_names);
        let listed = self.ask_one(s, names_q, &check_names)?;
        let (children, list_warnings) = listed.value;
        let list_id = listed.request_ids.last().cloned().unwrap_or_default();
        let mut warnings: Vec<String> = list_warnings.into_iter().map(|w| format!("{list_id}: {w}")).collect();
        if children.is_empty() {
            warnings.push(format!("{list_id}: flagged as nested but no components named"));
            return Ok(Partial { value: Vec::new(), warnings });
        }
        let mut records: Vec<SegmentRecord> = children
            .iter()
            .map(|c| {
                let mut r = SegmentRecord::new(s.firm_year, c, infer_nested_axis(c, &question)).with_parent(&parent.name);
                r.provenance = listed.request_ids.clone();
                r
            })
            .collect();
        let joined = children.join("; ");
        let queries: Vec<Query> = self
            .nested_measures
            .iter()
            .map(|m| Query {
                id: s.id(&format!("nested_measure/{idx}/{}", m.key())),
                question: self.templates.render(
                    "nested_measure",
                    &[("measure", m.phrase()), ("segment", &parent.name), ("components", &joined)],
                ),
                rules: self.templates.get("nested_measure_rules").to_string(),
            })
            .collect();
        let check_pairs = |raw: &str| component_amounts(raw, &children);
        for (res, m) in self.ask_all(s, &queries, &check_pairs)?.into_iter().zip(&self.nested_measures) {
            match res {
                Ok(v) => {
                    for (i, amount) in v.value {
                        records[i].measures.insert(m.clone(), amount);
                        records[i].provenance.extend(v.request_ids.iter().cloned());
                    }
                }
                Err(e) => warnings.push(e.to_string()),
            }
        }
        Ok(Partial { value: records, warnings })
    }

    /// Full workflow for one uploaded filing. Only a classification failure
    /// is fatal; later stages degrade to warnings.
    pub fn run(&self, s: &Session, source: Option<BundleSource>) -> Result<ExtractionBundle, PipelineError> {
        let class = self.classify_segmentation(s)?;
        let mut bundle = ExtractionBundle::new(s.firm_year, class, &self.templates.version);
        bundle.source = source;

        let general = self.extract_general_fields(s, &self.templates.fields)?;
        bundle.general_fields.extend(general.value);
        bundle.warnings.extend(general.warnings);

        if bundle.is_multi_segment() {
            match self.extract_reportable(s) {
                Ok(p) => {
                    bundle.reportable = p.value;
                    bundle.warnings.extend(p.warnings);
                }
                Err(PipelineError::Validation { request_id, error, raw }) => {
                    bundle.warnings.push(format!("{request_id}: {error} (answer {raw:?}); no reportable segments extracted"));
                }
                Err(e) => return Err(e),
            }
            let flags = self.detect_nested(s, &bundle.reportable)?;
            bundle.nested_flags = flags.value;
            bundle.warnings.extend(flags.warnings);
            for parent in bundle.reportable.clone() {
                if bundle.nested_flags.get(&parent.name) != Some(&true) {
                    continue;
                }
                match self.extract_nested(s, &parent, &bundle.nested_flags, &bundle.reportable) {
                    Ok(p) => {
                        bundle.nested.extend(p.value);
                        bundle.warnings.extend(p.warnings);
                    }
                    Err(PipelineError::Validation { request_id, error, raw }) => {
                        bundle.warnings.push(format!("{request_id}: {error} (answer {raw:?}); nested records under {:?} dropped", parent.name));
                    }
                    Err(e) => return Err(e),
                }
            }
        }

        bundle.reconciliation = bundle.reconcile();
        for r in &bundle.reconciliation {
            if !r.difference.is_zero() {
                bundle.warnings.push(format!(
                    "{} {}: parent {} vs components {} ({} {}); residual may be an undisclosed category",
                    r.parent, r.measure, r.parent_value, r.children_sum, r.difference, r.scale.word()
                ));
            }
        }
        bundle.check_invariants()?;
        Ok(bundle)
    }

    pub fn run_document(&self, doc: &CachedDocument) -> Result<ExtractionBundle, PipelineError> {
        let s = self.open(doc)?;
        let source = BundleSource {
            accession_number: doc.filing.accession_number.clone(),
            content_hash: doc.content_hash,
            amended: doc.filing.amended,
        };
        let mut bundle = self.run(&s, Some(source))?;
        if doc.filing.amended {
            bundle.warnings.push(format!("no original 10-K on file; extracted from amendment {}", doc.filing.accession_number));
        }
        Ok(bundle)
    }
}

fn field_text(ans: &Answer, raw: &str) -> String {
    match ans {
        Answer::NotProvided => NOT_PROVIDED.to_string(),
        Answer::Scalar(s) => s.clone(),
        _ => raw.trim().to_string(),
    }
}

/// Component names, optionally written `Parent > Component`. A parent
/// other than the one asked about is a linkage error.
fn nested_names(raw: &str, parent: &str, reportable: &[&str]) -> Result<(Vec<String>, Vec<String>), ValidationError> {
    let (items, warnings) = match answer::validate(AnswerShape::DelimitedList, raw)? {
        Answer::NotProvided => return Ok((Vec::new(), Vec::new())),
        Answer::List { items, warnings } => (items, warnings),
        _ => unreachable!("list shape"),
    };
    let want = normalize_name(parent);
    let mut children = Vec::with_capacity(items.len());
    for item in items {
        match item.split_once('>') {
            Some((p, c)) => {
                let p = p.trim();
                if normalize_name(p) != want {
                    let known = reportable.iter().any(|r| normalize_name(r) == normalize_name(p));
                    return Err(ValidationError::Other(if known {
                        format!("component {:?} is attributed to {p:?}, not {parent:?}", c.trim())
                    } else {
                        format!("orphan component {:?}: parent {p:?} is not a reportable segment", c.trim())
                    }));
                }
                children.push(c.trim().to_string());
            }
            None => children.push(item),
        }
    }
    if children.iter().any(|c| c.is_empty()) {
        return Err(ValidationError::Other("empty component name".into()));
    }
    Ok((children, warnings))
}

/// `Name: $amount scale` pairs for the listed components.
fn component_amounts(raw: &str, children: &[String]) -> Result<Vec<(usize, MonetaryValue)>, ValidationError> {
    let items = match answer::validate(AnswerShape::DelimitedList, raw)? {
        Answer::NotProvided => return Ok(Vec::new()),
        Answer::List { items, .. } => items,
        _ => unreachable!("list shape"),
    };
    let mut out = Vec::new();
    for item in items {
        let (name, amount) = item
            .rsplit_once(':')
            .ok_or_else(|| ValidationError::Other(format!("expected Name: amount, got {item:?}")))?;
        let i = children
            .iter()
            .position(|c| normalize_name(c) == normalize_name(name))
            .ok_or_else(|| ValidationError::Other(format!("unknown component {:?}", name.trim())))?;
        if let Answer::Monetary(v) = answer::validate(AnswerShape::Monetary, amount)? {
            out.push((i, v));
        }
    }
    Ok(out)
}

pub fn bundle_file_name(fy: FirmYear) -> String {
    format!("{}_{}.bundle.json", fy.cik, fy.fiscal_year)
}

/// Pretty JSON with a trailing newline; byte-stable for equal bundles.
pub fn write_bundle(dir: &Path, bundle: &ExtractionBundle) -> Result<PathBuf, PipelineError> {
    let path = dir.join(bundle_file_name(bundle.firm_year));
    let mut json = serde_json::to_string_pretty(bundle).expect("bundle serializes");
    json.push('\n');
    std::fs::create_dir_all(dir).map_err(|source| PipelineError::Io { path: dir.into(), source })?;
    std::fs::write(&path, json).map_err(|source| PipelineError::Io { path: path.clone(), source })?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nested_name_linkage() {
        let rep = ["Digital Media", "Digital Experience"];
        let (c, _) = nested_names("Digital Media > Creative Cloud; Document Cloud", "Digital Media", &rep).unwrap();
        assert_eq!(c, vec!["Creative Cloud", "Document Cloud"]);
        let e = nested_names("Imaging > Stock", "Digital Media", &rep).unwrap_err();
        assert!(e.to_string().contains("orphan component \"Stock\""));
        assert!(nested_names("Digital Experience > Workfront", "Digital Media", &rep).is_err());
    }

    #[test]
    fn component_pairs() {
        let kids = vec!["Creative Cloud".to_string(), "Document Cloud".to_string()];
        let v = component_amounts("Creative Cloud: $12,649 million; Document Cloud: Not provided", &kids).unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].0, 0);
        assert!(component_amounts("Stock: $1 million", &kids).is_err());
        assert!(component_amounts("Creative Cloud $5", &kids).is_err());
    }
}
