//! Versioned prompt templates and the general-field catalog.

use std::collections::BTreeMap;

use segforge_core::answer::AnswerShape;
use segforge_core::segment::GENERAL_FIELDS;
use segforge_core::FirmYear;

const BUILTIN: &str = include_str!("../../prompts/v1.txt");

#[derive(Debug, thiserror::Error)]
pub enum TemplateError {
    #[error("template line {0}: expected `key = text`")]
    Syntax(usize),
    #[error("template key {0:?} is missing")]
    Missing(String),
    #[error("field {field}: unknown answer shape {shape:?}")]
    Shape { field: String, shape: String },
    #[error("field catalog mismatch: {0}")]
    Catalog(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldSpec {
    pub field_name: String,
    pub prompt_template: String,
    pub answer_shape: AnswerShape,
}

impl FieldSpec {
    pub fn render(&self, fy: FirmYear) -> String {
        fill(&self.prompt_template, &[("fiscal_year", &fy.fiscal_year.to_string()), ("cik", &fy.cik.to_string())])
    }
}

/// Substitutes `{name}` placeholders; unknown placeholders are left alone.
pub fn fill(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = template.to_string();
    for (k, v) in vars {
        out = out.replace(&format!("{{{k}}}"), v);
    }
    out
}

#[derive(Debug, Clone)]
pub struct Templates {
    pub version: String,
    entries: BTreeMap<String, String>,
    pub fields: Vec<FieldSpec>,
}

fn shape(s: &str) -> Option<AnswerShape> {
    match s {
        "scalar" => Some(AnswerShape::Scalar),
        "yes_no" => Some(AnswerShape::YesNo),
        "delimited_list" => Some(AnswerShape::DelimitedList),
        "monetary" => Some(AnswerShape::Monetary),
        _ => None,
    }
}

const REQUIRED: &[&str] = &[
    "preamble", "classify", "segments", "measure", "nested_flag", "nested_names", "nested_measure",
    "nested_measure_rules", "reminder", "changes", "changes_rules", "context_preamble", "region_member",
];

impl Templates {
    pub fn builtin() -> Templates {
        Templates::parse(BUILTIN).expect("built-in templates are valid")
    }

    pub fn parse(text: &str) -> Result<Templates, TemplateError> {
        let mut entries = BTreeMap::new();
        let mut fields = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once(" = ").ok_or(TemplateError::Syntax(i + 1))?;
            let (k, v) = (k.trim(), v.trim());
            if let Some(rest) = k.strip_prefix("field.") {
                let (name, sh) = rest.split_once('|').ok_or(TemplateError::Syntax(i + 1))?;
                let answer_shape =
                    shape(sh).ok_or_else(|| TemplateError::Shape { field: name.into(), shape: sh.into() })?;
                fields.push(FieldSpec { field_name: name.to_string(), prompt_template: v.to_string(), answer_shape });
            } else {
                entries.insert(k.to_string(), v.to_string());
            }
        }
        for r in REQUIRED.iter().chain(["version"].iter()) {
            if !entries.contains_key(*r) {
                return Err(TemplateError::Missing(r.to_string()));
            }
        }
        let names: Vec<&str> = fields.iter().map(|f| f.field_name.as_str()).collect();
        if names != GENERAL_FIELDS {
            return Err(TemplateError::Catalog(format!("{names:?}")));
        }
        let version = entries.remove("version").expect("checked");
        Ok(Templates { version, entries, fields })
    }

    pub fn get(&self, key: &str) -> &str {
        self.entries.get(key).map(String::as_str).expect("required template key")
    }

    pub fn render(&self, key: &str, vars: &[(&str, &str)]) -> String {
        fill(self.get(key), vars)
    }
}
