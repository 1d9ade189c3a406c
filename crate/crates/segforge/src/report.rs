//! Evaluation report rendering and gold-label loading.

use std::path::Path;

use segforge_core::eval::{EvalReport, GoldLabelSet};

use crate::compare::Table;

#[derive(Debug, thiserror::Error)]
pub enum GoldError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: String, source: serde_json::Error },
}

/// A gold file holds one label set or a list of them.
pub fn load_gold(path: &Path) -> Result<Vec<GoldLabelSet>, GoldError> {
    let p = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| GoldError::Io { path: p.clone(), source })?;
    match serde_json::from_str::<Vec<GoldLabelSet>>(&text) {
        Ok(sets) => Ok(sets),
        Err(_) => serde_json::from_str::<GoldLabelSet>(&text)
            .map(|s| vec![s])
            .map_err(|source| GoldError::Json { path: p, source }),
    }
}

pub const ROW_LABELS: [&str; 7] = [
    "Num of 10-K Filings",
    "Num of Firms with Multi-Segment Disclosure",
    "Model Identified Multi-Segment Filings",
    "Primary Segment Extraction Accuracy (%)",
    "Num of Observations with Nested Disclosure",
    "Model Identified Nested Disclosure",
    "Nested Segment Extraction Accuracy (%)",
];

/// One column per group, one row per statistic. Accuracies print with one
/// decimal; a group without nested cells shows "n/a".
pub fn eval_table(reports: &[EvalReport]) -> Table {
    let mut header = vec![String::new()];
    header.extend(reports.iter().map(|r| r.group_id.clone()));
    let rows = ROW_LABELS
        .iter()
        .enumerate()
        .map(|(i, label)| {
            let mut row = vec![label.to_string()];
            row.extend(reports.iter().map(|r| match i {
                0 => r.n_filings.to_string(),
                1 => r.n_multi_manual.to_string(),
                2 => r.n_multi_model.to_string(),
                3 => format!("{}%", r.primary_accuracy.to_fixed(1)),
                4 => r.n_nested_manual.to_string(),
                5 => r.n_nested_model.to_string(),
                _ => r.nested_accuracy.map(|a| format!("{}%", a.to_fixed(1))).unwrap_or_else(|| "n/a".into()),
            }));
            row
        })
        .collect();
    Table { header, rows }
}

/// Text table followed by each group's notes.
pub fn render_eval_text(reports: &[EvalReport]) -> String {
    let mut out = eval_table(reports).to_text();
    for r in reports {
        for n in &r.notes {
            out.push_str(&format!("note ({}): {n}\n", r.group_id));
        }
    }
    out
}
