//! Sampling and scoring for manual-audit evaluation groups.
//!
//! A group is a seed, a filing sample and a cell sample. Gold labels come
//! from humans; this module only draws samples and does the arithmetic.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::changes::normalize_name;
use crate::money::{Decimal, MonetaryValue, Scale};
use crate::segment::{ExtractionBundle, FirmYear, MeasureKind};
use crate::text::collapse_whitespace;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("requested {requested} items but only {available} are eligible")]
    SampleTooLarge { requested: usize, available: usize },
    #[error("coverage: {0}")]
    Coverage(String),
    #[error("invalid gold label: {0}")]
    InvalidGold(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tier {
    Reportable,
    Nested,
}

/// One extracted value addressed by firm-year, segment and measure.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellRef {
    pub cik: u64,
    pub fiscal_year: i32,
    pub segment: String,
    /// Measure key (`revenue`, `other:…`) or a general field name.
    pub measure: String,
    pub tier: Tier,
}

impl CellRef {
    pub fn firm_year(&self) -> FirmYear {
        FirmYear::new(self.cik, self.fiscal_year)
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn draw(len: usize, n: usize, seed: u64) -> Result<Vec<usize>, EvalError> {
    if n > len {
        return Err(EvalError::SampleTooLarge { requested: n, available: len });
    }
    let mut idx = rand::seq::index::sample(&mut rng(seed), len, n).into_vec();
    idx.sort_unstable();
    Ok(idx)
}

/// Uniform sample of `n` distinct firm-years, returned in corpus order.
/// Duplicate keys in `corpus` are collapsed first.
pub fn sample_filings(corpus: &[FirmYear], n: usize, seed: u64) -> Result<Vec<FirmYear>, EvalError> {
    let mut keys = corpus.to_vec();
    keys.sort_unstable();
    keys.dedup();
    Ok(draw(keys.len(), n, seed)?.into_iter().map(|i| keys[i]).collect())
}

/// Every extracted cell of `tier`, in a canonical order.
pub fn eligible_cells(bundles: &[ExtractionBundle], tier: Tier) -> Vec<CellRef> {
    let mut cells = Vec::new();
    for b in bundles {
        let records = match tier {
            Tier::Reportable => &b.reportable,
            Tier::Nested => &b.nested,
        };
        for r in records {
            for m in r.measures.keys() {
                cells.push(CellRef {
                    cik: b.firm_year.cik,
                    fiscal_year: b.firm_year.fiscal_year,
                    segment: r.name.clone(),
                    measure: m.key(),
                    tier,
                });
            }
        }
    }
    cells.sort();
    cells.dedup();
    cells
}

pub fn sample_cells(bundles: &[ExtractionBundle], n: usize, seed: u64, tier: Tier) -> Result<Vec<CellRef>, EvalError> {
    let cells = eligible_cells(bundles, tier);
    Ok(draw(cells.len(), n, seed)?.into_iter().map(|i| cells[i].clone()).collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldFiling {
    pub cik: u64,
    pub fiscal_year: i32,
    pub is_multi_segment: bool,
    pub has_nested: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldCell {
    pub cik: u64,
    pub fiscal_year: i32,
    pub segment: String,
    pub measure: String,
    pub gold_value: String,
    #[serde(default = "default_tier")]
    pub tier: Tier,
    /// Auditor verdict. When present it is taken as-is instead of comparing
    /// values.
    #[serde(default)]
    pub correct: Option<bool>,
}

fn default_tier() -> Tier {
    Tier::Reportable
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldLabelSet {
    pub group_id: String,
    #[serde(default)]
    pub seed: Option<u64>,
    pub filings: Vec<GoldFiling>,
    pub cells: Vec<GoldCell>,
}

impl GoldLabelSet {
    pub fn validate(&self) -> Result<(), EvalError> {
        for c in &self.cells {
            if c.gold_value.trim().is_empty() {
                return Err(EvalError::InvalidGold(format!(
                    "empty gold value for {}_{} {} {}",
                    c.cik, c.fiscal_year, c.segment, c.measure
                )));
            }
            if !self.filings.iter().any(|f| f.cik == c.cik && f.fiscal_year == c.fiscal_year) {
                return Err(EvalError::InvalidGold(format!(
                    "cell references {}_{} which is not among the group's filings",
                    c.cik, c.fiscal_year
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellVerdict {
    pub cell: CellRef,
    pub gold_value: String,
    pub extracted: Option<String>,
    pub correct: bool,
    /// True when the verdict came from the auditor rather than comparison.
    pub audited: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalReport {
    pub group_id: String,
    pub n_filings: usize,
    pub n_multi_manual: usize,
    pub n_multi_model: usize,
    pub primary_accuracy: Decimal,
    pub n_nested_manual: usize,
    pub n_nested_model: usize,
    pub nested_accuracy: Option<Decimal>,
    pub verdicts: Vec<CellVerdict>,
    pub notes: Vec<String>,
}

impl EvalReport {
    /// Accuracy recomputed from the shipped verdicts, for auditing.
    pub fn recompute(&self, tier: Tier) -> Option<Decimal> {
        accuracy(self.verdicts.iter().filter(|v| v.cell.tier == tier))
    }
}

fn accuracy<'a>(verdicts: impl Iterator<Item = &'a CellVerdict>) -> Option<Decimal> {
    let (mut hit, mut total) = (0i64, 0i64);
    for v in verdicts {
        total += 1;
        if v.correct {
            hit += 1;
        }
    }
    Decimal::from_int(hit).percent_of(&Decimal::from_int(total), 1)
}

enum Normalized {
    Money(Decimal),
    Text(String),
}

fn normalize_value(raw: &str) -> Normalized {
    match MonetaryValue::parse_answer(raw) {
        Ok(v) => match v.at_scale(Scale::Units) {
            Some(d) => Normalized::Money(d),
            None => Normalized::Text(collapse_whitespace(raw).to_lowercase()),
        },
        Err(_) => Normalized::Text(collapse_whitespace(raw).to_lowercase()),
    }
}

/// Extracted and gold values agree after monetary normalization; text
/// falls back to case- and whitespace-insensitive equality.
pub fn values_match(extracted: &str, gold: &str) -> bool {
    match (normalize_value(extracted), normalize_value(gold)) {
        (Normalized::Money(a), Normalized::Money(b)) => a == b,
        (Normalized::Text(a), Normalized::Text(b)) => a == b,
        _ => false,
    }
}

fn extracted_value(bundle: &ExtractionBundle, cell: &GoldCell) -> Option<String> {
    if cell.segment.trim().is_empty() || cell.segment == "*" {
        return bundle.general_fields.get(&cell.measure).cloned();
    }
    let records = match cell.tier {
        Tier::Reportable => &bundle.reportable,
        Tier::Nested => &bundle.nested,
    };
    let want = normalize_name(&cell.segment);
    let measure = MeasureKind::parse(&cell.measure).ok()?;
    records
        .iter()
        .find(|r| normalize_name(&r.name) == want)
        .and_then(|r| r.measures.get(&measure))
        .map(MonetaryValue::to_answer_string)
}

/// Scores model output against a group's gold labels.
///
/// Classification counts compare the number of filings flagged
/// multi-segment (and nested) by the model and by the auditor. A filing with
/// no bundle counts as not flagged. Cells whose filing has no bundle are
/// incorrect unless the auditor says otherwise.
pub fn score(gold: &GoldLabelSet, bundles: &[ExtractionBundle]) -> Result<EvalReport, EvalError> {
    gold.validate()?;
    let by_key: BTreeMap<FirmYear, &ExtractionBundle> = bundles.iter().map(|b| (b.firm_year, b)).collect();
    let mut notes = Vec::new();
    let (mut multi_manual, mut multi_model, mut nested_manual, mut nested_model) = (0, 0, 0, 0);
    for f in &gold.filings {
        let key = FirmYear::new(f.cik, f.fiscal_year);
        multi_manual += usize::from(f.is_multi_segment);
        nested_manual += usize::from(f.has_nested);
        match by_key.get(&key) {
            Some(b) => {
                multi_model += usize::from(b.is_multi_segment());
                nested_model += usize::from(b.has_nested());
            }
            None => notes.push(format!("no bundle for {key}; counted as not identified")),
        }
    }

    let reportable_cells = gold.cells.iter().filter(|c| c.tier == Tier::Reportable).count();
    if reportable_cells == 0 {
        return Err(EvalError::Coverage(format!("group {} has no reportable cell labels", gold.group_id)));
    }

    let mut verdicts = Vec::with_capacity(gold.cells.len());
    for c in &gold.cells {
        let key = FirmYear::new(c.cik, c.fiscal_year);
        let extracted = by_key.get(&key).and_then(|b| extracted_value(b, c));
        let (correct, audited) = match c.correct {
            Some(v) => (v, true),
            None => (extracted.as_deref().is_some_and(|e| values_match(e, &c.gold_value)), false),
        };
        verdicts.push(CellVerdict {
            cell: CellRef {
                cik: c.cik,
                fiscal_year: c.fiscal_year,
                segment: c.segment.clone(),
                measure: c.measure.clone(),
                tier: c.tier,
            },
            gold_value: c.gold_value.clone(),
            extracted,
            correct,
            audited,
        });
    }
    notes.push("cell samples are drawn from the group's own filings only".to_string());

    let primary_accuracy = accuracy(verdicts.iter().filter(|v| v.cell.tier == Tier::Reportable))
        .expect("non-empty reportable cells");
    let nested_accuracy = accuracy(verdicts.iter().filter(|v| v.cell.tier == Tier::Nested));
    Ok(EvalReport {
        group_id: gold.group_id.clone(),
        n_filings: gold.filings.len(),
        n_multi_manual: multi_manual,
        n_multi_model: multi_model,
        primary_accuracy,
        n_nested_manual: nested_manual,
        n_nested_model: nested_model,
        nested_accuracy,
        verdicts,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::segment::{Axis, SegmentRecord, SegmentationClass, SegmentationKind};
    use alloc::vec;
    use std::collections::BTreeSet;

    fn corpus(n: usize) -> Vec<FirmYear> {
        (0..n).map(|i| FirmYear::new(1000 + (i / 25) as u64, 2000 + (i % 25) as i32)).collect()
    }

    #[test]
    fn sample_is_distinct_and_deterministic() {
        let c = corpus(7653);
        let a = sample_filings(&c, 30, 7).unwrap();
        let b = sample_filings(&c, 30, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.iter().collect::<BTreeSet<_>>().len(), 30);
        assert_ne!(a, sample_filings(&c, 30, 8).unwrap());
        assert!(matches!(sample_filings(&c[..10], 11, 1), Err(EvalError::SampleTooLarge { .. })));
    }

    #[test]
    fn inclusion_rates_are_binomial() {
        let c = corpus(50);
        let (n, draws) = (10usize, 10_000u64);
        let mut hits = BTreeMap::new();
        for seed in 0..draws {
            for k in sample_filings(&c, n, seed).unwrap() {
                *hits.entry(k).or_insert(0u64) += 1;
            }
        }
        let p = n as f64 / c.len() as f64;
        let mean = draws as f64 * p;
        let sigma = libm::sqrt(draws as f64 * p * (1.0 - p));
        // Per-key 3σ with 50 keys would flag about one run in eight even for
        // a perfect sampler, so the band is widened to the same family-wise
        // level (z = 4.04) and backed by a chi-square check on the whole
        // histogram (49 dof, 99.9% critical value 85.35).
        let mut chi2 = 0.0;
        for k in &c {
            let h = *hits.get(k).unwrap_or(&0) as f64;
            assert!((h - mean).abs() <= 4.04 * sigma, "{k}: {h} vs {mean}±{sigma}");
            chi2 += (h - mean) * (h - mean) / (sigma * sigma);
        }
        assert!(chi2 < 85.35, "chi2 = {chi2}");
    }

    fn bundle(cik: u64, names: &[&str]) -> ExtractionBundle {
        let fy = FirmYear::new(cik, 2024);
        let class = SegmentationClass { kind: SegmentationKind::MultiSegment, raw_response: "multi_segment".into() };
        let mut b = ExtractionBundle::new(fy, class, "t");
        for (i, n) in names.iter().enumerate() {
            b.reportable.push(SegmentRecord::new(fy, n, Axis::Business).with_measure(
                MeasureKind::Revenue,
                MonetaryValue::new(Decimal::from_int(100 + i as i64), Scale::Millions),
            ));
        }
        b
    }

    #[test]
    fn nested_tier_without_records() {
        let b = vec![bundle(1, &["A", "B"])];
        assert!(matches!(sample_cells(&b, 1, 0, Tier::Nested), Err(EvalError::SampleTooLarge { available: 0, .. })));
        assert_eq!(sample_cells(&b, 2, 0, Tier::Reportable).unwrap().len(), 2);
    }

    #[test]
    fn scoring_uses_monetary_normalization() {
        assert!(values_match("$100 million", "100,000 thousand"));
        assert!(values_match("$100 million", "$0.1 billion"));
        assert!(!values_match("$100 million", "$101 million"));
        assert!(values_match("Digital  Media", "digital media"));

        let b = vec![bundle(1, &["A", "B"])];
        let gold = GoldLabelSet {
            group_id: "g".into(),
            seed: None,
            filings: vec![GoldFiling { cik: 1, fiscal_year: 2024, is_multi_segment: true, has_nested: true }],
            cells: vec![
                GoldCell { cik: 1, fiscal_year: 2024, segment: "A".into(), measure: "revenue".into(), gold_value: "$100 million".into(), tier: Tier::Reportable, correct: None },
                GoldCell { cik: 1, fiscal_year: 2024, segment: "B".into(), measure: "revenue".into(), gold_value: "$999 million".into(), tier: Tier::Reportable, correct: None },
                GoldCell { cik: 1, fiscal_year: 2024, segment: "B".into(), measure: "assets".into(), gold_value: "$5 million".into(), tier: Tier::Reportable, correct: Some(true) },
            ],
        };
        let r = score(&gold, &b).unwrap();
        assert_eq!(r.primary_accuracy.to_fixed(1), "66.7");
        assert_eq!(r.recompute(Tier::Reportable), Some(r.primary_accuracy));
        assert_eq!((r.n_multi_model, r.n_nested_model, r.n_nested_manual), (1, 0, 1));
        assert!(r.nested_accuracy.is_none());
    }

    #[test]
    fn empty_cells_is_coverage_error() {
        let gold = GoldLabelSet { group_id: "g".into(), ..Default::default() };
        assert!(matches!(score(&gold, &[]), Err(EvalError::Coverage(_))));
    }
}
