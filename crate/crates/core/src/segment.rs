//! Segment records, extraction bundles and the invariants that gate them.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::answer::NOT_PROVIDED;
use crate::digest::ContentHash;
use crate::money::{Decimal, MonetaryValue, Scale};

/// Firm-year panel key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FirmYear {
    pub cik: u64,
    pub fiscal_year: i32,
}

impl FirmYear {
    pub fn new(cik: u64, fiscal_year: i32) -> Self {
        FirmYear { cik, fiscal_year }
    }
}

impl fmt::Display for FirmYear {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{}", self.cik, self.fiscal_year)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Business,
    Geographic,
    ProductOffering,
    Customer,
    Other,
}

impl Axis {
    pub fn as_str(self) -> &'static str {
        match self {
            Axis::Business => "business",
            Axis::Geographic => "geographic",
            Axis::ProductOffering => "product_offering",
            Axis::Customer => "customer",
            Axis::Other => "other",
        }
    }

    pub fn parse(s: &str) -> Option<Axis> {
        match s.trim().to_ascii_lowercase().as_str() {
            "business" => Some(Axis::Business),
            "geographic" => Some(Axis::Geographic),
            "product_offering" | "product" => Some(Axis::ProductOffering),
            "customer" => Some(Axis::Customer),
            "other" => Some(Axis::Other),
            _ => None,
        }
    }
}

/// Financial measure reported for a segment.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MeasureKind {
    Revenue,
    ProfitOrLoss,
    Assets,
    Other(String),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid measure kind {0:?}")]
pub struct MeasureKindError(pub String);

impl MeasureKind {
    pub fn other(label: &str) -> Result<MeasureKind, MeasureKindError> {
        let l = label.trim();
        if l.is_empty() {
            Err(MeasureKindError(label.to_string()))
        } else {
            Ok(MeasureKind::Other(l.to_string()))
        }
    }

    pub fn key(&self) -> String {
        match self {
            MeasureKind::Revenue => "revenue".to_string(),
            MeasureKind::ProfitOrLoss => "profit_or_loss".to_string(),
            MeasureKind::Assets => "assets".to_string(),
            MeasureKind::Other(label) => alloc::format!("other:{label}"),
        }
    }

    pub fn parse(s: &str) -> Result<MeasureKind, MeasureKindError> {
        match s.trim() {
            "revenue" => Ok(MeasureKind::Revenue),
            "profit_or_loss" => Ok(MeasureKind::ProfitOrLoss),
            "assets" => Ok(MeasureKind::Assets),
            other => match other.strip_prefix("other:") {
                Some(label) => MeasureKind::other(label),
                None => Err(MeasureKindError(s.to_string())),
            },
        }
    }

    /// Phrase used inside prompts.
    pub fn phrase(&self) -> &str {
        match self {
            MeasureKind::Revenue => "revenue",
            MeasureKind::ProfitOrLoss => "segment profit or loss measure",
            MeasureKind::Assets => "total assets",
            MeasureKind::Other(label) => label,
        }
    }
}

impl fmt::Display for MeasureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.key())
    }
}

impl Serialize for MeasureKind {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.key())
    }
}

impl<'de> Deserialize<'de> for MeasureKind {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        MeasureKind::parse(&s).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentRecord {
    pub firm_year: FirmYear,
    pub name: String,
    pub axis: Axis,
    pub measures: BTreeMap<MeasureKind, MonetaryValue>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent_name: Option<String>,
    #[serde(default)]
    pub provenance: Vec<String>,
}

impl SegmentRecord {
    pub fn new(firm_year: FirmYear, name: &str, axis: Axis) -> SegmentRecord {
        SegmentRecord {
            firm_year,
            name: name.trim().to_string(),
            axis,
            measures: BTreeMap::new(),
            parent_name: None,
            provenance: Vec::new(),
        }
    }

    pub fn with_measure(mut self, kind: MeasureKind, value: MonetaryValue) -> Self {
        self.measures.insert(kind, value);
        self
    }

    pub fn with_parent(mut self, parent: &str) -> Self {
        self.parent_name = Some(parent.to_string());
        self
    }

    pub fn is_nested(&self) -> bool {
        self.parent_name.is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentationKind {
    SingleUnit,
    MultiSegment,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentationClass {
    pub kind: SegmentationKind,
    pub raw_response: String,
}

/// The general variable catalog every bundle carries, in prompt order.
pub const GENERAL_FIELDS: &[&str] = &[
    "gvkey", "conm", "tic", "cik", "sic", "sics1", "sics2", "naics", "naicsh", "naicss1", "naicss2",
    "gind", "gsubind", "curcds", "isosrc", "srcs", "revt",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BundleSource {
    pub accession_number: String,
    pub content_hash: ContentHash,
    #[serde(default)]
    pub amended: bool,
}

/// `|parent − Σ children|` for one measure reported at a common scale.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reconciliation {
    pub parent: String,
    pub measure: MeasureKind,
    pub scale: Scale,
    pub parent_value: Decimal,
    pub children_sum: Decimal,
    pub difference: Decimal,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractionBundle {
    pub firm_year: FirmYear,
    pub template_version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<BundleSource>,
    pub classification: SegmentationClass,
    pub general_fields: BTreeMap<String, String>,
    pub reportable: Vec<SegmentRecord>,
    pub nested: Vec<SegmentRecord>,
    #[serde(default)]
    pub nested_flags: BTreeMap<String, bool>,
    #[serde(default)]
    pub reconciliation: Vec<Reconciliation>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BundleError {
    #[error("single-unit bundle {0} carries segment records")]
    SingleUnitWithSegments(FirmYear),
    #[error("nested record {child:?} names parent {parent:?}, which is not a reportable segment")]
    OrphanNested { child: String, parent: String },
    #[error("nested record {0:?} has no parent")]
    NestedWithoutParent(String),
    #[error("reportable record {0:?} must not have a parent")]
    ReportableWithParent(String),
    #[error("segment name is empty")]
    EmptyName,
    #[error("record {name:?} belongs to {found}, not {expected}")]
    WrongFirmYear { name: String, expected: FirmYear, found: FirmYear },
    #[error("general field set does not match the catalog (missing {missing:?}, unexpected {unexpected:?})")]
    FieldCatalog { missing: Vec<String>, unexpected: Vec<String> },
}

impl ExtractionBundle {
    /// Empty bundle with every catalog field set to "Not provided".
    pub fn new(firm_year: FirmYear, classification: SegmentationClass, template_version: &str) -> Self {
        ExtractionBundle {
            firm_year,
            template_version: template_version.to_string(),
            source: None,
            classification,
            general_fields: GENERAL_FIELDS
                .iter()
                .map(|f| (f.to_string(), NOT_PROVIDED.to_string()))
                .collect(),
            reportable: Vec::new(),
            nested: Vec::new(),
            nested_flags: BTreeMap::new(),
            reconciliation: Vec::new(),
            warnings: Vec::new(),
        }
    }

    pub fn is_multi_segment(&self) -> bool {
        self.classification.kind == SegmentationKind::MultiSegment
    }

    pub fn has_nested(&self) -> bool {
        !self.nested.is_empty() || self.nested_flags.values().any(|v| *v)
    }

    pub fn records(&self) -> impl Iterator<Item = &SegmentRecord> {
        self.reportable.iter().chain(self.nested.iter())
    }

    /// Consolidated revenue from the `revt` field, when it parses.
    pub fn total_revenue(&self) -> Option<MonetaryValue> {
        self.general_fields
            .get("revt")
            .and_then(|v| MonetaryValue::parse_answer(v).ok())
    }

    pub fn check_invariants(&self) -> Result<(), BundleError> {
        if self.classification.kind == SegmentationKind::SingleUnit
            && (!self.reportable.is_empty() || !self.nested.is_empty())
        {
            return Err(BundleError::SingleUnitWithSegments(self.firm_year));
        }
        let expected: BTreeSet<&str> = GENERAL_FIELDS.iter().copied().collect();
        let found: BTreeSet<&str> = self.general_fields.keys().map(String::as_str).collect();
        if expected != found {
            return Err(BundleError::FieldCatalog {
                missing: expected.difference(&found).map(|s| s.to_string()).collect(),
                unexpected: found.difference(&expected).map(|s| s.to_string()).collect(),
            });
        }
        for r in self.records() {
            if r.name.trim().is_empty() {
                return Err(BundleError::EmptyName);
            }
            if r.firm_year != self.firm_year {
                return Err(BundleError::WrongFirmYear {
                    name: r.name.clone(),
                    expected: self.firm_year,
                    found: r.firm_year,
                });
            }
        }
        if let Some(r) = self.reportable.iter().find(|r| r.parent_name.is_some()) {
            return Err(BundleError::ReportableWithParent(r.name.clone()));
        }
        check_linkage(&self.reportable, &self.nested)
    }

    /// Recomputes the nested-sum audit: one entry per (parent, measure)
    /// where the parent and all of its children report that measure at the
    /// same scale.
    pub fn reconcile(&self) -> Vec<Reconciliation> {
        let mut out = Vec::new();
        for parent in &self.reportable {
            let children: Vec<&SegmentRecord> = self
                .nested
                .iter()
                .filter(|n| n.parent_name.as_deref() == Some(parent.name.as_str()))
                .collect();
            if children.is_empty() {
                continue;
            }
            for (kind, pv) in &parent.measures {
                let mut sum = Decimal::ZERO;
                let mut complete = true;
                for c in &children {
                    match c.measures.get(kind) {
                        Some(cv) if cv.scale == pv.scale => match sum.checked_add(&cv.value) {
                            Some(s) => sum = s,
                            None => complete = false,
                        },
                        _ => complete = false,
                    }
                }
                if !complete {
                    continue;
                }
                let Some(diff) = pv.value.checked_sub(&sum) else { continue };
                out.push(Reconciliation {
                    parent: parent.name.clone(),
                    measure: kind.clone(),
                    scale: pv.scale,
                    parent_value: pv.value,
                    children_sum: sum,
                    difference: diff.abs(),
                });
            }
        }
        out
    }
}

/// Every nested record must name a parent among the reportable records.
pub fn check_linkage(reportable: &[SegmentRecord], nested: &[SegmentRecord]) -> Result<(), BundleError> {
    for n in nested {
        let Some(parent) = n.parent_name.as_deref() else {
            return Err(BundleError::NestedWithoutParent(n.name.clone()));
        };
        if !reportable.iter().any(|r| r.name == parent) {
            return Err(BundleError::OrphanNested { child: n.name.clone(), parent: parent.to_string() });
        }
    }
    Ok(())
}

const GEOGRAPHIC_TERMS: &[&str] = &[
    "americas", "america", "united states", "u.s.", "us", "canada", "mexico", "brazil", "latin",
    "europe", "emea", "middle east", "africa", "asia", "pacific", "apac", "china", "hong kong",
    "taiwan", "japan", "korea", "singapore", "india", "australia", "germany", "france",
    "united kingdom", "international", "domestic", "foreign", "rest of", "other countries", "region",
];

const CUSTOMER_TERMS: &[&str] = &[
    "customer", "government", "commercial", "enterprise", "consumer", "retail", "wholesale", "oem",
    "distributor", "channel", "federal", "institutional",
];

const PRODUCT_TERMS: &[&str] = &[
    "product", "offering", "cloud", "software", "hardware", "subscription", "license", "service",
    "platform", "device", "brand", "solution", "iphone", "mac", "ipad", "wearables", "content",
];

fn has_term(haystack_lower: &str, terms: &[&str]) -> bool {
    let words: Vec<&str> = haystack_lower
        .split(|c: char| !c.is_alphanumeric() && c != '.')
        .filter(|w| !w.is_empty())
        .collect();
    terms.iter().any(|t| {
        if t.contains(' ') {
            haystack_lower.contains(t)
        } else {
            words.iter().any(|w| w == t || (t.len() > 3 && w.starts_with(t)))
        }
    })
}

/// Geographic labels are recognized from a place lexicon.
pub fn is_geographic_label(label: &str) -> bool {
    has_term(&label.to_lowercase(), GEOGRAPHIC_TERMS)
}

/// Keyword classification of a nested category: the label decides first,
/// then the wording of the question that produced it.
pub fn infer_nested_axis(label: &str, question: &str) -> Axis {
    let l = label.to_lowercase();
    if has_term(&l, GEOGRAPHIC_TERMS) {
        return Axis::Geographic;
    }
    if has_term(&l, CUSTOMER_TERMS) {
        return Axis::Customer;
    }
    if has_term(&l, PRODUCT_TERMS) {
        return Axis::ProductOffering;
    }
    let q = question.to_lowercase();
    if q.contains("geograph") {
        Axis::Geographic
    } else if q.contains("customer") {
        Axis::Customer
    } else if q.contains("offering") || q.contains("product") {
        Axis::ProductOffering
    } else {
        Axis::Other
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn multi() -> SegmentationClass {
        SegmentationClass { kind: SegmentationKind::MultiSegment, raw_response: "Yes".into() }
    }

    fn m(v: i64) -> MonetaryValue {
        MonetaryValue::new(Decimal::from_int(v), Scale::Millions)
    }

    #[test]
    fn measure_kind_keys() {
        for k in [MeasureKind::Revenue, MeasureKind::ProfitOrLoss, MeasureKind::Assets, MeasureKind::Other("backlog".into())] {
            assert_eq!(MeasureKind::parse(&k.key()).unwrap(), k);
        }
        assert!(MeasureKind::other("  ").is_err());
        assert!(MeasureKind::parse("other:").is_err());
    }

    #[test]
    fn orphan_nested_is_rejected() {
        let fy = FirmYear::new(796343, 2024);
        let mut b = ExtractionBundle::new(fy, multi(), "t");
        b.reportable.push(SegmentRecord::new(fy, "Digital Media", Axis::Business));
        b.nested.push(SegmentRecord::new(fy, "Creative Cloud", Axis::ProductOffering).with_parent("Digital Media"));
        b.check_invariants().unwrap();
        b.nested.push(SegmentRecord::new(fy, "Stock", Axis::ProductOffering).with_parent("Creative"));
        assert!(matches!(b.check_invariants(), Err(BundleError::OrphanNested { .. })));
    }

    #[test]
    fn single_unit_must_be_empty() {
        let fy = FirmYear::new(320193, 2024);
        let mut b = ExtractionBundle::new(fy, SegmentationClass { kind: SegmentationKind::SingleUnit, raw_response: "No".into() }, "t");
        b.check_invariants().unwrap();
        b.reportable.push(SegmentRecord::new(fy, "Americas", Axis::Geographic));
        assert!(b.check_invariants().is_err());
    }

    #[test]
    fn field_catalog_enforced() {
        let fy = FirmYear::new(1, 2024);
        let mut b = ExtractionBundle::new(fy, multi(), "t");
        b.general_fields.remove("gvkey");
        assert!(matches!(b.check_invariants(), Err(BundleError::FieldCatalog { .. })));
    }

    #[test]
    fn reconciliation_reports_residual() {
        let fy = FirmYear::new(796343, 2024);
        let mut b = ExtractionBundle::new(fy, multi(), "t");
        b.reportable.push(SegmentRecord::new(fy, "Digital Media", Axis::Business).with_measure(MeasureKind::Revenue, m(15864)));
        b.nested.push(SegmentRecord::new(fy, "Creative Cloud", Axis::ProductOffering).with_parent("Digital Media").with_measure(MeasureKind::Revenue, m(12649)));
        b.nested.push(SegmentRecord::new(fy, "Document Cloud", Axis::ProductOffering).with_parent("Digital Media").with_measure(MeasureKind::Revenue, m(3200)));
        let rec = b.reconcile();
        assert_eq!(rec.len(), 1);
        assert_eq!(rec[0].difference, Decimal::from_int(15));
    }

    #[test]
    fn axis_keywords() {
        assert_eq!(infer_nested_axis("Creative Cloud", ""), Axis::ProductOffering);
        assert_eq!(infer_nested_axis("Rest of Asia Pacific", ""), Axis::Geographic);
        assert_eq!(infer_nested_axis("Government customers", ""), Axis::Customer);
        assert_eq!(infer_nested_axis("Publishing", "which revenue types"), Axis::Other);
        assert!(is_geographic_label("Greater China"));
        assert!(!is_geographic_label("Digital Media"));
    }
}
