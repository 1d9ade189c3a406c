//! Regional aggregation of geographic segment disclosures.
//!
//! Region membership is declared data: a [`RegionScheme`] lists the
//! normalized labels that belong to the region (and optionally those that
//! do not). Totals are exact decimal sums at a common scale; shares of
//! consolidated revenue are rounded half-up to one decimal.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::money::{Decimal, MonetaryValue, Scale};
use crate::text::collapse_whitespace;

const LABEL_ALIASES: &[(&str, &str)] = &[
    ("incl", "including"),
    ("inc", "including"),
    ("hk", "hong kong"),
    ("prc", "china"),
    ("us", "united states"),
    ("usa", "united states"),
    ("u s", "united states"),
    ("uk", "united kingdom"),
    ("apac", "asia pacific"),
];

/// Lowercase, `&` → "and", punctuation removed, common abbreviations
/// expanded: "China incl. HK" and "China (including Hong Kong)" both become
/// "china including hong kong".
pub fn normalize_label(label: &str) -> String {
    let lowered = label.to_lowercase().replace('&', " and ");
    let cleaned: String = lowered
        .chars()
        .map(|c| if c.is_alphanumeric() { c } else { ' ' })
        .collect();
    let mut words: Vec<String> = Vec::new();
    let raw: Vec<&str> = cleaned.split_whitespace().collect();
    let mut i = 0;
    while i < raw.len() {
        if i + 1 < raw.len() && raw[i] == "u" && raw[i + 1] == "s" {
            words.push("united states".to_string());
            i += 2;
            continue;
        }
        let w = raw[i];
        match LABEL_ALIASES.iter().find(|(from, _)| *from == w) {
            Some((_, to)) => words.push(to.to_string()),
            None => words.push(w.to_string()),
        }
        i += 1;
    }
    collapse_whitespace(&words.join(" "))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionScheme {
    pub region_name: String,
    pub member_labels: BTreeSet<String>,
    /// Labels known to fall outside the region. Labels in neither set are
    /// ambiguous and need arbitration.
    #[serde(default)]
    pub non_member_labels: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SchemeError {
    #[error("region name is empty")]
    EmptyName,
    #[error("region {0:?} has no member labels")]
    NoMembers(String),
    #[error("label {0:?} is listed as both member and non-member")]
    Conflict(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Membership {
    Member,
    NonMember,
    Ambiguous,
}

impl RegionScheme {
    /// Builds a scheme with every label normalized.
    pub fn new<'a>(
        region_name: &str,
        members: impl IntoIterator<Item = &'a str>,
        non_members: impl IntoIterator<Item = &'a str>,
    ) -> Result<RegionScheme, SchemeError> {
        RegionScheme {
            region_name: region_name.to_string(),
            member_labels: members.into_iter().map(ToString::to_string).collect(),
            non_member_labels: non_members.into_iter().map(ToString::to_string).collect(),
        }
        .normalized()
    }

    /// Re-normalizes labels (as loaded from a file) and checks the scheme.
    pub fn normalized(self) -> Result<RegionScheme, SchemeError> {
        let name = self.region_name.trim().to_string();
        if name.is_empty() {
            return Err(SchemeError::EmptyName);
        }
        let members: BTreeSet<String> = self.member_labels.iter().map(|l| normalize_label(l)).filter(|l| !l.is_empty()).collect();
        if members.is_empty() {
            return Err(SchemeError::NoMembers(name));
        }
        let non: BTreeSet<String> = self.non_member_labels.iter().map(|l| normalize_label(l)).filter(|l| !l.is_empty()).collect();
        if let Some(c) = members.intersection(&non).next() {
            return Err(SchemeError::Conflict(c.clone()));
        }
        Ok(RegionScheme { region_name: name, member_labels: members, non_member_labels: non })
    }

    pub fn classify(&self, label: &str) -> Membership {
        let n = normalize_label(label);
        if self.member_labels.contains(&n) {
            Membership::Member
        } else if self.non_member_labels.contains(&n) {
            Membership::NonMember
        } else {
            Membership::Ambiguous
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionComponent {
    pub label: String,
    pub value: Decimal,
    pub scale: Scale,
}

/// One firm's regional exposure for one year.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionalExposure {
    pub components: Vec<RegionComponent>,
    pub region_total: Decimal,
    pub scale: Scale,
    /// Share of consolidated revenue in percent (one decimal); `None` when
    /// total revenue is unavailable.
    pub pct_of_total: Option<Decimal>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AggregateError {
    #[error("component {0:?} cannot be expressed at {1} scale exactly")]
    ScaleMismatch(String, Scale),
    #[error("numeric overflow while summing components")]
    Overflow,
}

/// Sums the member components exactly at the finest scale among them and
/// computes their share of `total_revenue`.
pub fn aggregate(
    members: &[(String, MonetaryValue)],
    total_revenue: Option<MonetaryValue>,
) -> Result<RegionalExposure, AggregateError> {
    let scale = members
        .iter()
        .map(|(_, v)| v.scale)
        .min()
        .or(total_revenue.map(|t| t.scale))
        .unwrap_or(Scale::Millions);
    let mut components = Vec::with_capacity(members.len());
    let mut total = Decimal::ZERO;
    for (label, v) in members {
        let value = v.at_scale(scale).ok_or_else(|| AggregateError::ScaleMismatch(label.clone(), scale))?;
        total = total.checked_add(&value).ok_or(AggregateError::Overflow)?;
        components.push(RegionComponent { label: label.clone(), value, scale });
    }
    let mut warnings = Vec::new();
    let pct_of_total = match total_revenue {
        None => {
            warnings.push("consolidated total revenue missing; share omitted".to_string());
            None
        }
        Some(t) => {
            // An empty region is 0.0% by convention, whatever the total.
            if members.is_empty() {
                Some(Decimal::ZERO)
            } else {
                let denom = t.at_scale(scale).ok_or_else(|| AggregateError::ScaleMismatch("total revenue".to_string(), scale))?;
                let pct = total.percent_of(&denom, 1);
                if let Some(p) = pct {
                    if p > Decimal::from_int(100) || p.is_negative() {
                        warnings.push(alloc::format!("share {p}% outside [0, 100]; check scales"));
                    }
                } else {
                    warnings.push("consolidated total revenue is zero; share omitted".to_string());
                }
                pct
            }
        }
    };
    Ok(RegionalExposure { components, region_total: total, scale, pct_of_total, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn mv(v: i64) -> MonetaryValue {
        MonetaryValue::new(Decimal::from_int(v), Scale::Millions)
    }

    fn asia() -> RegionScheme {
        RegionScheme::new(
            "Asia",
            ["Singapore", "China incl. Hong Kong", "Taiwan", "Japan", "Asia", "Rest of Asia", "China"],
            ["United States", "Other countries"],
        )
        .unwrap()
    }

    #[test]
    fn label_aliases() {
        assert_eq!(normalize_label("China incl. HK"), "china including hong kong");
        assert_eq!(normalize_label("China (including Hong Kong)"), "china including hong kong");
        assert_eq!(normalize_label("U.S."), "united states");
        assert_eq!(asia().classify("Rest of Asia"), Membership::Member);
        assert_eq!(asia().classify("United States"), Membership::NonMember);
        assert_eq!(asia().classify("Europe"), Membership::Ambiguous);
    }

    #[test]
    fn intel_2012_sum_is_exact() {
        let members = vec![
            ("Singapore".to_string(), mv(12622)),
            ("China incl. HK".to_string(), mv(8299)),
            ("Taiwan".to_string(), mv(9327)),
            ("Japan".to_string(), mv(4303)),
        ];
        let e = aggregate(&members, Some(mv(53341))).unwrap();
        assert_eq!(e.region_total, Decimal::from_int(34551));
        assert_eq!(e.pct_of_total, Some(Decimal::new(648, 1)));
    }

    #[test]
    fn empty_region_is_zero() {
        let e = aggregate(&[], Some(mv(100))).unwrap();
        assert_eq!(e.region_total, Decimal::ZERO);
        assert_eq!(e.pct_of_total, Some(Decimal::ZERO));
    }

    #[test]
    fn mixed_scales_and_missing_total() {
        let members = vec![
            ("A".to_string(), MonetaryValue::new(Decimal::from_int(2), Scale::Billions)),
            ("B".to_string(), mv(500)),
        ];
        let e = aggregate(&members, None).unwrap();
        assert_eq!(e.region_total, Decimal::from_int(2500));
        assert_eq!(e.scale, Scale::Millions);
        assert!(e.pct_of_total.is_none());
        assert_eq!(e.warnings.len(), 1);
    }

    #[test]
    fn scale_mismatch_is_flagged() {
        let e = aggregate(&[("A".to_string(), mv(150))], Some(mv(100))).unwrap();
        assert_eq!(e.pct_of_total, Some(Decimal::from_int(150)));
        assert_eq!(e.warnings.len(), 1);
    }

    #[test]
    fn schemes_validate() {
        assert!(RegionScheme::new("Asia", [], []).is_err());
        assert!(RegionScheme::new("", ["Japan"], []).is_err());
        assert!(matches!(RegionScheme::new("Asia", ["Japan"], ["japan"]), Err(SchemeError::Conflict(_))));
    }
}
