//! Coverage gaps between a fundamentals roster and the stored panel.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::segment::FirmYear;

/// Firm-years a fundamentals source says exist.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FundamentalsRoster {
    pub firm_years: BTreeSet<FirmYear>,
}

impl FundamentalsRoster {
    pub fn from_pairs(pairs: impl IntoIterator<Item = (u64, i32)>) -> Self {
        FundamentalsRoster { firm_years: pairs.into_iter().map(|(c, y)| FirmYear::new(c, y)).collect() }
    }

    pub fn len(&self) -> usize {
        self.firm_years.len()
    }

    pub fn is_empty(&self) -> bool {
        self.firm_years.is_empty()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GapReport {
    /// Roster firm-years with no usable segment record, grouped by year.
    pub missing_by_year: BTreeMap<i32, Vec<u64>>,
    /// Covered because the filer reports a single unit, not segments.
    pub single_unit: Vec<FirmYear>,
    pub roster_size: usize,
    pub covered: usize,
    /// Stored firm-years absent from the roster; informational.
    pub not_in_roster: Vec<FirmYear>,
}

impl GapReport {
    pub fn missing(&self) -> impl Iterator<Item = FirmYear> + '_ {
        self.missing_by_year.iter().flat_map(|(y, ciks)| ciks.iter().map(move |c| FirmYear::new(*c, *y)))
    }

    pub fn missing_count(&self) -> usize {
        self.missing_by_year.values().map(Vec::len).sum()
    }
}

/// `roster − (with_segments ∪ single_unit)`. A firm-year counts as covered
/// when it has at least one segment record or a single-unit classification.
pub fn gap_report(
    roster: &FundamentalsRoster,
    with_segments: &BTreeSet<FirmYear>,
    single_unit: &BTreeSet<FirmYear>,
) -> GapReport {
    let mut report = GapReport { roster_size: roster.len(), ..GapReport::default() };
    for fy in &roster.firm_years {
        if with_segments.contains(fy) {
            report.covered += 1;
        } else if single_unit.contains(fy) {
            report.covered += 1;
            report.single_unit.push(*fy);
        } else {
            report.missing_by_year.entry(fy.fiscal_year).or_default().push(fy.cik);
        }
    }
    report.not_in_roster = with_segments
        .union(single_unit)
        .filter(|fy| !roster.firm_years.contains(fy))
        .copied()
        .collect();
    report
}
