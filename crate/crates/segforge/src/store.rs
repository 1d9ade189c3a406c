//! Firm-year panel persisted as JSON Lines. Every `put` appends a full
//! revision; the newest revision per key wins on load.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use segforge_core::gaps::{self, FundamentalsRoster, GapReport};
use segforge_core::segment::BundleError;
use segforge_core::{Axis, ExtractionBundle, FirmYear, SegmentRecord, SegmentationKind};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("bundle for {key} rejected: {source}")]
    Schema { key: FirmYear, source: BundleError },
    #[error("{path}:{line}: {reason}")]
    Corrupt { path: PathBuf, line: usize, reason: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StoredKey {
    pub key: FirmYear,
    pub revision: u64,
}

#[derive(Serialize, Deserialize)]
struct PanelLine {
    revision: u64,
    bundle: ExtractionBundle,
}

#[derive(Default)]
struct State {
    rows: BTreeMap<FirmYear, (u64, ExtractionBundle)>,
}

pub struct SegmentStore {
    path: PathBuf,
    state: RwLock<State>,
    writer: Mutex<()>,
    /// Non-fatal problems found while loading (a torn final line).
    pub load_warnings: Vec<String>,
}

impl SegmentStore {
    /// Opens (or creates on first write) the panel at `path`.
    pub fn open(path: impl Into<PathBuf>) -> Result<SegmentStore, StoreError> {
        let path = path.into();
        let mut state = State::default();
        let mut load_warnings = Vec::new();
        if path.exists() {
            let io = |source| StoreError::Io { path: path.clone(), source };
            let lines: Vec<String> = BufReader::new(File::open(&path).map_err(io)?)
                .lines()
                .collect::<Result<_, _>>()
                .map_err(|source| StoreError::Io { path: path.clone(), source })?;
            let last = lines.len();
            for (i, line) in lines.iter().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                let parsed: PanelLine = match serde_json::from_str(line) {
                    Ok(p) => p,
                    // The final line may be an interrupted append; anything
                    // earlier is corruption.
                    Err(e) if i + 1 == last => {
                        load_warnings.push(format!("{}:{}: ignoring incomplete final line ({e})", path.display(), i + 1));
                        continue;
                    }
                    Err(e) => return Err(StoreError::Corrupt { path, line: i + 1, reason: e.to_string() }),
                };
                parsed.bundle.check_invariants().map_err(|e| StoreError::Corrupt {
                    path: path.clone(),
                    line: i + 1,
                    reason: e.to_string(),
                })?;
                let key = parsed.bundle.firm_year;
                let newer = state.rows.get(&key).is_none_or(|(r, _)| parsed.revision > *r);
                if newer {
                    state.rows.insert(key, (parsed.revision, parsed.bundle));
                }
            }
        }
        Ok(SegmentStore { path, state: RwLock::new(state), writer: Mutex::new(()), load_warnings })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Upserts `bundle`, superseding any previous revision for its key.
    pub fn put(&self, bundle: &ExtractionBundle) -> Result<StoredKey, StoreError> {
        let key = bundle.firm_year;
        bundle.check_invariants().map_err(|source| StoreError::Schema { key, source })?;
        let _w = self.writer.lock().expect("store writer poisoned");
        let revision = self.state.read().expect("store poisoned").rows.get(&key).map_or(1, |(r, _)| r + 1);
        let mut line = serde_json::to_string(&PanelLine { revision, bundle: bundle.clone() }).expect("bundle serializes");
        line.push('\n');
        let io = |source| StoreError::Io { path: self.path.clone(), source };
        if let Some(dir) = self.path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(io)?;
        }
        let mut f = OpenOptions::new().create(true).append(true).open(&self.path).map_err(io)?;
        f.write_all(line.as_bytes()).map_err(io)?;
        f.sync_data().map_err(io)?;
        // Readers only see the revision once it is on disk.
        self.state.write().expect("store poisoned").rows.insert(key, (revision, bundle.clone()));
        Ok(StoredKey { key, revision })
    }

    pub fn get(&self, key: FirmYear) -> Option<ExtractionBundle> {
        self.state.read().expect("store poisoned").rows.get(&key).map(|(_, b)| b.clone())
    }

    pub fn revision(&self, key: FirmYear) -> Option<u64> {
        self.state.read().expect("store poisoned").rows.get(&key).map(|(r, _)| *r)
    }

    pub fn len(&self) -> usize {
        self.state.read().expect("store poisoned").rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn keys(&self) -> Vec<FirmYear> {
        self.state.read().expect("store poisoned").rows.keys().copied().collect()
    }

    /// Latest bundles in key order.
    pub fn bundles(&self) -> Vec<ExtractionBundle> {
        self.state.read().expect("store poisoned").rows.values().map(|(_, b)| b.clone()).collect()
    }

    /// Records of `cik` within `years`, optionally limited to one axis, in
    /// (year, reportable before nested, name) order.
    pub fn query_segments(&self, cik: u64, years: RangeInclusive<i32>, axis: Option<Axis>) -> Vec<SegmentRecord> {
        let st = self.state.read().expect("store poisoned");
        let lo = FirmYear::new(cik, *years.start());
        let hi = FirmYear::new(cik, *years.end());
        let mut out: Vec<SegmentRecord> = st
            .rows
            .range(lo..=hi)
            .flat_map(|(_, (_, b))| b.records())
            .filter(|r| axis.is_none_or(|a| r.axis == a))
            .cloned()
            .collect();
        out.sort_by(|a, b| {
            (a.firm_year.fiscal_year, a.is_nested(), &a.name).cmp(&(b.firm_year.fiscal_year, b.is_nested(), &b.name))
        });
        out
    }

    /// Roster firm-years with nothing extracted: no reportable segments and
    /// no single-unit classification.
    pub fn gap_report(&self, roster: &FundamentalsRoster) -> GapReport {
        let st = self.state.read().expect("store poisoned");
        let mut with_segments = BTreeSet::new();
        let mut single_unit = BTreeSet::new();
        for (key, (_, b)) in &st.rows {
            if !b.reportable.is_empty() {
                with_segments.insert(*key);
            } else if b.classification.kind == SegmentationKind::SingleUnit {
                single_unit.insert(*key);
            }
        }
        gaps::gap_report(roster, &with_segments, &single_unit)
    }

    /// One CSV row per (record, measure); records without measures get one
    /// row with empty measure columns.
    pub fn export_csv(&self, path: &Path) -> Result<(), StoreError> {
        let csv_err = |source| StoreError::Csv { path: path.to_path_buf(), source };
        let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
        w.write_record(SEGMENTS_CSV_HEADER).map_err(csv_err)?;
        for b in self.bundles() {
            for r in b.records() {
                let fixed = [r.firm_year.cik.to_string(), r.firm_year.fiscal_year.to_string()];
                let (name, axis, parent) = (r.name.as_str(), r.axis.as_str(), r.parent_name.as_deref().unwrap_or(""));
                if r.measures.is_empty() {
                    w.write_record([&fixed[0], &fixed[1], name, axis, parent, "", "", ""]).map_err(csv_err)?;
                }
                for (m, v) in &r.measures {
                    w.write_record([
                        &fixed[0],
                        &fixed[1],
                        name,
                        axis,
                        parent,
                        &m.key(),
                        &v.value.to_string(),
                        v.scale.as_str(),
                    ])
                    .map_err(csv_err)?;
                }
            }
        }
        w.flush().map_err(|source| StoreError::Io { path: path.to_path_buf(), source })
    }
}

pub const SEGMENTS_CSV_HEADER: [&str; 8] =
    ["cik", "fiscal_year", "name", "axis", "parent_name", "measure_kind", "value", "scale"];

#[derive(Deserialize)]
struct RosterRow {
    cik: u64,
    fiscal_year: i32,
}

/// Reads a `cik,fiscal_year` CSV. Duplicate rows collapse.
pub fn read_roster(path: &Path) -> Result<FundamentalsRoster, StoreError> {
    let csv_err = |source| StoreError::Csv { path: path.to_path_buf(), source };
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(csv_err)?;
    let mut pairs = Vec::new();
    for row in r.deserialize::<RosterRow>() {
        let row = row.map_err(csv_err)?;
        pairs.push((row.cik, row.fiscal_year));
    }
    Ok(FundamentalsRoster::from_pairs(pairs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use segforge_core::{Decimal, MeasureKind, MonetaryValue, Scale, SegmentationClass};

    fn bundle(cik: u64, fy: i32, names: &[&str]) -> ExtractionBundle {
        let key = FirmYear::new(cik, fy);
        let kind = if names.is_empty() { SegmentationKind::SingleUnit } else { SegmentationKind::MultiSegment };
        let mut b = ExtractionBundle::new(key, SegmentationClass { kind, raw_response: String::new() }, "t");
        for n in names {
            b.reportable.push(
                SegmentRecord::new(key, n, Axis::Business)
                    .with_measure(MeasureKind::Revenue, MonetaryValue::new(Decimal::from_int(10), Scale::Millions)),
            );
        }
        b
    }

    #[test]
    fn upsert_bumps_revision_and_survives_reopen() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("panel.jsonl");
        let s = SegmentStore::open(&path).unwrap();
        assert_eq!(s.put(&bundle(8818, 2023, &["A"])).unwrap().revision, 1);
        let b2 = bundle(8818, 2023, &["Materials Group", "Solutions Group"]);
        assert_eq!(s.put(&b2).unwrap().revision, 2);
        assert_eq!(s.len(), 1);
        let again = SegmentStore::open(&path).unwrap();
        assert_eq!(again.get(FirmYear::new(8818, 2023)), Some(b2));
        assert_eq!(again.revision(FirmYear::new(8818, 2023)), Some(2));
    }

    #[test]
    fn torn_tail_is_ignored() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("panel.jsonl");
        let s = SegmentStore::open(&path).unwrap();
        s.put(&bundle(1, 2020, &["A"])).unwrap();
        std::fs::OpenOptions::new().append(true).open(&path).unwrap().write_all(b"{\"revision\":2,\"bun").unwrap();
        let again = SegmentStore::open(&path).unwrap();
        assert_eq!(again.len(), 1);
        assert_eq!(again.load_warnings.len(), 1);
    }

    #[test]
    fn orphan_nested_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let s = SegmentStore::open(dir.path().join("p.jsonl")).unwrap();
        let mut b = bundle(796343, 2024, &["Digital Media"]);
        b.nested.push(SegmentRecord::new(b.firm_year, "Stock", Axis::ProductOffering).with_parent("Imaging"));
        assert!(matches!(s.put(&b), Err(StoreError::Schema { .. })));
        assert!(s.is_empty());
    }

    #[test]
    fn csv_export_has_one_row_per_measure() {
        let dir = tempfile::tempdir().unwrap();
        let s = SegmentStore::open(dir.path().join("p.jsonl")).unwrap();
        let mut b = bundle(796343, 2024, &["Digital Media"]);
        b.nested.push(SegmentRecord::new(b.firm_year, "Creative Cloud", Axis::ProductOffering).with_parent("Digital Media"));
        s.put(&b).unwrap();
        let out = dir.path().join("segments.csv");
        s.export_csv(&out).unwrap();
        let text = std::fs::read_to_string(out).unwrap();
        assert_eq!(
            text,
            "cik,fiscal_year,name,axis,parent_name,measure_kind,value,scale\n\
             796343,2024,Digital Media,business,,revenue,10,millions\n\
             796343,2024,Creative Cloud,product_offering,Digital Media,,,\n"
        );
    }
}
