//! Acceptance suite: one PASS/FAIL line per criterion, each under its own
//! runtime limit. Runs without the libtest harness so the lines always
//! print; exits non-zero if any criterion fails.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use segforge::compare::{self, Grounding};
use segforge::gateway::{FileHandle, Gateway, PromptRequest, Script, ScriptEntry, ScriptedBackend};
use segforge::pipeline::{Pipeline, Templates};
use segforge::report;
use segforge::store::SegmentStore;
use segforge_core::changes::{detect_changes, LinkageClass, ReasonClass};
use segforge_core::eval::{self, GoldCell, GoldFiling, GoldLabelSet, Tier};
use segforge_core::geo::RegionScheme;
use segforge_core::retrieval::{build_index, ChunkConfig, ChunkFilter, ChunkIndex, RankParams};
use segforge_core::segment::{ExtractionBundle, SegmentationClass, SegmentationKind};
use segforge_core::{Axis, ContentHash, Decimal, FirmYear, MeasureKind, MonetaryValue, Scale, SegmentRecord};

type Outcome = Result<(), String>;

macro_rules! check {
    ($cond:expr, $($msg:tt)+) => {
        if !($cond) {
            return Err(format!($($msg)+));
        }
    };
}

fn pipeline(gw: &Gateway) -> Pipeline<'_> {
    Pipeline::new(gw, vec![MeasureKind::Revenue, MeasureKind::ProfitOrLoss, MeasureKind::Assets], vec![MeasureKind::Revenue], 5)
}

/// Variable, prompt and result for the Apple FY2024 general variables.
const APPLE_GENERAL: [(&str, &str, &str); 17] = [
    ("gvkey", "What is the GVKEY for the firm in this year?", "6614"),
    ("conm", "What is the exact legal name of the firm for this year?", "Apple Inc."),
    ("tic", "What stock ticker is associated with the firm for this year?", "AAPL"),
    ("cik", "What SEC CIK number is associated with the firm in this year?", "320193"),
    ("sic", "What is the primary SIC code for the geographic segment of the firm in this year?", "3571"),
    ("sics1", "Does the geographic segment have a different SIC or industry code from the consolidated firm in this year?", "No"),
    ("sics2", "What additional SIC classification is reported for the geographic segment in this year?", "7372"),
    ("naics", "What is the primary NAICS code for the firm in this year?", "334111"),
    ("naicsh", "What NAICS hierarchy or description is provided for the firm in this year?", "Not provided"),
    ("naicss1", "What NAICS code is associated with the firm in this year?", "334111"),
    ("naicss2", "What additional NAICS classification is reported for the firm in this year?", "334220"),
    ("gind", "What GICS industry does the firm belong to in this year?", "Technology Hardware, Storage & Peripherals"),
    ("gsubind", "What GICS sub-industry does the firm belong to in this year?", "Technology Hardware, Storage & Peripherals"),
    ("curcds", "In what currency are the segment amounts for the firm in this year presented?", "U.S. dollars"),
    ("isosrc", "What is the ISO currency source or reference associated with the segment disclosures for this year?", "U.S. dollar"),
    ("srcs", "What is the source document used for the firm?", "Form 10-K"),
    ("revt", "What is the consolidated total revenue of the firm in this year?", "$391,035 million"),
];

fn c1_general_field_replay() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let client = common::edgar(tmp.path());
    let gw = common::scripted_gateway();
    let b = pipeline(&gw).run_document(&common::fetch(&client, 320193, 2024)).map_err(|e| e.to_string())?;
    check!(b.general_fields.len() == 17, "{} general fields", b.general_fields.len());
    for (field, _, want) in APPLE_GENERAL {
        let got = b.general_fields.get(field).map(String::as_str);
        check!(got == Some(want), "{field}: {got:?} != {want:?}");
    }
    let questions: BTreeSet<String> = gw.transcript().into_iter().map(|t| t.question).collect();
    for (field, prompt, _) in APPLE_GENERAL {
        check!(questions.contains(prompt), "prompt for {field} not asked verbatim");
    }
    let revt = b.total_revenue().ok_or("revt did not parse")?;
    check!(revt == MonetaryValue::new(Decimal::from_int(391_035), Scale::Millions), "revt parsed to {revt:?}");
    Ok(())
}

fn c2_nested_hierarchy() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let client = common::edgar(tmp.path());
    let gw = common::scripted_gateway();
    let b = pipeline(&gw).run_document(&common::fetch(&client, 796343, 2024)).map_err(|e| e.to_string())?;
    let names: Vec<&str> = b.reportable.iter().map(|r| r.name.as_str()).collect();
    check!(names == ["Digital Media", "Digital Experience", "Publishing and Advertising"], "reportable {names:?}");
    for child in ["Creative Cloud", "Document Cloud"] {
        let r = b.nested.iter().find(|r| r.name == child).ok_or(format!("no nested {child}"))?;
        check!(r.parent_name.as_deref() == Some("Digital Media"), "{child} parent {:?}", r.parent_name);
    }
    check!(b.nested.iter().all(|r| r.parent_name.as_deref() == Some("Digital Media")), "nested outside Digital Media");
    b.check_invariants().map_err(|e| e.to_string())?;
    Ok(())
}

fn c3_change_detection() -> Outcome {
    let d = detect_changes(&common::avy_table()).map_err(|e| e.to_string())?;
    let changed: BTreeSet<i32> = d.rows.iter().filter(|r| r.changed).map(|r| r.fiscal_year).collect();
    let want: BTreeSet<i32> = [2004, 2005, 2012, 2014, 2016, 2022].into();
    check!(changed == want, "changed years {changed:?}");
    check!(d.rows.len() == 24 && d.gaps.is_empty(), "{} rows, gaps {:?}", d.rows.len(), d.gaps);
    Ok(())
}

fn c4_grounded_explanation() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let client = common::edgar(tmp.path());
    let idx = build_index(&common::parsed(&client, 8818, 2001..=2024), &ChunkConfig::default(), RankParams::default())
        .map_err(|e| e.to_string())?;
    let gw = common::scripted_gateway();
    let rep = compare::explain_changes(8818, &common::avy_table(), &idx, &gw, &Templates::builtin(), &Grounding::default())
        .map_err(|e| e.to_string())?;
    let row = |y: i32| rep.rows.iter().find(|r| r.fiscal_year == y).ok_or(format!("no row {y}"));
    let r14 = row(2014)?;
    check!(r14.reason == Some(ReasonClass::NewSegmentAdded), "2014 reason {:?}", r14.reason);
    let r22 = row(2022)?;
    check!(r22.linkage == Some(LinkageClass::Partial), "2022 linkage {:?}", r22.linkage);
    let merged = r22.mapping.iter().any(|l| {
        let prior: BTreeSet<&str> = l.prior.iter().map(String::as_str).collect();
        prior == BTreeSet::from(["Label and Graphic Materials", "Industrial and Healthcare Materials"])
            && l.current.as_deref() == Some("Materials Group")
    });
    check!(merged, "2022 mapping {:?}", r22.mapping);
    for r in rep.rows.iter().filter(|r| r.changed) {
        check!(!r.evidence.is_empty(), "{} has no evidence", r.fiscal_year);
        check!(r.evidence.iter().all(|id| idx.chunk(id).is_some()), "{} cites unknown chunks", r.fiscal_year);
    }
    check!(rep.rows.iter().filter(|r| !r.changed).all(|r| r.reason.is_none()), "unchanged year explained");
    Ok(())
}

/// Year, Asia sales and share of total for INTC then TXN, as published.
const ASIA_PUBLISHED: [(i32, i64, i64, f64, f64); 13] = [
    (2012, 34_551, 9_165, 64.8, 71.5),
    (2013, 33_500, 8_442, 63.6, 69.2),
    (2014, 34_501, 8_947, 61.8, 68.6),
    (2015, 33_573, 9_037, 60.7, 69.5),
    (2016, 36_710, 9_064, 61.8, 67.8),
    (2017, 39_599, 9_873, 63.1, 66.0),
    (2018, 44_879, 10_109, 63.3, 64.1),
    (2019, 45_734, 9_446, 63.6, 65.7),
    (2020, 49_707, 10_275, 63.8, 71.1),
    (2021, 52_475, 8_072, 66.4, 71.7),
    (2022, 35_076, 8_412, 55.6, 42.0),
    (2023, 30_323, 6_796, 55.9, 38.8),
    (2024, 33_523, 5_905, 63.1, 37.8),
];

fn c5_regional_aggregation() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let panel = tmp.path().join("panel.jsonl");
    std::fs::copy(common::fixtures().join("panel/intc_txn.jsonl"), &panel).map_err(|e| e.to_string())?;
    let store = SegmentStore::open(&panel).map_err(|e| e.to_string())?;
    let text = std::fs::read_to_string(common::fixtures().join("asia.scheme.json")).map_err(|e| e.to_string())?;
    let scheme = serde_json::from_str::<RegionScheme>(&text).map_err(|e| e.to_string())?.normalized().map_err(|e| e.to_string())?;
    let al = compare::align_regions(50863, 97476, &scheme, 2012..=2024, &store, None).map_err(|e| e.to_string())?;
    check!(al.rows.len() == 13, "{} rows", al.rows.len());
    let pct = |p: Option<Decimal>| p.map(|d| d.to_fixed(1).parse::<f64>().unwrap());
    for (row, (year, intc, txn, pi, pt)) in al.rows.iter().zip(ASIA_PUBLISHED) {
        check!(row.fiscal_year == year, "year {} != {year}", row.fiscal_year);
        check!(row.firm_a.region_total == Decimal::from_int(intc), "INTC {year}: {:?}", row.firm_a.region_total);
        check!(row.firm_b.region_total == Decimal::from_int(txn), "TXN {year}: {:?}", row.firm_b.region_total);
        for (label, got, want) in [("INTC", pct(row.firm_a.pct_of_total), pi), ("TXN", pct(row.firm_b.pct_of_total), pt)] {
            let got = got.ok_or(format!("{label} {year}: no share"))?;
            check!((got - want).abs() <= 0.1 + 1e-9, "{label} {year}: {got}% vs {want}%");
        }
    }
    Ok(())
}

fn c6_gap_report() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let store = SegmentStore::open(tmp.path().join("panel.jsonl")).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(1506307);
    let universe: Vec<(u64, i32)> = (0..40u64).flat_map(|c| (2015..2021).map(move |y| (100 + c, y))).collect();
    let mut roster: BTreeSet<(u64, i32)> = universe.iter().copied().filter(|_| rng.gen_bool(0.7)).collect();
    roster.insert((1506307, 2017));
    let mut covered = BTreeSet::new();
    for &(cik, fy) in &universe {
        if !rng.gen_bool(0.6) {
            continue;
        }
        let key = FirmYear::new(cik, fy);
        let kind = if rng.gen_bool(0.15) { SegmentationKind::SingleUnit } else { SegmentationKind::MultiSegment };
        let mut b = ExtractionBundle::new(key, SegmentationClass { kind, raw_response: String::new() }, "test");
        // Some multi-segment bundles came back without any segment.
        if kind == SegmentationKind::MultiSegment && rng.gen_bool(0.9) {
            b.reportable.push(SegmentRecord::new(key, "Alpha", Axis::Business));
        }
        if kind == SegmentationKind::SingleUnit || !b.reportable.is_empty() {
            covered.insert((cik, fy));
        }
        store.put(&b).map_err(|e| e.to_string())?;
    }
    let rep = store.gap_report(&segforge_core::gaps::FundamentalsRoster::from_pairs(roster.iter().copied()));
    let mut oracle: BTreeMap<i32, Vec<u64>> = BTreeMap::new();
    for &(cik, fy) in roster.difference(&covered) {
        oracle.entry(fy).or_default().push(cik);
    }
    for v in oracle.values_mut() {
        v.sort();
    }
    check!(rep.missing_by_year == oracle, "gap report differs from set difference");
    check!(rep.missing_count() == roster.difference(&covered).count(), "total_missing");
    check!(rep.missing_by_year.get(&2017).is_some_and(|v| v.contains(&1506307)), "Kinder Morgan 2017 not flagged");
    Ok(())
}

/// BM25 over whitespace-free tokens, recomputed from chunk text alone.
fn oracle_scores(index: &ChunkIndex, query: &str) -> Vec<f64> {
    let tok = |s: &str| -> Vec<String> {
        s.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty()).map(str::to_lowercase).collect()
    };
    let docs: Vec<Vec<String>> = index.chunks.iter().map(|c| tok(&c.text)).collect();
    let n = docs.len() as f64;
    let avgdl = docs.iter().map(Vec::len).sum::<usize>() as f64 / n;
    let mut seen = BTreeSet::new();
    let q: Vec<String> = tok(query).into_iter().filter(|t| seen.insert(t.clone())).collect();
    let df: Vec<f64> = q.iter().map(|t| docs.iter().filter(|d| d.contains(t)).count() as f64).collect();
    let RankParams { k1, b, segment_boost } = index.params;
    docs.iter()
        .zip(&index.chunks)
        .map(|(d, c)| {
            let mut s = 0.0;
            for (t, df) in q.iter().zip(&df) {
                let f = d.iter().filter(|w| *w == t).count() as f64;
                if f > 0.0 {
                    let idf = (1.0 + (n - df + 0.5) / (df + 0.5)).ln();
                    s += idf * (f * (k1 + 1.0)) / (f + k1 * (1.0 - b + b * d.len() as f64 / avgdl));
                }
            }
            if c.is_segment_region {
                s * segment_boost
            } else {
                s
            }
        })
        .collect()
}

fn c7_retrieval() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let client = common::edgar(tmp.path());
    let mut filings = common::parsed(&client, 8818, 2001..=2024);
    filings.extend(common::parsed(&client, 320193, [2024]));
    filings.extend(common::parsed(&client, 796343, [2024]));
    let idx = build_index(&filings, &ChunkConfig::default(), RankParams::default()).map_err(|e| e.to_string())?;
    check!(!idx.is_empty() && idx.len() <= 500, "corpus has {} chunks", idx.len());
    let vocab: Vec<&String> = idx.doc_freq.keys().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let pos: BTreeMap<&str, usize> = idx.chunks.iter().enumerate().map(|(i, c)| (c.chunk_id.as_str(), i)).collect();
    for _ in 0..20 {
        let n = rng.gen_range(1..6);
        let query = (0..n).map(|_| vocab.choose(&mut rng).unwrap().as_str()).collect::<Vec<_>>().join(" ");
        let want = oracle_scores(&idx, &query);
        let got = idx.retrieve(&query, idx.len(), &ChunkFilter::any());
        for h in &got.hits {
            let w = want[pos[h.chunk_id.as_str()]];
            let err = if h.score == w { 0.0 } else { (h.score - w).abs() / h.score.abs().max(w.abs()) };
            check!(err < 1e-12, "{query:?} {}: {} vs {w}", h.chunk_id, h.score);
        }
    }
    let top = idx.retrieve("reportable segments revenue", 1, &ChunkFilter::any());
    let id = &top.hits.first().ok_or("no hit")?.chunk_id;
    check!(idx.chunk(id).unwrap().is_segment_region, "top-1 {id} is not a segment-region chunk");
    Ok(())
}

/// Thirty filings, fourteen flagged multi-segment by the model against
/// thirteen by the auditor, with `reportable_ok` of 100 reportable cells and
/// `nested_ok` of 100 nested cells matching.
fn synthetic_group(group: u64, reportable_ok: usize, nested_ok: usize) -> (GoldLabelSet, Vec<ExtractionBundle>) {
    let mut bundles = Vec::new();
    let mut filings = Vec::new();
    let mut cells = Vec::new();
    let money = |v: i64| MonetaryValue::new(Decimal::from_int(v), Scale::Millions);
    for i in 0..30u64 {
        let key = FirmYear::new(group * 1000 + i, 2020);
        let multi = i < 14;
        let kind = if multi { SegmentationKind::MultiSegment } else { SegmentationKind::SingleUnit };
        let mut b = ExtractionBundle::new(key, SegmentationClass { kind, raw_response: String::new() }, "test");
        if multi {
            for s in 0..8 {
                b.reportable.push(SegmentRecord::new(key, &format!("Segment {s}"), Axis::Business).with_measure(MeasureKind::Revenue, money(100 + s)));
            }
            if i < 10 {
                for n in 0..10 {
                    b.nested.push(
                        SegmentRecord::new(key, &format!("Line {n}"), Axis::Other)
                            .with_parent("Segment 0")
                            .with_measure(MeasureKind::Revenue, money(10 + n)),
                    );
                }
            }
        }
        filings.push(GoldFiling { cik: key.cik, fiscal_year: 2020, is_multi_segment: i < 13, has_nested: i < 10 });
        bundles.push(b);
    }
    let mut push = |tier: Tier, records: Vec<(FirmYear, String, i64)>, ok: usize| {
        for (k, (key, name, v)) in records.into_iter().take(100).enumerate() {
            let gold = if k < ok { v } else { v + 1 };
            cells.push(GoldCell {
                cik: key.cik,
                fiscal_year: key.fiscal_year,
                segment: name,
                measure: "revenue".into(),
                gold_value: format!("${gold} million"),
                tier,
                correct: None,
            });
        }
    };
    let flat = |nested: bool| -> Vec<(FirmYear, String, i64)> {
        bundles
            .iter()
            .flat_map(|b| if nested { &b.nested } else { &b.reportable })
            .map(|r| (r.firm_year, r.name.clone(), r.measures[&MeasureKind::Revenue].value.mantissa() as i64))
            .collect()
    };
    push(Tier::Reportable, flat(false), reportable_ok);
    push(Tier::Nested, flat(true), nested_ok);
    (GoldLabelSet { group_id: format!("group {group}"), seed: None, filings, cells }, bundles)
}

fn c8_eval_calibration() -> Outcome {
    let mut reports = Vec::new();
    for (g, ok, nested_ok, want, want_nested) in [(1, 97, 86, "97.0", "86.0"), (2, 91, 77, "91.0", "77.0"), (3, 88, 88, "88.0", "88.0"), (4, 94, 88, "94.0", "88.0")] {
        let (gold, bundles) = synthetic_group(g, ok, nested_ok);
        let r = eval::score(&gold, &bundles).map_err(|e| e.to_string())?;
        check!(r.primary_accuracy.to_fixed(1) == want, "group {g}: {}", r.primary_accuracy.to_fixed(1));
        let nested = r.nested_accuracy.map(|d| d.to_fixed(1));
        check!(nested.as_deref() == Some(want_nested), "group {g} nested: {nested:?}");
        check!(r.n_filings == 30 && r.n_multi_manual == 13 && r.n_multi_model == 14, "group {g} counts {} / {} / {}", r.n_filings, r.n_multi_manual, r.n_multi_model);
        check!(r.n_nested_manual == 10 && r.n_nested_model == 10, "group {g} nested counts");
        check!(r.recompute(Tier::Reportable) == Some(r.primary_accuracy), "group {g} recompute");
        reports.push(r);
    }
    let table = report::eval_table(&reports[..3]);
    let acc = table.rows.iter().find(|r| r[0].starts_with("Primary")).ok_or("no accuracy row")?;
    check!(acc[1..] == ["97.0%", "91.0%", "88.0%"], "rendered {:?}", &acc[1..]);
    Ok(())
}

fn c9_concurrency() -> Outcome {
    let handle_hash = ContentHash::of(b"concurrency probe");
    let entries: Vec<ScriptEntry> = (0..1000)
        .map(|i| ScriptEntry {
            file_hash: handle_hash.to_hex(),
            question: format!("question {i}"),
            response: format!("answer {i}"),
            matcher: Default::default(),
        })
        .collect();
    let script = Script::from_entries(entries).map_err(|e| e.to_string())?;
    let gw = Gateway::new(Arc::new(ScriptedBackend::new(script).with_jitter(3)), 5);
    let file: FileHandle = gw.upload("probe.txt", b"concurrency probe").map_err(|e| e.to_string())?;
    let reqs: Vec<PromptRequest> = (0..1000)
        .map(|i| PromptRequest {
            file: file.clone(),
            system_preamble: String::new(),
            question: format!("question {i}"),
            format_rules: String::new(),
            request_id: format!("probe/{i}"),
        })
        .collect();
    let out = gw.ask_many(&reqs, 5);
    check!(out.len() == 1000, "{} results", out.len());
    for (i, r) in out.iter().enumerate() {
        let c = r.as_ref().map_err(|e| e.to_string())?;
        check!(c.request_id == format!("probe/{i}") && c.text == format!("answer {i}"), "result {i} out of order");
    }
    check!(gw.peak_in_flight() <= 5, "peak in flight {}", gw.peak_in_flight());
    check!(gw.peak_in_flight() > 1, "requests never overlapped");
    Ok(())
}

fn cli_run(run: &Path) -> Outcome {
    let fx = common::fixtures();
    let conf = run.join("segforge.conf");
    let cfg = format!(
        "edgar.fixture_dir = {}\nedgar.cache_dir = {}\nllm.backend = scripted\nllm.script_path = {}\nrun.dir = {}\nstore.panel = {}\n",
        fx.join("edgar").display(),
        run.join("cache").display(),
        fx.join("scripts").display(),
        run.join("out").display(),
        run.join("out/panel.jsonl").display(),
    );
    std::fs::write(&conf, cfg).map_err(|e| e.to_string())?;
    let scheme = fx.join("asia.scheme.json");
    let panel = fx.join("panel/intc_txn.jsonl");
    let roster = fx.join("roster.csv");
    let gold = fx.join("gold/fixture.json");
    let steps: Vec<Vec<&str>> = vec![
        vec!["extract", "--cik", "320193,796343", "--years", "2024"],
        vec!["extract", "--cik", "8818", "--years", "2001-2024"],
        vec!["changes", "--cik", "8818", "--years", "2001-2024"],
        vec!["align", "--firm-a", "50863", "--firm-b", "97476", "--years", "2012-2024", "--scheme", scheme.to_str().unwrap(), "--panel", panel.to_str().unwrap()],
        vec!["gaps", "--roster", roster.to_str().unwrap()],
        vec!["eval", "--gold", gold.to_str().unwrap()],
        vec!["export"],
    ];
    for args in steps {
        let out = Command::new(env!("CARGO_BIN_EXE_segforge"))
            .arg("--config")
            .arg(&conf)
            .args(&args)
            .output()
            .map_err(|e| e.to_string())?;
        check!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    }
    Ok(())
}

/// Run outputs with timestamp-like fields removed, keyed by relative path.
fn outputs(dir: &Path) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap().flatten() {
            let p = e.path();
            if p.is_dir() {
                stack.push(p);
                continue;
            }
            let rel = p.strip_prefix(dir).unwrap().to_string_lossy().replace('\\', "/");
            if rel == "manifest.json" {
                continue;
            }
            let text = std::fs::read_to_string(&p).unwrap();
            let text = if rel.starts_with("transcript") {
                text.lines()
                    .map(|l| {
                        let mut v: serde_json::Value = serde_json::from_str(l).unwrap();
                        v.as_object_mut().unwrap().remove("latency_ms");
                        v.to_string()
                    })
                    .collect::<Vec<_>>()
                    .join("\n")
            } else {
                text
            };
            out.insert(rel, text);
        }
    }
    out
}

fn c10_determinism() -> Outcome {
    let (a, b) = (tempfile::tempdir().map_err(|e| e.to_string())?, tempfile::tempdir().map_err(|e| e.to_string())?);
    cli_run(a.path())?;
    cli_run(b.path())?;
    let (oa, ob) = (outputs(&a.path().join("out")), outputs(&b.path().join("out")));
    let expected = [
        "bundles/320193_2024.bundle.json",
        "bundles/796343_2024.bundle.json",
        "bundles/8818_2022.bundle.json",
        "changes_8818.csv",
        "changes_8818.txt",
        "alignment_50863_97476.csv",
        "gaps.json",
        "eval_report.json",
        "eval_report.txt",
        "segments.csv",
        "panel.jsonl",
    ];
    for f in expected {
        check!(oa.contains_key(f), "run did not produce {f}");
    }
    check!(oa.keys().eq(ob.keys()), "runs produced different file sets");
    for (k, v) in &oa {
        check!(ob[k] == *v, "{k} differs between runs");
    }
    Ok(())
}

type Criterion = (&'static str, u64, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("general-field replay on Apple FY2024", 5_000, c1_general_field_replay),
        ("nested hierarchy on Adobe FY2024", 5_000, c2_nested_hierarchy),
        ("change detection over the AVY segment table", 1_000, c3_change_detection),
        ("grounded change explanation for AVY", 5_000, c4_grounded_explanation),
        ("regional aggregation for INTC and TXN", 1_000, c5_regional_aggregation),
        ("gap report against a set-difference oracle", 1_000, c6_gap_report),
        ("retrieval scores against a brute-force scorer", 5_000, c7_retrieval),
        ("eval harness calibration", 1_000, c8_eval_calibration),
        ("ask_many order and in-flight bound", 10_000, c9_concurrency),
        ("determinism of two full scripted runs", 30_000, c10_determinism),
    ];
    let mut failures = 0;
    for (i, (name, limit_ms, f)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or(p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or("panic".into()))
        });
        let elapsed = start.elapsed();
        let outcome = outcome.and_then(|()| {
            if elapsed > Duration::from_millis(limit_ms) {
                Err(format!("took {} ms, limit {limit_ms} ms", elapsed.as_millis()))
            } else {
                Ok(())
            }
        });
        match outcome {
            Ok(()) => println!("PASS {:>2} {name} ({} ms)", i + 1, elapsed.as_millis()),
            Err(e) => {
                failures += 1;
                println!("FAIL {:>2} {name} ({} ms): {e}", i + 1, elapsed.as_millis());
            }
        }
    }
    if failures > 0 {
        std::process::exit(1);
    }
}
