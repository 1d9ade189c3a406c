//! Regenerates the offline fixture corpus: a miniature EDGAR mirror,
//! scripted model responses keyed by document hash, the INTC/TXN
//! geographic panel, the Asia region scheme, a roster and gold labels.
//!
//! ```text
//! cargo run -p segforge --example make_fixtures -- fixtures
//! ```
//!
//! Filing documents are short synthetic renditions of the real 10-Ks.
//! Segment names, amounts and segment histories follow the published
//! filings; the surrounding prose is filler.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io;
use std::path::Path;

use segforge::compare::Grounding;
use segforge::gateway::script::{Matcher, ScriptEntry, ANY_FILE};
use segforge::parser;
use segforge::pipeline::Templates;
use segforge_core::answer::NOT_PROVIDED;
use segforge_core::changes::acronym;
use segforge_core::retrieval::{build_index, ChunkConfig, ChunkFilter, RankParams};
use segforge_core::segment::{ExtractionBundle, SegmentationClass};
use segforge_core::{
    Axis, ContentHash, Decimal, FilingRef, FirmYear, MeasureKind, MediaKind, MonetaryValue, Scale, SegmentRecord,
    SegmentationKind,
};

const MEASURES: [MeasureKind; 3] = [MeasureKind::Revenue, MeasureKind::ProfitOrLoss, MeasureKind::Assets];

enum Block {
    Para(String),
    Bold(String),
    Table { caption: String, header: Vec<String>, rows: Vec<Vec<String>> },
}

fn para(s: impl Into<String>) -> Block {
    Block::Para(s.into())
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn render_html(title: &str, cover: &[String], items: &[(String, Vec<Block>)]) -> String {
    let mut h = String::new();
    writeln!(h, "<html>\n<head><title>{}</title><style>p {{ margin: 0 }}</style></head>\n<body>", esc(title)).unwrap();
    for c in cover {
        writeln!(h, "<p style=\"text-align:center\"><b>{}</b></p>", esc(c)).unwrap();
    }
    for (heading, blocks) in items {
        if heading.starts_with("PART") {
            writeln!(h, "<p><b>{}</b></p>", esc(heading)).unwrap();
            continue;
        }
        writeln!(h, "<p><span style=\"font-weight:bold\">{}</span></p>", esc(heading)).unwrap();
        for b in blocks {
            match b {
                Block::Para(t) => writeln!(h, "<p>{}</p>", esc(t)).unwrap(),
                Block::Bold(t) => writeln!(h, "<p><b>{}</b></p>", esc(t)).unwrap(),
                Block::Table { caption, header, rows } => {
                    writeln!(h, "<p>{}</p>\n<table>", esc(caption)).unwrap();
                    write!(h, "<tr>").unwrap();
                    for c in header {
                        write!(h, "<th>{}</th>", esc(c)).unwrap();
                    }
                    writeln!(h, "</tr>").unwrap();
                    for r in rows {
                        write!(h, "<tr>").unwrap();
                        for (i, c) in r.iter().enumerate() {
                            if i > 0 && !c.is_empty() && c.starts_with(|ch: char| ch.is_ascii_digit() || ch == '(') {
                                write!(h, "<td>$</td><td>{}</td>", esc(c)).unwrap();
                            } else {
                                write!(h, "<td>{}</td>", esc(c)).unwrap();
                            }
                        }
                        writeln!(h, "</tr>").unwrap();
                    }
                    writeln!(h, "</table>").unwrap();
                }
            }
        }
    }
    h.push_str("</body>\n</html>\n");
    h
}

fn cover(form_year_end: &str, name: &str, extra: &[&str]) -> Vec<String> {
    let mut v = vec![
        "UNITED STATES SECURITIES AND EXCHANGE COMMISSION".to_string(),
        "Washington, D.C. 20549".to_string(),
        "FORM 10-K".to_string(),
        "ANNUAL REPORT PURSUANT TO SECTION 13 OR 15(d) OF THE SECURITIES EXCHANGE ACT OF 1934".to_string(),
        format!("For the fiscal year ended {form_year_end}"),
        name.to_string(),
    ];
    v.extend(extra.iter().map(|s| s.to_string()));
    v
}

const RISK: [&str; 4] = [
    "The Company's results depend on general economic conditions in the markets it serves. Weak demand, inflation in raw material and energy costs, and volatility in foreign currency exchange rates can reduce sales and margins, and the Company may not be able to pass cost increases on to customers in a timely manner.",
    "The Company faces intense competition from large multinational firms as well as smaller regional producers. Competitors may introduce new technologies or pricing strategies that reduce demand for the Company's products, and customer consolidation can increase pricing pressure.",
    "Disruptions in information technology systems, including cyber incidents affecting the Company or its suppliers, could interrupt operations, compromise confidential information and result in remediation costs, litigation and reputational harm.",
    "Changes in tax laws, trade policies and environmental regulations in the many jurisdictions where the Company operates could increase costs of compliance, affect the Company's effective tax rate and limit its ability to move goods and capital across borders.",
];

const LIQUIDITY: [&str; 3] = [
    "Cash flow from operations, together with available borrowing capacity under the Company's revolving credit facility and commercial paper program, is expected to be sufficient to fund working capital, capital expenditures, dividends and share repurchases over the next twelve months.",
    "The Company continues to evaluate its capital structure and may refinance maturing debt in the capital markets. Credit ratings affect the cost of borrowing and access to liquidity, and the Company monitors covenant compliance under its credit agreements.",
    "Critical accounting estimates include the evaluation of goodwill for impairment, the measurement of pension obligations, the recognition of deferred tax assets and the assessment of contingencies, each of which requires management to make judgments about future events.",
];

const CONTROLS: &str = "Management, with the participation of the chief executive officer and chief financial officer, evaluated the effectiveness of the Company's disclosure controls and procedures as of the end of the period covered by this report and concluded that they were effective.";

struct Filing {
    cik: u64,
    fiscal_year: i32,
    accession: String,
    document: String,
    report_date: String,
    filing_date: String,
    html: String,
    answers: Answers,
}

impl Filing {
    fn compact(&self) -> String {
        self.accession.replace('-', "")
    }

    fn hash(&self) -> ContentHash {
        ContentHash::of(self.html.as_bytes())
    }

    fn filing_ref(&self) -> FilingRef {
        FilingRef {
            cik: self.cik,
            fiscal_year: self.fiscal_year,
            accession_number: self.accession.clone(),
            document_url: format!(
                "https://www.sec.gov/Archives/edgar/data/{}/{}/{}",
                self.cik,
                self.compact(),
                self.document
            ),
            fetched_at: 0,
            form: "10-K".into(),
            amended: false,
        }
    }
}

/// Scripted answers for one filing, in the shape the pipeline asks.
struct Answers {
    multi: bool,
    general: Vec<(&'static str, String)>,
    segments: Vec<String>,
    /// Per segment: revenue, profit or loss, assets.
    measures: Vec<[String; 3]>,
    /// Per segment: nested components with revenue.
    nested: Vec<Vec<(String, String)>>,
}

fn general(pairs: &[(&'static str, &str)]) -> Vec<(&'static str, String)> {
    pairs.iter().map(|(k, v)| (*k, v.to_string())).collect()
}

fn money(v: i64) -> String {
    format!("${} million", Decimal::from_int(v).to_grouped_string())
}

fn apple() -> Filing {
    let segs = ["Americas", "Europe", "Greater China", "Japan", "Rest of Asia Pacific"];
    let sales = [167_045, 101_328, 66_952, 25_052, 30_658];
    let op = [67_656, 41_790, 27_082, 12_454, 13_062];
    let rows: Vec<Vec<String>> = segs
        .iter()
        .zip(sales.iter().zip(op))
        .map(|(s, (a, b))| vec![s.to_string(), Decimal::from_int(*a).to_grouped_string(), Decimal::from_int(b).to_grouped_string()])
        .collect();
    let mut total = vec!["Total net sales".to_string(), "391,035".to_string(), String::new()];
    total.truncate(2);
    let items = vec![
        ("PART I".to_string(), vec![]),
        (
            "Item 1. Business".to_string(),
            vec![
                para("Apple Inc. designs, manufactures and markets smartphones, personal computers, tablets, wearables and accessories, and sells a variety of related services. The Company's fiscal year is the 52- or 53-week period that ends on the last Saturday of September."),
                para("The Company sells its products and resells third-party products in most of its major markets directly to customers through its retail and online stores and its direct sales force, and indirectly through cellular network carriers, wholesalers, retailers and resellers."),
            ],
        ),
        ("Item 1A. Risk Factors".to_string(), RISK.iter().map(|r| para(*r)).collect()),
        ("PART II".to_string(), vec![]),
        (
            "Item 7. Management's Discussion and Analysis of Financial Condition and Results of Operations".to_string(),
            vec![
                para("Total net sales increased 2% or $7.8 billion during 2024 compared to 2023. The Company manages its business primarily on a geographic basis, and its reportable segments consist of the Americas, Europe, Greater China, Japan and Rest of Asia Pacific."),
                para(LIQUIDITY[0]),
                para(LIQUIDITY[2]),
            ],
        ),
        (
            "Item 8. Financial Statements and Supplementary Data".to_string(),
            vec![
                Block::Bold("Note 13 - Segment Information and Geographic Data".into()),
                para("The Company manages its business primarily on a geographic basis. The Company's reportable segments consist of the Americas, Europe, Greater China, Japan and Rest of Asia Pacific. Americas includes both North and South America. Europe includes European countries, as well as India, the Middle East and Africa. Greater China includes China mainland, Hong Kong and Taiwan. Rest of Asia Pacific includes Australia and those Asian countries not included in the Company's other reportable segments."),
                para("The Company evaluates the performance of its reportable segments based on net sales and operating income. Segment assets are not reported to, or used by, the chief operating decision maker to allocate resources."),
                Block::Table {
                    caption: "The following table shows information by reportable segment for 2024 (in millions):".into(),
                    header: vec![String::new(), "Net sales".into(), "Operating income".into()],
                    rows: rows.into_iter().chain([total]).collect(),
                },
            ],
        ),
        ("Item 9A. Controls and Procedures".to_string(), vec![para(CONTROLS)]),
    ];
    let html = render_html(
        "aapl-20240928",
        &cover("September 28, 2024", "Apple Inc.", &["Commission File Number: 001-36743", "Common Stock, $0.00001 par value per share: AAPL, The Nasdaq Stock Market LLC"]),
        &items,
    );
    Filing {
        cik: 320193,
        fiscal_year: 2024,
        accession: "0000320193-24-000123".into(),
        document: "aapl-20240928.htm".into(),
        report_date: "2024-09-28".into(),
        filing_date: "2024-11-01".into(),
        html,
        answers: Answers {
            multi: true,
            general: general(&[
                ("gvkey", "6614"),
                ("conm", "Apple Inc."),
                ("tic", "AAPL"),
                ("cik", "320193"),
                ("sic", "3571"),
                ("sics1", "No"),
                ("sics2", "7372"),
                ("naics", "334111"),
                ("naicsh", NOT_PROVIDED),
                ("naicss1", "334111"),
                ("naicss2", "334220"),
                ("gind", "Technology Hardware, Storage & Peripherals"),
                ("gsubind", "Technology Hardware, Storage & Peripherals"),
                ("curcds", "U.S. dollars"),
                ("isosrc", "U.S. dollar"),
                ("srcs", "Form 10-K"),
                ("revt", "$391,035 million"),
            ]),
            segments: segs.iter().map(|s| s.to_string()).collect(),
            measures: sales.iter().zip(op).map(|(s, o)| [money(*s), money(o), NOT_PROVIDED.into()]).collect(),
            nested: vec![vec![]; 5],
        },
    }
}

fn adobe() -> Filing {
    let items = vec![
        ("PART I".to_string(), vec![]),
        (
            "Item 1. Business".to_string(),
            vec![
                para("Adobe Inc. is one of the largest and most diversified software companies in the world. The Company offers products and services used by creative professionals, communicators, knowledge workers, marketers and enterprises."),
                para("The Company reports its results in three reportable segments: Digital Media, Digital Experience, and Publishing and Advertising. Digital Media includes Creative Cloud and Document Cloud."),
            ],
        ),
        ("Item 1A. Risk Factors".to_string(), RISK.iter().take(3).map(|r| para(*r)).collect()),
        ("PART II".to_string(), vec![]),
        (
            "Item 7. Management's Discussion and Analysis of Financial Condition and Results of Operations".to_string(),
            vec![para("Total revenue for fiscal 2024 was $21.51 billion, an increase of 11% compared with fiscal 2023, driven by subscription revenue in Digital Media and Digital Experience."), para(LIQUIDITY[1])],
        ),
        (
            "Item 8. Financial Statements and Supplementary Data".to_string(),
            vec![
                Block::Bold("Note 17. Segments".into()),
                para("The Company's chief operating decision maker reviews revenue and gross profit by reportable segment. The Company has the following reportable segments: Digital Media, Digital Experience, and Publishing and Advertising."),
                Block::Table {
                    caption: "Revenue by reportable segment for fiscal 2024 (in millions):".into(),
                    header: vec![String::new(), "Revenue".into()],
                    rows: vec![
                        vec!["Digital Media".into(), "15,864".into()],
                        vec!["Digital Experience".into(), "5,366".into()],
                        vec!["Publishing and Advertising".into(), "275".into()],
                        vec!["Total revenue".into(), "21,505".into()],
                    ],
                },
                para("Within the Digital Media segment, the Company reports revenue by offering for Creative Cloud and Document Cloud."),
                Block::Table {
                    caption: "Digital Media revenue by offering for fiscal 2024 (in millions):".into(),
                    header: vec![String::new(), "Revenue".into()],
                    rows: vec![
                        vec!["Creative Cloud".into(), "12,649".into()],
                        vec!["Document Cloud".into(), "3,215".into()],
                        vec!["Total Digital Media".into(), "15,864".into()],
                    ],
                },
            ],
        ),
        ("Item 9A. Controls and Procedures".to_string(), vec![para(CONTROLS)]),
    ];
    let html = render_html("adbe-20241129", &cover("November 29, 2024", "ADOBE INC.", &["Commission File Number: 0-15175", "Common stock, $0.0001 par value per share: ADBE, The Nasdaq Stock Market LLC"]), &items);
    Filing {
        cik: 796343,
        fiscal_year: 2024,
        accession: "0000796343-25-000004".into(),
        document: "adbe-20241129.htm".into(),
        report_date: "2024-11-29".into(),
        filing_date: "2025-01-13".into(),
        html,
        answers: Answers {
            multi: true,
            general: general(&[
                ("gvkey", NOT_PROVIDED),
                ("conm", "Adobe Inc."),
                ("tic", "ADBE"),
                ("cik", "796343"),
                ("sic", "7372"),
                ("sics1", "No"),
                ("sics2", NOT_PROVIDED),
                ("naics", "511210"),
                ("naicsh", NOT_PROVIDED),
                ("naicss1", "511210"),
                ("naicss2", NOT_PROVIDED),
                ("gind", "Software"),
                ("gsubind", "Application Software"),
                ("curcds", "U.S. dollars"),
                ("isosrc", "U.S. dollar"),
                ("srcs", "Form 10-K"),
                ("revt", "$21,505 million"),
            ]),
            segments: vec!["Digital Media".into(), "Digital Experience".into(), "Publishing and Advertising".into()],
            measures: [15_864, 5_366, 275].iter().map(|v| [money(*v), NOT_PROVIDED.into(), NOT_PROVIDED.into()]).collect(),
            nested: vec![
                vec![("Creative Cloud".into(), money(12_649)), ("Document Cloud".into(), money(3_215))],
                vec![],
                vec![],
            ],
        },
    }
}

/// Reportable segments by fiscal year.
pub fn avy_segments(year: i32) -> Vec<&'static str> {
    match year {
        2001..=2003 => vec!["Pressure-sensitive Adhesives and Materials", "Consumer and Converted Products"],
        2004 => vec!["Pressure-sensitive Materials", "Office Products", "Other Converted Products and Services", "Retail Information Services"],
        2005..=2007 => vec!["Pressure-sensitive Materials", "Office and Consumer Products", "Retail Information Services"],
        2008..=2011 => vec!["Pressure-sensitive Materials", "Retail Information Services", "Office and Consumer Products"],
        2012..=2013 => vec!["Pressure-sensitive Materials", "Retail Branding and Information Solutions"],
        2014..=2015 => vec!["Pressure-sensitive Materials", "Retail Branding and Information Solutions", "Vancive Medical Technologies"],
        2016..=2021 => vec!["Label and Graphic Materials", "Retail Branding and Information Solutions", "Industrial and Healthcare Materials"],
        _ => vec!["Materials Group", "Solutions Group"],
    }
}

pub const AVY_YEARS: std::ops::RangeInclusive<i32> = 2001..=2024;

struct AvyChange {
    narrative: &'static str,
    reason: &'static str,
    reason_text: &'static str,
    linkage: &'static str,
    linkage_text: &'static str,
    mapping: &'static str,
}

fn avy_change(year: i32) -> Option<AvyChange> {
    Some(match year {
        2004 => AvyChange {
            narrative: "Beginning in 2004, the Company realigned its internal reporting. Retail information services grew beyond ten percent of consolidated results and is now reported separately, and the former Consumer and Converted Products reportable segment was divided into Office Products and Other Converted Products and Services.",
            reason: "internal_reorganization",
            reason_text: "Internal reorganization and reporting-driven change after retail information services exceeded the ten percent threshold.",
            linkage: "partial",
            linkage_text: "Consumer and Converted Products split; PSM continues",
            mapping: "Pressure-sensitive Adhesives and Materials -> Pressure-sensitive Materials; Consumer and Converted Products -> Office Products; Consumer and Converted Products -> Other Converted Products and Services; Consumer and Converted Products -> Retail Information Services",
        },
        2005 => AvyChange {
            narrative: "In 2005, the Company combined its office products and other converted products businesses into a single reportable segment, Office and Consumer Products, reducing the number of reportable segments from four to three.",
            reason: "reporting_reclassification",
            reason_text: "Internal reclassification consolidating four reportable segments into three.",
            linkage: "regrouped",
            linkage_text: "RIS and PSM continue",
            mapping: "PSM -> PSM; Office Products + Other Converted Products and Services -> Office and Consumer Products; RIS -> RIS",
        },
        2012 => AvyChange {
            narrative: "During 2012, the Company agreed to sell its office and consumer products business, which is reported as a discontinued operation, and renamed its retail information services business Retail Branding and Information Solutions.",
            reason: "divestiture",
            reason_text: "Internal reorganization together with the divestiture of Office and Consumer Products.",
            linkage: "partial",
            linkage_text: "PSM continues; RIS to RBIS; OCP discontinued",
            mapping: "PSM -> PSM; RIS -> RBIS; OCP -> (discontinued)",
        },
        2014 => AvyChange {
            narrative: "Beginning in 2014, Vancive Medical Technologies, previously included in other specialty converting businesses, became a separate reportable segment.",
            reason: "new_segment_added",
            reason_text: "Vancive became a separate reportable segment.",
            linkage: "partial",
            linkage_text: "PSM and RBIS continue; Vancive added",
            mapping: "PSM -> PSM; RBIS -> RBIS; (new) -> Vancive Medical Technologies",
        },
        2016 => AvyChange {
            narrative: "In 2016, the Company reorganized its reportable segments. The pressure-sensitive materials business is now reported as Label and Graphic Materials, and its industrial businesses were combined with Vancive Medical Technologies to form Industrial and Healthcare Materials.",
            reason: "internal_reorganization",
            reason_text: "Internal reorganization with segment components reallocated.",
            linkage: "partial",
            linkage_text: "RBIS continues; PSM reorganized; Vancive absorbed",
            mapping: "PSM -> LGM; PSM + Vancive Medical Technologies -> IHM; RBIS -> RBIS",
        },
        2022 => AvyChange {
            narrative: "Beginning in 2022, the Company consolidated its businesses into two reportable segments. Label and Graphic Materials and Industrial and Healthcare Materials form the Materials Group, and Retail Branding and Information Solutions, together with Vestcom, forms the Solutions Group.",
            reason: "internal_reorganization",
            reason_text: "Internal reorganization; segments consolidated and renamed.",
            linkage: "partial",
            linkage_text: "Materials Group from LGM + IHM; Solutions from RBIS",
            mapping: "LGM + IHM -> Materials Group; RBIS -> Solutions Group",
        },
        _ => return None,
    })
}

fn list_phrase(names: &[&str]) -> String {
    match names {
        [] => String::new(),
        [one] => one.to_string(),
        [a, b] => format!("{a} and {b}"),
        [init @ .., last] => format!("{}, and {last}", init.join(", ")),
    }
}

fn avy(year: i32, seq: u32) -> Filing {
    let names = avy_segments(year);
    let filed = year + 1;
    let mut note = vec![
        Block::Bold("Note 15. Segment Information".into()),
        para(format!(
            "The Company's reportable segments are determined based on the way the chief operating decision maker evaluates performance and allocates resources. In {year}, the Company had {} reportable segments: {}.",
            names.len(),
            list_phrase(&names)
        )),
    ];
    if let Some(c) = avy_change(year) {
        note.push(para(c.narrative));
    }
    note.push(para("Reportable segment revenue and operating income exclude intersegment sales, which are accounted for at prices that approximate market. Corporate expense and interest are not allocated to the reportable segments."));
    note.push(Block::Table {
        caption: format!("Reportable segments for fiscal {year}:"),
        header: vec!["Reportable segment".into(), "Reported since".into()],
        rows: names
            .iter()
            .map(|n| {
                let since = AVY_YEARS.clone().find(|y| avy_segments(*y).contains(n) && (*y..=year).all(|z| avy_segments(z).contains(n))).unwrap_or(year);
                vec![n.to_string(), since.to_string()]
            })
            .collect(),
    });
    let items = vec![
        ("PART I".to_string(), vec![]),
        (
            "Item 1. Business".to_string(),
            vec![
                para("Avery Dennison Corporation is a global materials science and manufacturing company specializing in the design and manufacture of a wide variety of labeling and functional materials. The Company's products are used in home, retail, transportation, industrial and healthcare applications."),
                para(format!("The Company's operations in fiscal {year} were organized into {}.", list_phrase(&names))),
            ],
        ),
        ("Item 1A. Risk Factors".to_string(), (0..4).map(|i| para(RISK[(i + year as usize) % 4])).collect()),
        ("PART II".to_string(), vec![]),
        (
            "Item 7. Management's Discussion and Analysis of Financial Condition and Results of Operations".to_string(),
            (0..3).map(|i| para(LIQUIDITY[(i + year as usize) % 3])).collect(),
        ),
        ("Item 8. Financial Statements and Supplementary Data".to_string(), note),
        ("Item 9A. Controls and Procedures".to_string(), vec![para(CONTROLS)]),
    ];
    let doc = format!("avy-{year}1231x10k.htm");
    let html = render_html(&doc, &cover(&format!("December 31, {year}"), "AVERY DENNISON CORPORATION", &["Commission file number: 1-7685"]), &items);
    Filing {
        cik: 8818,
        fiscal_year: year,
        accession: format!("0000008818-{:02}-{seq:06}", filed % 100),
        document: doc,
        report_date: format!("{year}-12-31"),
        filing_date: format!("{filed}-02-{:02}", 20 + (year % 7)),
        html,
        answers: Answers {
            multi: true,
            general: general(&[
                ("gvkey", NOT_PROVIDED),
                ("conm", "Avery Dennison Corporation"),
                ("tic", "AVY"),
                ("cik", "8818"),
                ("sic", "2670"),
                ("sics1", "No"),
                ("sics2", NOT_PROVIDED),
                ("naics", NOT_PROVIDED),
                ("naicsh", NOT_PROVIDED),
                ("naicss1", NOT_PROVIDED),
                ("naicss2", NOT_PROVIDED),
                ("gind", NOT_PROVIDED),
                ("gsubind", NOT_PROVIDED),
                ("curcds", "U.S. dollars"),
                ("isosrc", "U.S. dollar"),
                ("srcs", "Form 10-K"),
                ("revt", NOT_PROVIDED),
            ]),
            segments: names.iter().map(|s| s.to_string()).collect(),
            measures: names.iter().map(|_| [NOT_PROVIDED.into(), NOT_PROVIDED.into(), NOT_PROVIDED.into()]).collect(),
            nested: vec![vec![]; names.len()],
        },
    }
}

fn entry(hash: &str, question: String, response: impl Into<String>) -> ScriptEntry {
    ScriptEntry { file_hash: hash.to_string(), question, response: response.into(), matcher: Matcher::Exact }
}

/// The exact questions the pipeline asks for `f`, paired with answers.
fn script_for(f: &Filing, t: &Templates) -> Vec<ScriptEntry> {
    let h = f.hash().to_hex();
    let a = &f.answers;
    let fy = FirmYear::new(f.cik, f.fiscal_year);
    let mut out = vec![entry(&h, t.get("classify").into(), if a.multi { "Yes" } else { "No" })];
    for spec in &t.fields {
        let ans = a.general.iter().find(|(k, _)| *k == spec.field_name).map(|(_, v)| v.clone()).unwrap_or(NOT_PROVIDED.into());
        out.push(entry(&h, spec.render(fy), ans));
    }
    if !a.multi {
        return out;
    }
    out.push(entry(&h, t.get("segments").into(), a.segments.join("; ")));
    for (i, name) in a.segments.iter().enumerate() {
        for (m, ans) in MEASURES.iter().zip(&a.measures[i]) {
            out.push(entry(&h, t.render("measure", &[("measure", m.phrase()), ("segment", name)]), ans.clone()));
        }
    }
    for (i, name) in a.segments.iter().enumerate() {
        let nested = &a.nested[i];
        out.push(entry(&h, t.render("nested_flag", &[("segment", name)]), if nested.is_empty() { "No" } else { "Yes" }));
        if nested.is_empty() {
            continue;
        }
        let names: Vec<&str> = nested.iter().map(|(n, _)| n.as_str()).collect();
        out.push(entry(&h, t.render("nested_names", &[("segment", name)]), names.join("; ")));
        let amounts: Vec<String> = nested.iter().map(|(n, v)| format!("{n}: {v}")).collect();
        out.push(entry(
            &h,
            t.render("nested_measure", &[("measure", MeasureKind::Revenue.phrase()), ("segment", name), ("components", &names.join("; "))]),
            amounts.join("; "),
        ));
    }
    out
}

/// Change-explanation answers for AVY, citing the top retrieved chunk of the
/// current year.
fn avy_change_script(filings: &[Filing], t: &Templates) -> Vec<ScriptEntry> {
    let parsed: Vec<_> = filings
        .iter()
        .map(|f| parser::parse_bytes(f.filing_ref(), f.html.as_bytes(), MediaKind::Html).expect("fixture parses"))
        .collect();
    let index = build_index(&parsed, &ChunkConfig::default(), RankParams::default()).expect("index builds");
    let g = Grounding::default();
    let mut out = Vec::new();
    for year in AVY_YEARS {
        let Some(c) = avy_change(year) else { continue };
        let hits = index.retrieve(&g.query, 1, &ChunkFilter::firm(8818).with_years([year]));
        let evidence = hits.hits.first().map(|h| h.chunk_id.clone()).unwrap_or_default();
        let question = t.render(
            "changes",
            &[
                ("prior_year", &(year - 1).to_string()),
                ("fiscal_year", &year.to_string()),
                ("prior_segments", &avy_segments(year - 1).join("; ")),
                ("current_segments", &avy_segments(year).join("; ")),
            ],
        );
        // Everything before the chunk-id list, which depends on retrieval.
        let prefix = question.rsplit_once(" The excerpt ids").map_or(question.clone(), |(p, _)| p.to_string());
        let response = format!(
            "REASON: {}\nREASON_TEXT: {}\nLINKAGE: {}\nLINKAGE_TEXT: {}\nMAPPING: {}\nEVIDENCE: {evidence}",
            c.reason, c.reason_text, c.linkage, c.linkage_text, c.mapping
        );
        out.push(ScriptEntry { file_hash: ANY_FILE.into(), question: prefix, response, matcher: Matcher::Prefix });
    }
    out
}

fn submissions(filings: &[&Filing], name: &str, extra: &[(&str, &str, &str, &str, &str)]) -> serde_json::Value {
    // (accession, form, report date, filing date, primary document)
    let mut rows: Vec<(String, String, String, String, String)> = filings
        .iter()
        .map(|f| (f.accession.clone(), "10-K".into(), f.report_date.clone(), f.filing_date.clone(), f.document.clone()))
        .collect();
    rows.extend(extra.iter().map(|(a, b, c, d, e)| (a.to_string(), b.to_string(), c.to_string(), d.to_string(), e.to_string())));
    rows.sort_by(|a, b| b.3.cmp(&a.3).then(b.0.cmp(&a.0)));
    columns(rows, name)
}

fn columns(rows: Vec<(String, String, String, String, String)>, name: &str) -> serde_json::Value {
    serde_json::json!({
        "name": name,
        "filings": {
            "recent": {
                "accessionNumber": rows.iter().map(|r| r.0.clone()).collect::<Vec<_>>(),
                "form": rows.iter().map(|r| r.1.clone()).collect::<Vec<_>>(),
                "reportDate": rows.iter().map(|r| r.2.clone()).collect::<Vec<_>>(),
                "filingDate": rows.iter().map(|r| r.3.clone()).collect::<Vec<_>>(),
                "primaryDocument": rows.iter().map(|r| r.4.clone()).collect::<Vec<_>>(),
            },
            "files": []
        }
    })
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> io::Result<()> {
    if let Some(d) = path.parent() {
        std::fs::create_dir_all(d)?;
    }
    std::fs::write(path, bytes)
}

fn write_json(path: &Path, v: &impl serde::Serialize) -> io::Result<()> {
    let mut s = serde_json::to_string_pretty(v).expect("serializes");
    s.push('\n');
    write(path, s)
}

fn write_jsonl(path: &Path, entries: &[ScriptEntry]) -> io::Result<()> {
    let mut s = String::new();
    for e in entries {
        s.push_str(&serde_json::to_string(e).expect("serializes"));
        s.push('\n');
    }
    write(path, s)
}

/// (year, INTC components, INTC total revenue, TXN components, TXN total revenue)
type GeoYear = (i32, Vec<(&'static str, i64)>, i64, Vec<(&'static str, i64)>, i64);

pub fn geo_table() -> Vec<GeoYear> {
    let intc4 = |s, c, t, j| vec![("Singapore", s), ("China incl. HK", c), ("Taiwan", t), ("Japan", j)];
    let intc3 = |s, c, t| vec![("Singapore", s), ("China incl. HK", c), ("Taiwan", t)];
    let txn2 = |a, j| vec![("Asia", a), ("Japan", j)];
    let txn3 = |c, r, j| vec![("China", c), ("Rest of Asia", r), ("Japan", j)];
    vec![
        (2012, intc4(12_622, 8_299, 9_327, 4_303), 53_341, txn2(7_808, 1_357), 12_825),
        (2013, intc4(10_997, 9_890, 8_888, 3_725), 52_708, txn2(7_370, 1_072), 12_205),
        (2014, intc4(11_573, 11_197, 8_955, 2_776), 55_870, txn2(7_915, 1_032), 13_045),
        (2015, intc3(11_544, 11_679, 10_350), 55_355, txn2(7_910, 1_127), 13_000),
        (2016, intc3(12_780, 13_977, 9_953), 59_387, txn2(8_024, 1_040), 13_370),
        (2017, intc3(14_285, 14_796, 10_518), 62_761, txn2(8_824, 1_049), 14_961),
        (2018, intc3(15_409, 18_824, 10_646), 70_848, txn2(9_240, 869), 15_784),
        (2019, intc3(15_650, 20_026, 10_058), 71_965, txn2(8_650, 796), 14_383),
        (2020, intc3(17_845, 20_257, 11_605), 77_867, txn2(9_541, 734), 14_461),
        (2021, intc3(18_096, 22_961, 11_418), 79_024, txn3(4_586, 2_018, 1_468), 11_258),
        (2022, intc3(9_664, 17_125, 8_287), 63_054, txn3(4_807, 2_003, 1_602), 20_028),
        (2023, intc3(8_602, 14_854, 6_867), 54_228, txn3(3_293, 1_721, 1_782), 17_519),
        (2024, intc3(10_187, 15_532, 7_804), 53_101, txn3(3_012, 1_681, 1_212), 15_641),
    ]
}

fn geo_bundle(cik: u64, tic: &str, conm: &str, year: i32, parts: &[(&str, i64)], total: i64) -> ExtractionBundle {
    let key = FirmYear::new(cik, year);
    let mut b = ExtractionBundle::new(
        key,
        SegmentationClass { kind: SegmentationKind::MultiSegment, raw_response: "Yes".into() },
        "fixture",
    );
    for (k, v) in [("conm", conm.to_string()), ("tic", tic.to_string()), ("cik", cik.to_string()), ("revt", money(total))] {
        b.general_fields.insert(k.into(), v);
    }
    let mv = |v: i64| MonetaryValue::new(Decimal::from_int(v), Scale::Millions);
    let asia: i64 = parts.iter().map(|(_, v)| v).sum();
    for (label, v) in parts.iter().copied().chain([("Rest of world", total - asia)]) {
        b.reportable.push(SegmentRecord::new(key, label, Axis::Geographic).with_measure(MeasureKind::Revenue, mv(v)));
    }
    b.warnings.push("geographic revenue transcribed from published disclosures; not produced by extraction".into());
    b
}

pub fn generate(root: &Path) -> io::Result<()> {
    let t = Templates::builtin();
    let apple = apple();
    let adobe = adobe();
    let avy: Vec<Filing> = AVY_YEARS.clone().enumerate().map(|(i, y)| avy(y, 100 + i as u32)).collect();

    let edgar = root.join("edgar");
    for f in [&apple, &adobe].into_iter().chain(avy.iter()) {
        write(&edgar.join(format!("Archives/edgar/data/{}/{}/{}", f.cik, f.compact(), f.document)), &f.html)?;
    }
    write_json(&edgar.join("submissions/CIK0000320193.json"), &submissions(&[&apple], "Apple Inc.", &[
        ("0000320193-24-000081", "10-Q", "2024-06-29", "2024-08-02", "aapl-20240629.htm"),
    ]))?;
    write_json(&edgar.join("submissions/CIK0000796343.json"), &submissions(&[&adobe], "ADOBE INC.", &[]))?;
    // AVY: recent filings in the main file, the early years on a second
    // page, plus an amendment that must lose to the original.
    let (early, recent): (Vec<&Filing>, Vec<&Filing>) = avy.iter().partition(|f| f.fiscal_year <= 2010);
    let mut main = submissions(&recent, "AVERY DENNISON CORP", &[
        ("0000008818-13-000042", "10-K/A", "2012-12-31", "2013-06-28", "avy-20121231x10ka.htm"),
    ]);
    main["filings"]["files"] = serde_json::json!([{ "name": "CIK0000008818-submissions-001.json" }]);
    write_json(&edgar.join("submissions/CIK0000008818.json"), &main)?;
    let page = submissions(&early, "AVERY DENNISON CORP", &[]);
    write_json(&edgar.join("submissions/CIK0000008818-submissions-001.json"), &page["filings"]["recent"])?;

    let scripts = root.join("scripts");
    write_jsonl(&scripts.join("apple.jsonl"), &script_for(&apple, &t))?;
    write_jsonl(&scripts.join("adobe.jsonl"), &script_for(&adobe, &t))?;
    let avy_entries: Vec<ScriptEntry> = avy.iter().flat_map(|f| script_for(f, &t)).collect();
    write_jsonl(&scripts.join("avy.jsonl"), &avy_entries)?;
    write_jsonl(&scripts.join("avy_changes.jsonl"), &avy_change_script(&avy, &t))?;

    let mut panel = String::new();
    for (year, intc, intc_total, txn, txn_total) in geo_table() {
        for b in [
            geo_bundle(50863, "INTC", "Intel Corporation", year, &intc, intc_total),
            geo_bundle(97476, "TXN", "Texas Instruments Incorporated", year, &txn, txn_total),
        ] {
            panel.push_str(&serde_json::to_string(&serde_json::json!({ "revision": 1, "bundle": b })).expect("serializes"));
            panel.push('\n');
        }
    }
    write(&root.join("panel/intc_txn.jsonl"), panel)?;

    write_json(&root.join("asia.scheme.json"), &serde_json::json!({
        "region_name": "Asia",
        "member_labels": ["Singapore", "China incl. Hong Kong", "Taiwan", "Japan", "Asia", "Rest of Asia", "China"],
        "non_member_labels": ["United States", "Rest of world", "Europe", "Other countries"],
    }))?;

    let mut roster = String::from("cik,fiscal_year\n");
    let mut keys: Vec<(u64, i32)> = vec![(320193, 2024), (796343, 2024), (1506307, 2016), (1506307, 2017)];
    keys.extend(AVY_YEARS.map(|y| (8818, y)));
    keys.sort();
    for (c, y) in keys {
        writeln!(roster, "{c},{y}").unwrap();
    }
    write(&root.join("roster.csv"), roster)?;

    let gold = serde_json::json!({
        "group_id": "fixture",
        "filings": [
            { "cik": 320193, "fiscal_year": 2024, "is_multi_segment": true, "has_nested": false },
            { "cik": 796343, "fiscal_year": 2024, "is_multi_segment": true, "has_nested": true },
        ],
        "cells": [
            { "cik": 320193, "fiscal_year": 2024, "segment": "Americas", "measure": "revenue", "gold_value": "$167,045 million" },
            { "cik": 320193, "fiscal_year": 2024, "segment": "Greater China", "measure": "revenue", "gold_value": "$66,952 million" },
            { "cik": 320193, "fiscal_year": 2024, "segment": "Japan", "measure": "profit_or_loss", "gold_value": "$12,454 million" },
            { "cik": 796343, "fiscal_year": 2024, "segment": "Digital Media", "measure": "revenue", "gold_value": "$15,864 million" },
            { "cik": 796343, "fiscal_year": 2024, "segment": "Publishing and Advertising", "measure": "revenue", "gold_value": "$275 million" },
            { "cik": 796343, "fiscal_year": 2024, "segment": "Creative Cloud", "measure": "revenue", "gold_value": "$12,649 million", "tier": "nested" },
            { "cik": 796343, "fiscal_year": 2024, "segment": "Document Cloud", "measure": "revenue", "gold_value": "$3,215 million", "tier": "nested" },
        ]
    });
    write_json(&root.join("gold/fixture.json"), &gold)?;

    let abbrev: BTreeMap<String, String> = avy
        .iter()
        .flat_map(|f| f.answers.segments.iter().map(|n| (acronym(n), n.clone())))
        .collect();
    let mut notes = String::from("acronym,segment\n");
    for (a, n) in abbrev {
        writeln!(notes, "{a},{n}").unwrap();
    }
    write(&root.join("avy_acronyms.csv"), notes)?;
    Ok(())
}

fn main() -> io::Result<()> {
    let dir = std::env::args().nth(1).unwrap_or_else(|| "fixtures".into());
    generate(Path::new(&dir))
}
