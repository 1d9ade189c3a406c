use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde_json::json;

use segforge::compare::{self, Grounding, LabelArbiter};
use segforge::config::{BackendKind, Config, RawConfig};
use segforge::edgar::{CachedDocument, EdgarClient, FixtureTransport, HttpTransport, SystemClock, Transport};
use segforge::gateway::{Backend, Gateway, LiveBackend, Script, ScriptedBackend};
use segforge::pipeline::{self, Pipeline, Templates};
use segforge::store::{self, SegmentStore};
use segforge::{index, manifest, parser, report};
use segforge_core::document::ParsedFiling;
use segforge_core::eval;
use segforge_core::geo::RegionScheme;
use segforge_core::FirmYear;

#[derive(Parser)]
#[command(name = "segforge", version, about = "Segment-disclosure extraction from 10-K filings")]
struct Cli {
    /// Key = value config file; relative paths inside resolve against it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides llm.backend.
    #[arg(long, global = true, value_parser = ["scripted", "live"])]
    backend: Option<String>,
    /// Permit live EDGAR and model traffic. Without it only fixtures are used.
    #[arg(long, global = true)]
    allow_network: bool,
    /// Overrides run.dir.
    #[arg(long, global = true)]
    run_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone)]
struct Target {
    #[arg(long, required = true, value_delimiter = ',')]
    cik: Vec<u64>,
    /// A year or an inclusive range such as 2001-2024.
    #[arg(long, value_parser = parse_years)]
    years: RangeInclusive<i32>,
}

#[derive(Subcommand)]
enum Command {
    /// Resolve and cache the 10-K primary documents.
    Fetch(Target),
    /// Itemize cached filings into sections and tables.
    Parse(Target),
    /// Run the staged extraction and append bundles to the panel.
    Extract(Target),
    /// Build the lexical chunk index over the filings.
    Index(Target),
    /// Roster firm-years without segment data.
    Gaps {
        #[arg(long)]
        roster: PathBuf,
        #[arg(long)]
        panel: Option<PathBuf>,
    },
    /// Detect and explain changes in a firm's reportable segments.
    Changes {
        #[arg(long)]
        cik: u64,
        #[arg(long, value_parser = parse_years)]
        years: RangeInclusive<i32>,
        #[arg(long)]
        panel: Option<PathBuf>,
    },
    /// Align two firms' geographic revenue under a region scheme.
    Align {
        #[arg(long)]
        firm_a: u64,
        #[arg(long)]
        firm_b: u64,
        #[arg(long)]
        scheme: PathBuf,
        #[arg(long, value_parser = parse_years)]
        years: RangeInclusive<i32>,
        #[arg(long)]
        panel: Option<PathBuf>,
    },
    /// Score the panel against gold labels.
    Eval {
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        panel: Option<PathBuf>,
    },
    /// Write the panel as a flat segments CSV.
    Export {
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        panel: Option<PathBuf>,
    },
}

fn parse_years(s: &str) -> Result<RangeInclusive<i32>, String> {
    let bad = || format!("expected YEAR or FROM-TO, got {s:?}");
    let (a, b) = s.split_once(['-', ':']).unwrap_or((s, s));
    let a: i32 = a.trim().parse().map_err(|_| bad())?;
    let b: i32 = b.trim().parse().map_err(|_| bad())?;
    if a > b {
        return Err(bad());
    }
    Ok(a..=b)
}

struct App {
    cfg: Config,
    allow_network: bool,
    edgar: EdgarClient,
}

impl App {
    fn new(cli: &Cli) -> Result<App> {
        let (mut raw, origin) = match &cli.config {
            Some(p) => (RawConfig::load(p)?, p.display().to_string()),
            None if Path::new("segforge.conf").exists() => (RawConfig::load(Path::new("segforge.conf"))?, "segforge.conf".into()),
            None => (RawConfig::default(), "defaults".into()),
        };
        if let Some(b) = &cli.backend {
            raw.set("llm.backend", b);
        }
        let mut cfg = raw.resolve().with_context(|| format!("config from {origin}"))?;
        if let Some(d) = &cli.run_dir {
            if cfg.store_path.starts_with(&cfg.run_dir) {
                cfg.store_path = d.join(cfg.store_path.strip_prefix(&cfg.run_dir).unwrap_or(Path::new("panel.jsonl")));
            }
            cfg.run_dir = d.clone();
        }
        let transport: Arc<dyn Transport> = if cli.allow_network {
            Arc::new(HttpTransport::new(Duration::from_secs(60)).map_err(|e| anyhow::anyhow!("http client: {}", e.0))?)
        } else {
            Arc::new(FixtureTransport::new(&cfg.edgar.fixture_dir))
        };
        let edgar = EdgarClient::new(&cfg.edgar, transport, Arc::new(SystemClock::new()));
        Ok(App { cfg, allow_network: cli.allow_network, edgar })
    }

    fn run_path(&self, name: impl AsRef<Path>) -> Result<PathBuf> {
        std::fs::create_dir_all(&self.cfg.run_dir)?;
        Ok(self.cfg.run_dir.join(name))
    }

    fn gateway(&self) -> Result<Gateway> {
        let backend: Arc<dyn Backend> = match self.cfg.llm.backend {
            BackendKind::Scripted => Arc::new(ScriptedBackend::new(Script::load(&self.cfg.llm.script_path)?)),
            BackendKind::Live => {
                if !self.allow_network {
                    bail!("the live backend needs --allow-network");
                }
                Arc::new(LiveBackend::new(&self.cfg.llm)?)
            }
        };
        Ok(Gateway::new(backend, self.cfg.llm.max_in_flight))
    }

    fn store(&self, panel: &Option<PathBuf>) -> Result<SegmentStore> {
        let path = panel.clone().unwrap_or_else(|| self.cfg.store_path.clone());
        let s = SegmentStore::open(&path).with_context(|| format!("opening panel {}", path.display()))?;
        for w in &s.load_warnings {
            eprintln!("warning: {w}");
        }
        Ok(s)
    }

    fn fetch(&self, key: FirmYear) -> Result<CachedDocument> {
        let r = self.edgar.resolve_filing(key.cik, key.fiscal_year)?;
        Ok(self.edgar.fetch(&r)?)
    }

    fn parsed(&self, t: &Target) -> Result<Vec<ParsedFiling>> {
        each(t)
            .map(|k| {
                let doc = self.fetch(k)?;
                parser::parse(&doc).with_context(|| format!("parsing {k}"))
            })
            .collect()
    }

    fn finish(&self, gateway: Option<&Gateway>, tag: &str) -> Result<()> {
        if let Some(g) = gateway {
            g.write_transcript(&self.run_path(format!("transcript_{tag}.jsonl"))?)?;
        }
        manifest::write(&self.cfg.run_dir)?;
        Ok(())
    }
}

fn each(t: &Target) -> impl Iterator<Item = FirmYear> + '_ {
    t.cik.iter().flat_map(move |c| t.years.clone().map(move |y| FirmYear::new(*c, y)))
}

fn print_json(v: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("json value"));
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(d) = path.parent() {
        std::fs::create_dir_all(d)?;
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn run(cli: Cli) -> Result<bool> {
    let app = App::new(&cli)?;
    let mut ok = true;
    match &cli.command {
        Command::Fetch(t) => {
            let mut out = Vec::new();
            for k in each(t) {
                match app.fetch(k) {
                    Ok(d) => out.push(json!({ "key": k.to_string(), "filing": d.filing, "content_hash": d.content_hash.to_hex(), "bytes": d.byte_length })),
                    Err(e) => {
                        ok = false;
                        out.push(json!({ "key": k.to_string(), "error": format!("{e:#}") }));
                    }
                }
            }
            print_json(&json!(out));
            app.finish(None, "fetch")?;
        }
        Command::Parse(t) => {
            let mut out = Vec::new();
            for k in each(t) {
                match app.fetch(k).and_then(|d| Ok(parser::parse(&d)?)) {
                    Ok(p) => {
                        let path = app.run_path(format!("parsed/{}_{}.json", k.cik, k.fiscal_year))?;
                        write_text(&path, &(serde_json::to_string_pretty(&p)? + "\n"))?;
                        let items: Vec<String> = p.items.iter().map(|s| s.key.slug()).collect();
                        out.push(json!({ "key": k.to_string(), "items": items, "tables": p.tables.len(), "warnings": p.warnings }));
                    }
                    Err(e) => {
                        ok = false;
                        out.push(json!({ "key": k.to_string(), "error": format!("{e:#}") }));
                    }
                }
            }
            print_json(&json!(out));
            app.finish(None, "parse")?;
        }
        Command::Extract(t) => {
            let gateway = app.gateway()?;
            let store = app.store(&None)?;
            let pipe = Pipeline::new(&gateway, app.cfg.pipeline.measures.clone(), app.cfg.pipeline.nested_measures.clone(), app.cfg.llm.max_in_flight);
            let bundles_dir = app.run_path("bundles")?;
            let mut out = Vec::new();
            for k in each(t) {
                let result = app.fetch(k).and_then(|d| Ok(pipe.run_document(&d)?)).and_then(|b| {
                    pipeline::write_bundle(&bundles_dir, &b)?;
                    let stored = store.put(&b)?;
                    Ok((b, stored))
                });
                match result {
                    Ok((b, stored)) => out.push(json!({
                        "key": k.to_string(),
                        "revision": stored.revision,
                        "segments": b.reportable.iter().map(|r| r.name.clone()).collect::<Vec<_>>(),
                        "nested": b.nested.len(),
                        "warnings": b.warnings,
                    })),
                    Err(e) => {
                        ok = false;
                        out.push(json!({ "key": k.to_string(), "error": format!("{e:#}") }));
                    }
                }
            }
            print_json(&json!(out));
            app.finish(Some(&gateway), "extract")?;
        }
        Command::Index(t) => {
            let parsed = app.parsed(t)?;
            let idx = index::build(&parsed, &app.cfg.retrieval.chunking, app.cfg.retrieval.rank)?;
            let (bin, meta) = index::save(&idx, &app.run_path("index")?)?;
            print_json(&json!({ "chunks": idx.len(), "index": bin, "meta": meta }));
            app.finish(None, "index")?;
        }
        Command::Gaps { roster, panel } => {
            let store = app.store(panel)?;
            let gaps = store.gap_report(&store::read_roster(roster)?);
            write_text(&app.run_path("gaps.json")?, &(serde_json::to_string_pretty(&gaps)? + "\n"))?;
            print_json(&serde_json::to_value(&gaps)?);
            app.finish(None, "gaps")?;
        }
        Command::Changes { cik, years, panel } => {
            let store = app.store(panel)?;
            let series = compare::segment_panel(&store, *cik, years.clone());
            if series.is_empty() {
                bail!("no stored segments for CIK {cik} in {}-{}", years.start(), years.end());
            }
            let target = Target { cik: vec![*cik], years: series[0].0..=series[series.len() - 1].0 };
            let parsed: Vec<ParsedFiling> = each(&target)
                .filter(|k| series.iter().any(|(y, _)| *y == k.fiscal_year))
                .map(|k| app.fetch(k).and_then(|d| Ok(parser::parse(&d)?)))
                .collect::<Result<_>>()?;
            let idx = index::build(&parsed, &app.cfg.retrieval.chunking, app.cfg.retrieval.rank)?;
            let gateway = app.gateway()?;
            let g = grounding(&app.cfg);
            let rep = compare::explain_changes(*cik, &series, &idx, &gateway, &Templates::builtin(), &g)?;
            let table = compare::change_table(&rep.rows);
            write_text(&app.run_path(format!("changes_{cik}.csv"))?, &table.to_csv())?;
            write_text(&app.run_path(format!("changes_{cik}.txt"))?, &table.to_text())?;
            for w in &rep.warnings {
                eprintln!("warning: {w}");
            }
            print!("{}", table.to_text());
            app.finish(Some(&gateway), &format!("changes_{cik}"))?;
        }
        Command::Align { firm_a, firm_b, scheme, years, panel } => {
            let store = app.store(panel)?;
            let text = std::fs::read_to_string(scheme).with_context(|| format!("reading {}", scheme.display()))?;
            let scheme: RegionScheme = serde_json::from_str::<RegionScheme>(&text)?.normalized()?;
            let index_dir = app.cfg.run_dir.join("index");
            let idx = if index_dir.join(index::INDEX_FILE).exists() { Some(index::load(&index_dir)?) } else { None };
            let gateway = app.gateway()?;
            let templates = Templates::builtin();
            let arbiter = idx.as_ref().map(|index| LabelArbiter { gateway: &gateway, templates: &templates, index, grounding: grounding(&app.cfg) });
            let al = compare::align_regions(*firm_a, *firm_b, &scheme, years.clone(), &store, arbiter.as_ref())?;
            let table = compare::alignment_table(&al);
            write_text(&app.run_path(format!("alignment_{firm_a}_{firm_b}.csv"))?, &table.to_csv())?;
            write_text(&app.run_path(format!("alignment_{firm_a}_{firm_b}.txt"))?, &table.to_text())?;
            for w in &al.warnings {
                eprintln!("warning: {w}");
            }
            print!("{}", table.to_text());
            app.finish(arbiter.is_some().then_some(&gateway), "align")?;
        }
        Command::Eval { gold, panel } => {
            let store = app.store(panel)?;
            let bundles = store.bundles();
            let reports = report::load_gold(gold)?
                .iter()
                .map(|g| eval::score(g, &bundles).map_err(anyhow::Error::from))
                .collect::<Result<Vec<_>>>()?;
            write_text(&app.run_path("eval_report.json")?, &(serde_json::to_string_pretty(&reports)? + "\n"))?;
            let text = report::render_eval_text(&reports);
            write_text(&app.run_path("eval_report.txt")?, &text)?;
            print!("{text}");
            app.finish(None, "eval")?;
        }
        Command::Export { out, panel } => {
            let store = app.store(panel)?;
            let path = match out {
                Some(p) => p.clone(),
                None => app.run_path("segments.csv")?,
            };
            store.export_csv(&path)?;
            print_json(&json!({ "rows_from": store.len(), "csv": path }));
            app.finish(None, "export")?;
        }
    }
    Ok(ok)
}

fn grounding(cfg: &Config) -> Grounding {
    Grounding {
        top_k: cfg.retrieval.top_k,
        budget_chars: cfg.retrieval.budget_chars,
        max_in_flight: cfg.llm.max_in_flight,
        ..Grounding::default()
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("{}", json!({ "error": format!("{e:#}") }));
            ExitCode::from(1)
        }
    }
}
