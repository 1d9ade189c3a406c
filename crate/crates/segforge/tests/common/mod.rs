#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::Arc;

use segforge::config::Config;
use segforge::edgar::{CachedDocument, EdgarClient, FakeClock, FixtureTransport};
use segforge::gateway::{Gateway, Script, ScriptedBackend};
use segforge::parser;
use segforge_core::document::ParsedFiling;

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn edgar(cache: &Path) -> EdgarClient {
    let mut cfg = Config::default().edgar;
    cfg.cache_dir = cache.to_path_buf();
    cfg.fixture_dir = fixtures().join("edgar");
    EdgarClient::new(&cfg, Arc::new(FixtureTransport::new(&cfg.fixture_dir)), Arc::new(FakeClock::new()))
}

pub fn fetch(client: &EdgarClient, cik: u64, fy: i32) -> CachedDocument {
    let r = client.resolve_filing(cik, fy).unwrap_or_else(|e| panic!("resolving {cik}/{fy}: {e}"));
    client.fetch(&r).unwrap_or_else(|e| panic!("fetching {cik}/{fy}: {e}"))
}

pub fn parsed(client: &EdgarClient, cik: u64, years: impl IntoIterator<Item = i32>) -> Vec<ParsedFiling> {
    years.into_iter().map(|y| parser::parse(&fetch(client, cik, y)).unwrap()).collect()
}

pub fn scripted_gateway() -> Gateway {
    let script = Script::load(&[fixtures().join("scripts")]).expect("fixture scripts load");
    Gateway::new(Arc::new(ScriptedBackend::new(script)), 5)
}

/// Reportable segment names per year for AVY, as printed in the published
/// change table.
pub fn avy_table() -> Vec<(i32, Vec<String>)> {
    let psam = "Pressure-sensitive Adhesives and Materials";
    let ccp = "Consumer and Converted Products";
    let psm = "Pressure-sensitive Materials";
    let op = "Office Products";
    let ocps = "Other Converted Products and Services";
    let ris = "Retail Information Services";
    let ocp = "Office and Consumer Products";
    let rbis = "Retail Branding and Information Solutions";
    let vmt = "Vancive Medical Technologies";
    let lgm = "Label and Graphic Materials";
    let ihm = "Industrial and Healthcare Materials";
    (2001..=2024)
        .map(|y| {
            let names: Vec<&str> = match y {
                2001..=2003 => vec![psam, ccp],
                2004 => vec![psm, op, ocps, ris],
                2005..=2007 => vec![psm, ocp, ris],
                2008..=2011 => vec![psm, ris, ocp],
                2012 | 2013 => vec![psm, rbis],
                2014 | 2015 => vec![psm, rbis, vmt],
                2016..=2021 => vec![lgm, rbis, ihm],
                _ => vec!["Materials Group", "Solutions Group"],
            };
            (y, names.into_iter().map(String::from).collect())
        })
        .collect()
}
