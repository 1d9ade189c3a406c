//! Ranking checked against a from-scratch scorer over random corpora.

use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use segforge_core::filing::{ItemId, SectionKey};
use segforge_core::retrieval::{Chunk, ChunkFilter, ChunkIndex, RankParams};
use segforge_core::FirmYear;

const VOCAB: &[&str] = &[
    "segment", "revenue", "reportable", "operating", "income", "assets", "europe", "asia", "americas", "products",
    "services", "materials", "retail", "label", "graphic", "the", "of", "and", "in", "for", "company", "net", "sales",
    "growth", "decline", "currency", "tax", "goodwill", "lease", "debt", "dividend", "pension", "customer", "digital",
    "media", "cloud", "document", "experience", "advertising", "publishing",
];

fn chunk(i: usize, fy: i32, text: String, region: bool) -> Chunk {
    Chunk {
        chunk_id: format!("1-{fy}-item7-{i:03}"),
        source: FirmYear::new(1, fy),
        section: SectionKey::Item(ItemId::from_number("7").unwrap()),
        start: 0,
        end: text.len(),
        text,
        is_segment_region: region,
    }
}

fn random_corpus(rng: &mut ChaCha8Rng, n: usize) -> Vec<Chunk> {
    (0..n)
        .map(|i| {
            let len = rng.gen_range(5..120);
            // Zipf-ish skew so some terms are common and some rare.
            let words: Vec<&str> = (0..len)
                .map(|_| {
                    let r: f64 = rng.gen();
                    VOCAB[((r * r) * VOCAB.len() as f64) as usize]
                })
                .collect();
            chunk(i, 2010 + (i % 7) as i32, words.join(" "), rng.gen_bool(0.2))
        })
        .collect()
}

/// Textbook BM25 computed directly from the chunk texts.
fn brute_force(chunks: &[Chunk], query: &str, p: RankParams) -> Vec<f64> {
    let docs: Vec<Vec<String>> = chunks.iter().map(|c| c.text.split_whitespace().map(str::to_lowercase).collect()).collect();
    let n = docs.len() as f64;
    let avgdl = docs.iter().map(|d| d.len()).sum::<usize>() as f64 / n;
    let mut seen = BTreeSet::new();
    let q: Vec<String> = query.split_whitespace().map(str::to_lowercase).filter(|t| seen.insert(t.clone())).collect();
    let df: Vec<f64> = q.iter().map(|t| docs.iter().filter(|d| d.contains(t)).count() as f64).collect();
    docs.iter()
        .zip(chunks)
        .map(|(d, c)| {
            let mut tf: BTreeMap<&str, f64> = BTreeMap::new();
            for w in d {
                *tf.entry(w.as_str()).or_default() += 1.0;
            }
            let mut s = 0.0;
            for (term, df) in q.iter().zip(&df) {
                let f = tf.get(term.as_str()).copied().unwrap_or(0.0);
                if f == 0.0 {
                    continue;
                }
                let idf = (1.0 + (n - df + 0.5) / (df + 0.5)).ln();
                s += idf * (f * (p.k1 + 1.0)) / (f + p.k1 * (1.0 - p.b + p.b * d.len() as f64 / avgdl));
            }
            if c.is_segment_region {
                s *= p.segment_boost;
            }
            s
        })
        .collect()
}

fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

#[test]
fn scores_match_brute_force_on_twenty_queries() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let corpus = random_corpus(&mut rng, 480);
    let p = RankParams::default();
    let index = ChunkIndex::from_chunks(corpus.clone(), p);
    let ids: BTreeMap<&str, usize> = corpus.iter().enumerate().map(|(i, c)| (c.chunk_id.as_str(), i)).collect();
    for _ in 0..20 {
        let k = rng.gen_range(1..5);
        let query = (0..k).map(|_| *VOCAB.choose(&mut rng).unwrap()).collect::<Vec<_>>().join(" ");
        let expected = brute_force(&corpus, &query, p);
        let got = index.retrieve(&query, corpus.len(), &ChunkFilter::any());
        assert_eq!(got.hits.len(), corpus.len());
        for h in &got.hits {
            let want = expected[ids[h.chunk_id.as_str()]];
            assert!(rel_err(h.score, want) < 1e-12, "{query:?} {}: {} vs {want}", h.chunk_id, h.score);
        }
        for w in got.hits.windows(2) {
            assert!(w[0].score >= w[1].score);
        }
        // Arg-max agrees with the oracle up to ties.
        let best = expected.iter().cloned().fold(f64::MIN, f64::max);
        assert!(rel_err(got.hits[0].score, best) < 1e-12);
    }
}

#[test]
fn custom_parameters_are_honoured() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let corpus = random_corpus(&mut rng, 60);
    let p = RankParams { k1: 2.0, b: 0.3, segment_boost: 1.0 };
    let index = ChunkIndex::from_chunks(corpus.clone(), p);
    let expected = brute_force(&corpus, "segment revenue asia", p);
    for (i, e) in expected.iter().enumerate() {
        let got = index.score_at(i, &["segment".into(), "revenue".into(), "asia".into()]);
        assert!(rel_err(got, *e) < 1e-12);
    }
}

fn order(index: &ChunkIndex, query: &str) -> Vec<(String, f64)> {
    index
        .retrieve(query, index.len(), &ChunkFilter::any())
        .hits
        .into_iter()
        .filter(|h| h.score > 0.0)
        .map(|h| (h.chunk_id, h.score))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // An added chunk of average length sharing no query term leaves the
    // relative order of single-term hits untouched.
    #[test]
    fn irrelevant_chunk_keeps_single_term_order(seed in any::<u64>(), n in 4usize..40, term in 0usize..VOCAB.len()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut corpus = random_corpus(&mut rng, n);
        let query = VOCAB[term];
        // Pad so the average length is a whole number of tokens.
        let total: usize = corpus.iter().map(|c| c.text.split_whitespace().count()).sum();
        let pad = (n - total % n) % n;
        corpus[0].text.push_str(&" zzpad".repeat(pad));
        let total = total + pad;
        let before = ChunkIndex::from_chunks(corpus.clone(), RankParams::default());
        let filler = "zzfiller ".repeat(total / n);
        let mut grown = corpus.clone();
        grown.push(chunk(999, 2015, filler.trim_end().to_string(), false));
        let after = ChunkIndex::from_chunks(grown, RankParams::default());
        prop_assert_eq!(after.avg_length, before.avg_length);

        let a = order(&before, query);
        let b = order(&after, query);
        prop_assert!(b.iter().all(|(id, _)| !id.contains("-999")));
        prop_assert_eq!(a.len(), b.len());
        let pos: BTreeMap<&String, usize> = b.iter().enumerate().map(|(i, (id, _))| (id, i)).collect();
        // Pairs closer than rounding noise may swap; every clearly ordered
        // pair must keep its order.
        for (i, (x, sx)) in a.iter().enumerate() {
            for (y, sy) in &a[i + 1..] {
                if rel_err(*sx, *sy) > 1e-9 {
                    prop_assert!(pos[x] < pos[y], "{} and {} swapped", x, y);
                }
            }
        }
    }

    #[test]
    fn irrelevant_chunk_never_scores(seed in any::<u64>(), n in 1usize..40, q in proptest::collection::vec(0usize..VOCAB.len(), 1..4)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut corpus = random_corpus(&mut rng, n);
        corpus.push(chunk(999, 2015, "zzfiller qqother".into(), true));
        let index = ChunkIndex::from_chunks(corpus, RankParams::default());
        let query: Vec<&str> = q.iter().map(|i| VOCAB[*i]).collect();
        let r = index.retrieve(&query.join(" "), index.len(), &ChunkFilter::any());
        let hit = r.hits.iter().find(|h| h.chunk_id.ends_with("-999")).unwrap();
        prop_assert_eq!(hit.score, 0.0);
    }
}
