//! On-disk form of the chunk index: `index.bin` holds the chunk table and
//! ranking parameters, `index.meta.json` a text-free summary for humans.
//! Term statistics are rebuilt from chunk text on load.

use std::path::{Path, PathBuf};

use segforge_core::document::ParsedFiling;
use segforge_core::filing::SectionKey;
use segforge_core::retrieval::{self, Chunk, ChunkConfig, ChunkIndex, RankParams, RetrievalError};
use segforge_core::FirmYear;
use serde::{Deserialize, Serialize};

pub const INDEX_FILE: &str = "index.bin";
pub const META_FILE: &str = "index.meta.json";

#[derive(Debug, thiserror::Error)]
pub enum IndexError {
    #[error(transparent)]
    Retrieval(#[from] RetrievalError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Format { path: PathBuf, source: serde_json::Error },
    #[error("{0}: term statistics do not match chunk contents")]
    Inconsistent(PathBuf),
}

#[derive(Serialize, Deserialize)]
struct Stored {
    params: RankParams,
    chunks: Vec<Chunk>,
}

#[derive(Serialize)]
struct MetaRow<'a> {
    chunk_id: &'a str,
    source: FirmYear,
    section: &'a SectionKey,
    start: usize,
    end: usize,
    is_segment_region: bool,
}

#[derive(Serialize)]
struct Meta<'a> {
    chunk_count: usize,
    vocabulary: usize,
    avg_length: f64,
    params: RankParams,
    chunks: Vec<MetaRow<'a>>,
}

pub fn build(filings: &[ParsedFiling], chunking: &ChunkConfig, params: RankParams) -> Result<ChunkIndex, IndexError> {
    Ok(retrieval::build_index(filings, chunking, params)?)
}

pub fn save(index: &ChunkIndex, dir: &Path) -> Result<(PathBuf, PathBuf), IndexError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| IndexError::Io { path, source }
    };
    std::fs::create_dir_all(dir).map_err(io(dir))?;
    let bin = dir.join(INDEX_FILE);
    let stored = Stored { params: index.params, chunks: index.chunks.clone() };
    std::fs::write(&bin, serde_json::to_vec(&stored).expect("index serializes")).map_err(io(&bin))?;
    let meta = Meta {
        chunk_count: index.len(),
        vocabulary: index.doc_freq.len(),
        avg_length: index.avg_length,
        params: index.params,
        chunks: index
            .chunks
            .iter()
            .map(|c| MetaRow {
                chunk_id: &c.chunk_id,
                source: c.source,
                section: &c.section,
                start: c.start,
                end: c.end,
                is_segment_region: c.is_segment_region,
            })
            .collect(),
    };
    let meta_path = dir.join(META_FILE);
    let mut json = serde_json::to_string_pretty(&meta).expect("meta serializes");
    json.push('\n');
    std::fs::write(&meta_path, json).map_err(io(&meta_path))?;
    Ok((bin, meta_path))
}

pub fn load(dir: &Path) -> Result<ChunkIndex, IndexError> {
    let bin = dir.join(INDEX_FILE);
    let bytes = std::fs::read(&bin).map_err(|source| IndexError::Io { path: bin.clone(), source })?;
    let stored: Stored = serde_json::from_slice(&bytes).map_err(|source| IndexError::Format { path: bin.clone(), source })?;
    let index = ChunkIndex::from_chunks(stored.chunks, stored.params);
    if !index.statistics_consistent() {
        return Err(IndexError::Inconsistent(bin));
    }
    Ok(index)
}
