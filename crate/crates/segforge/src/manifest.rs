//! Run manifest: every artifact under the run directory with its SHA-256.
//! No timestamps, so equal runs give byte-equal manifests.

use std::path::{Path, PathBuf};

use segforge_core::ContentHash;
use serde::{Deserialize, Serialize};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifact {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Manifest {
    pub artifacts: Vec<Artifact>,
}

fn walk(dir: &Path, out: &mut Vec<PathBuf>) -> std::io::Result<()> {
    for e in std::fs::read_dir(dir)? {
        let p = e?.path();
        if p.is_dir() {
            walk(&p, out)?;
        } else {
            out.push(p);
        }
    }
    Ok(())
}

/// Hashes every file below `run_dir` (except the manifest) in path order.
pub fn scan(run_dir: &Path) -> std::io::Result<Manifest> {
    let mut files = Vec::new();
    if run_dir.exists() {
        walk(run_dir, &mut files)?;
    }
    let mut artifacts = Vec::new();
    for f in files {
        let rel = f.strip_prefix(run_dir).unwrap_or(&f);
        let path = rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/");
        if path == MANIFEST_FILE {
            continue;
        }
        let bytes = std::fs::read(&f)?;
        artifacts.push(Artifact { path, sha256: ContentHash::of(&bytes).to_hex(), bytes: bytes.len() as u64 });
    }
    artifacts.sort_by(|a, b| a.path.cmp(&b.path));
    Ok(Manifest { artifacts })
}

pub fn write(run_dir: &Path) -> std::io::Result<PathBuf> {
    let m = scan(run_dir)?;
    std::fs::create_dir_all(run_dir)?;
    let path = run_dir.join(MANIFEST_FILE);
    let mut json = serde_json::to_string_pretty(&m).expect("manifest serializes");
    json.push('\n');
    std::fs::write(&path, json)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_lists_nested_files_in_order() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::create_dir_all(dir.path().join("b")).unwrap();
        std::fs::write(dir.path().join("b/x.txt"), b"abc").unwrap();
        std::fs::write(dir.path().join("a.txt"), b"").unwrap();
        write(dir.path()).unwrap();
        let m = scan(dir.path()).unwrap();
        let paths: Vec<&str> = m.artifacts.iter().map(|a| a.path.as_str()).collect();
        assert_eq!(paths, ["a.txt", "b/x.txt"]);
        assert_eq!(m.artifacts[1].sha256, "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
