//! Artifact emission: fixed-format CSV tables, two-column plot data and the
//! run manifest with SHA-256 digests of every emitted file.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

pub const MANIFEST_NAME: &str = "manifest.json";

/// Floats are written with 17 significant digits so outputs are exact and
/// byte-reproducible.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Output directory that remembers what was written into it.
#[derive(Debug)]
pub struct Artifacts {
    root: PathBuf,
    written: Vec<String>,
    csv: bool,
    dat: bool,
}

impl Artifacts {
    pub fn create(root: impl Into<PathBuf>, csv: bool, dat: bool) -> std::io::Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        Ok(Self {
            root,
            written: Vec::new(),
            csv,
            dat,
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn files(&self) -> &[String] {
        &self.written
    }

    /// Record a file written by someone else (e.g. a nested run).
    pub fn adopt(&mut self, relative: String) {
        self.written.push(relative);
    }

    pub fn write(&mut self, name: &str, contents: &[u8]) -> std::io::Result<()> {
        let path = self.root.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(path, contents)?;
        if !self.written.iter().any(|w| w == name) {
            self.written.push(name.to_string());
        }
        Ok(())
    }

    /// Table with a header line; cells are written verbatim.
    pub fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> std::io::Result<()> {
        if !self.csv {
            return Ok(());
        }
        let mut text = header.join(",");
        text.push('\n');
        for row in rows {
            text.push_str(&row.join(","));
            text.push('\n');
        }
        self.write(name, text.as_bytes())
    }

    /// Whitespace-separated `x y` pairs for external plotting.
    pub fn dat(&mut self, name: &str, pairs: impl IntoIterator<Item = (f64, f64)>) -> std::io::Result<()> {
        if !self.dat {
            return Ok(());
        }
        let text: String = pairs
            .into_iter()
            .map(|(x, y)| format!("{} {}\n", fmt_f64(x), fmt_f64(y)))
            .collect();
        self.write(name, text.as_bytes())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, serde::Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, Serialize, serde::Deserialize)]
pub struct Manifest {
    pub version: String,
    pub mode: String,
    pub status: String,
    pub exit_code: i32,
    pub seed: u64,
    pub started_unix: u64,
    pub wall_clock_seconds: f64,
    pub config: serde_json::Value,
    pub tolerances: BTreeMap<String, f64>,
    pub notes: Vec<String>,
    pub files: Vec<FileDigest>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Digest every listed file (relative to `root`).
pub fn digest_files(root: &Path, files: &[String]) -> std::io::Result<Vec<FileDigest>> {
    let mut out: Vec<FileDigest> = files
        .iter()
        .map(|rel| {
            let bytes = fs::read(root.join(rel))?;
            Ok(FileDigest {
                path: rel.clone(),
                sha256: sha256_hex(&bytes),
                bytes: bytes.len() as u64,
            })
        })
        .collect::<std::io::Result<_>>()?;
    out.sort_by(|a, b| a.path.cmp(&b.path));
    Ok(out)
}

pub fn write_manifest(root: &Path, manifest: &Manifest) -> std::io::Result<()> {
    let text = serde_json::to_string_pretty(manifest).map_err(std::io::Error::other)?;
    fs::write(root.join(MANIFEST_NAME), text + "\n")
}

pub fn read_manifest(root: &Path) -> std::io::Result<Manifest> {
    let text = fs::read_to_string(root.join(MANIFEST_NAME))?;
    serde_json::from_str(&text).map_err(std::io::Error::other)
}

/// Recompute digests and compare with the manifest; returns mismatching paths.
pub fn verify_manifest(root: &Path) -> std::io::Result<Vec<String>> {
    let manifest = read_manifest(root)?;
    let mut bad = Vec::new();
    for entry in &manifest.files {
        match fs::read(root.join(&entry.path)) {
            Ok(bytes) if sha256_hex(&bytes) == entry.sha256 => {}
            _ => bad.push(entry.path.clone()),
        }
    }
    Ok(bad)
}
