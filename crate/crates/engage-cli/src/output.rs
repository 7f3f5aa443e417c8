//! Output plumbing: atomic file writes, the artifact manifest, and stable
//! numeric formatting for golden-file friendly tables.

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

/// Writes via a temp file in the same directory plus rename, so interrupted
/// runs never leave partial artifacts.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or_else(|| Path::new("."));
    std::fs::create_dir_all(dir)
        .with_context(|| format!("cannot create directory {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("cannot create temp file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.persist(path)
        .with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    /// Wall-clock time of the last update; run metadata only, never part of
    /// the data files.
    pub updated_unix: u64,
    pub artifacts: BTreeMap<String, ManifestEntry>,
}

/// Tracks every artifact a command writes and lands it in
/// `<out>/manifest.json`, merged over whatever a previous command recorded.
pub struct OutputWriter {
    out_dir: PathBuf,
    seed: u64,
    written: BTreeMap<String, ManifestEntry>,
}

impl OutputWriter {
    pub fn new(out_dir: &Path, seed: u64) -> Self {
        Self {
            out_dir: out_dir.to_path_buf(),
            seed,
            written: BTreeMap::new(),
        }
    }

    /// Writes one artifact under the output directory and records its hash.
    pub fn write(&mut self, relative: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.out_dir.join(relative);
        write_atomic(&path, bytes)?;
        self.written.insert(
            relative.to_owned(),
            ManifestEntry {
                sha256: hex_digest(bytes),
                bytes: bytes.len(),
            },
        );
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, relative: &str, value: &T) -> Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(relative, text.as_bytes())
    }

    /// Merges this command's artifacts into the manifest on disk.
    pub fn finish(self) -> Result<()> {
        let manifest_path = self.out_dir.join("manifest.json");
        let mut manifest: Manifest = match std::fs::read_to_string(&manifest_path) {
            Ok(text) => serde_json::from_str(&text).unwrap_or_default(),
            Err(_) => Manifest::default(),
        };
        manifest.seed = self.seed;
        manifest.updated_unix = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        manifest.artifacts.extend(self.written);
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        write_atomic(&manifest_path, text.as_bytes())
    }
}

fn hex_digest(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Formats with 6 significant digits and a plain decimal point wherever the
/// magnitude allows, so table output is stable across runs and platforms.
pub fn sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("exponent is an integer");
    if !(-5..=9).contains(&exp) {
        return sci;
    }
    let negative = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(char::is_ascii_digit).collect();
    let point = exp + 1;
    let mut out = String::with_capacity(12);
    if negative {
        out.push('-');
    }
    if point <= 0 {
        out.push_str("0.");
        for _ in 0..-point {
            out.push('0');
        }
        out.push_str(&digits);
    } else if point as usize >= digits.len() {
        out.push_str(&digits);
        for _ in 0..(point as usize - digits.len()) {
            out.push('0');
        }
    } else {
        out.push_str(&digits[..point as usize]);
        out.push('.');
        out.push_str(&digits[point as usize..]);
    }
    out
}
