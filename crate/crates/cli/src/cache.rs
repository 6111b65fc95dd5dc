//! Content-addressed result cache.
//!
//! Keys are SHA-256 of (code version, command, canonicalized parameters);
//! values are the raw serialized result documents, so identical keys give
//! byte-identical results. Writes go through a temp file and rename, so a
//! crashed or concurrent writer never leaves a torn entry.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use sha2::{Digest, Sha256};

pub const CACHE_DIR_ENV: &str = "FRAKT_CACHE_DIR";

pub fn cache_dir() -> PathBuf {
    std::env::var_os(CACHE_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(".frakt-cache"))
}

pub fn key_for(version: &str, command: &str, canonical_params: &str) -> String {
    let mut h = Sha256::new();
    h.update(version.as_bytes());
    h.update(b"\x00");
    h.update(command.as_bytes());
    h.update(b"\x00");
    h.update(canonical_params.as_bytes());
    let digest = h.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

fn entry_path(dir: &Path, key: &str) -> PathBuf {
    dir.join(format!("{key}.json"))
}

pub fn read(key: &str) -> Option<Vec<u8>> {
    fs::read(entry_path(&cache_dir(), key)).ok()
}

pub fn write_atomic(key: &str, value: &[u8]) -> Result<()> {
    let dir = cache_dir();
    fs::create_dir_all(&dir).with_context(|| format!("create cache dir {}", dir.display()))?;
    let path = entry_path(&dir, key);
    let nanos = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .unwrap_or_default()
        .subsec_nanos();
    let tmp = dir.join(format!(".{key}.{}.{nanos}.tmp", std::process::id()));
    fs::write(&tmp, value).with_context(|| format!("write {}", tmp.display()))?;
    fs::rename(&tmp, &path).with_context(|| format!("rename into {}", path.display()))?;
    Ok(())
}

/// Removes entries older than the given age; age zero clears everything.
/// Returns the number of removed entries.
pub fn gc(max_age: Duration) -> Result<usize> {
    let dir = cache_dir();
    let mut removed = 0;
    let entries = match fs::read_dir(&dir) {
        Ok(e) => e,
        Err(_) => return Ok(0),
    };
    let now = SystemTime::now();
    for entry in entries.flatten() {
        let path = entry.path();
        if path.extension().map_or(true, |e| e != "json") {
            continue;
        }
        let old_enough = entry
            .metadata()
            .and_then(|m| m.modified())
            .map(|t| now.duration_since(t).unwrap_or_default() >= max_age)
            .unwrap_or(true);
        if old_enough && fs::remove_file(&path).is_ok() {
            removed += 1;
        }
    }
    Ok(removed)
}
