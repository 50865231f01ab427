//! CSV files with a `# key: value` metadata header.

use std::io::Write;
use std::path::Path;
use std::process::Command;

use epbm_core::CVector;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::error::Result;

/// One rung of a convergence study. `error` is `inf` when the run diverged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRecord {
    pub method: String,
    pub h: f64,
    pub error: f64,
    pub wall_s: f64,
    pub threads: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRecord {
    pub method: String,
    pub threads: usize,
    pub repeat: usize,
    pub wall_s: f64,
    pub checksum: String,
}

pub type Metadata = Vec<(String, String)>;

/// Header shared by every file of one run.
pub fn base_metadata(cfg: &ExperimentConfig, command: &str) -> Metadata {
    vec![
        ("command".into(), command.into()),
        ("problem".into(), cfg.problem.clone()),
        ("methods".into(), cfg.methods.join(" ")),
        ("git".into(), git_hash()),
        ("config_sha256".into(), cfg.hash()),
        ("seed".into(), cfg.seed.to_string()),
    ]
}

pub fn git_hash() -> String {
    Command::new("git")
        .args(["rev-parse", "--short", "HEAD"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .unwrap_or_else(|| "unknown".into())
}

/// Serialize rows after the metadata header.
pub fn to_csv_string<T: Serialize>(meta: &Metadata, rows: &[T]) -> Result<String> {
    let mut buf = Vec::new();
    for (k, v) in meta {
        writeln!(buf, "# {k}: {v}")?;
    }
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()?;
    }
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

pub fn write_csv<T: Serialize>(path: &Path, meta: &Metadata, rows: &[T]) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, to_csv_string(meta, rows)?)?;
    Ok(())
}

/// Parse a file produced by [`to_csv_string`].
pub fn from_csv_str<T: DeserializeOwned>(text: &str) -> Result<(Metadata, Vec<T>)> {
    let meta = text
        .lines()
        .take_while(|l| l.starts_with('#'))
        .filter_map(|l| l[1..].trim().split_once(": "))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect();
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let rows = r.deserialize().collect::<std::result::Result<Vec<T>, _>>()?;
    Ok((meta, rows))
}

pub fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<(Metadata, Vec<T>)> {
    from_csv_str(&std::fs::read_to_string(path)?)
}

/// SHA-256 over the raw bits of every entry, first 16 hex digits.
pub fn state_checksum(y: &CVector) -> String {
    let mut hasher = Sha256::new();
    for z in y.iter() {
        hasher.update(z.re.to_bits().to_le_bytes());
        hasher.update(z.im.to_bits().to_le_bytes());
    }
    hasher.finalize()[..8].iter().map(|b| format!("{b:02x}")).collect()
}

/// File-name-safe form of a method string.
pub fn slug(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '.' { c } else { '_' })
        .collect()
}
