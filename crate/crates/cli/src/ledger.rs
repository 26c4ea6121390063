//! Append-only run ledger, one JSON record per line.

use std::collections::BTreeMap;
use std::fs::OpenOptions;
use std::io::Write;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use sinet_core::io::FORMAT_VERSION;

pub fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Running,
    Done,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub format_version: u32,
    pub run_id: String,
    /// Seconds since the epoch at completion.
    pub timestamp: u64,
    pub command: String,
    pub parameters: BTreeMap<String, Value>,
    /// Input path -> sha256.
    pub inputs: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_digest: Option<String>,
    pub status: RunStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

static COUNTER: AtomicU64 = AtomicU64::new(0);

pub fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

/// Unique within a process and practically unique across processes.
pub fn new_run_id(command: &str) -> String {
    let nanos = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_nanos());
    let n = COUNTER.fetch_add(1, Ordering::Relaxed);
    let seed = format!("{command}:{nanos}:{}:{n}", std::process::id());
    format!("{}-{}", command, &digest(seed.as_bytes())[..16])
}

impl RunRecord {
    pub fn new(run_id: String, command: &str) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            run_id,
            timestamp: now(),
            command: command.into(),
            parameters: BTreeMap::new(),
            inputs: BTreeMap::new(),
            output: None,
            output_digest: None,
            status: RunStatus::Running,
            error: None,
        }
    }
}

/// Appends one line. Records are only written once a run has finished, so
/// an interrupted run leaves no entry.
pub fn append(path: &Path, record: &RunRecord) -> std::io::Result<()> {
    let mut line = serde_json::to_string(record).map_err(std::io::Error::other)?;
    line.push('\n');
    let mut f = OpenOptions::new().create(true).append(true).open(path)?;
    f.write_all(line.as_bytes())
}

pub fn read(path: &Path) -> std::io::Result<Vec<RunRecord>> {
    let text = std::fs::read_to_string(path)?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(std::io::Error::other))
        .collect()
}
