//! Settings from a `key = value` file, overridden by `SINET_*` variables.

use std::path::{Path, PathBuf};

use sinet_core::Error;

#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    /// Run ledger; `None` disables recording.
    pub ledger: Option<PathBuf>,
    pub workers: usize,
    pub host: String,
    pub port: u16,
}

impl Default for Settings {
    fn default() -> Self {
        Self { ledger: Some(PathBuf::from("sinet-runs.jsonl")), workers: 2, host: "127.0.0.1".into(), port: 8080 }
    }
}

pub const ENV_PREFIX: &str = "SINET_";
pub const KEYS: [&str; 4] = ["ledger", "workers", "host", "port"];

impl Settings {
    fn set(&mut self, key: &str, value: &str, origin: &str) -> Result<(), Error> {
        let bad = |what: &str| Error::Validation(format!("{origin}: `{value}` is not a valid {what}"));
        match key {
            "ledger" if value.is_empty() || value == "none" => self.ledger = None,
            "ledger" => self.ledger = Some(PathBuf::from(value)),
            "workers" => {
                self.workers = value.parse().ok().filter(|&w| w >= 1).ok_or_else(|| bad("worker count"))?;
            }
            "host" => self.host = value.to_string(),
            "port" => self.port = value.parse().map_err(|_| bad("port"))?,
            other => return Err(Error::Validation(format!("{origin}: unknown setting `{other}`"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines. `#` starts a comment.
    pub fn apply_text(&mut self, text: &str, origin: &str) -> Result<(), Error> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Validation(format!("{origin}:{}: expected `key = value`", n + 1)))?;
            self.set(k.trim(), v.trim(), &format!("{origin}:{}", n + 1))?;
        }
        Ok(())
    }

    /// Defaults, then the config file, then the environment.
    pub fn load(file: Option<&Path>, env: impl Fn(&str) -> Option<String>) -> Result<Self, Error> {
        let mut s = Self::default();
        if let Some(path) = file {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
            s.apply_text(&text, &path.display().to_string())?;
        }
        for key in KEYS {
            let var = format!("{ENV_PREFIX}{}", key.to_ascii_uppercase());
            if let Some(v) = env(&var) {
                s.set(key, &v, &var)?;
            }
        }
        Ok(s)
    }
}
