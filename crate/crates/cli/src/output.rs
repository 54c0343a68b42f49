//! Config hashing, run manifests and error classification.

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};
use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Bumped whenever a CSV or JSON layout changes.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug)]
pub enum CliError {
    /// Invalid flags, presets or parameters.
    Config(String),
    Io(io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(s) => f.write_str(s),
            CliError::Io(e) => write!(f, "{e}"),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e)
    }
}

/// Library failures are all traceable to the requested parameters.
pub fn config_err<E: fmt::Display>(e: E) -> CliError {
    CliError::Config(e.to_string())
}

pub struct Report {
    pub body: String,
    pub warnings: Vec<String>,
}

pub type Runner = Box<dyn FnOnce(&str) -> Result<Report, CliError>>;

/// A validated command, ready to run once its config hash is known.
pub struct Prepared {
    pub command: &'static str,
    pub config: Value,
    pub seed: Option<u64>,
    pub run: Runner,
}

/// First 16 hex digits of the SHA-256 of the canonical resolved config.
pub fn config_hash(command: &str, config: &Value) -> String {
    let canonical = serde_json::json!({
        "command": command,
        "config": config,
        "schema": SCHEMA_VERSION,
        "version": env!("CARGO_PKG_VERSION"),
    });
    let digest = Sha256::digest(canonical.to_string().as_bytes());
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

/// Comment line opening every CSV output.
pub fn csv_preamble(kind: &str, hash: &str) -> String {
    format!("# hqbicm {kind} schema={SCHEMA_VERSION} config={hash}\n")
}

#[derive(Serialize)]
struct RunManifest<'a> {
    schema: u32,
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    config: &'a Value,
    config_hash: &'a str,
    seed: Option<u64>,
    outputs: Vec<String>,
    wall_time_s: f64,
}

pub fn emit(
    out: Option<&Path>,
    manifest: Option<&Path>,
    prepared: (&str, &Value, Option<u64>),
    hash: &str,
    body: &str,
    start: Instant,
) -> Result<(), CliError> {
    match out {
        Some(p) => fs::write(p, body)?,
        None => io::stdout().lock().write_all(body.as_bytes())?,
    }
    let manifest_path: Option<PathBuf> = manifest.map(Path::to_path_buf).or_else(|| {
        out.map(|p| {
            let mut s = p.as_os_str().to_owned();
            s.push(".manifest.json");
            PathBuf::from(s)
        })
    });
    if let Some(mp) = manifest_path {
        let (command, config, seed) = prepared;
        let m = RunManifest {
            schema: SCHEMA_VERSION,
            tool: "hqbicm",
            version: env!("CARGO_PKG_VERSION"),
            command,
            config,
            config_hash: hash,
            seed,
            outputs: vec![out.map_or("-".to_string(), |p| p.display().to_string())],
            wall_time_s: start.elapsed().as_secs_f64(),
        };
        let text = serde_json::to_string_pretty(&m).map_err(config_err)?;
        fs::write(mp, text + "\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_tracks_config() {
        let a = config_hash("bound", &serde_json::json!({"x": 1}));
        assert_eq!(a.len(), 16);
        assert_eq!(a, config_hash("bound", &serde_json::json!({"x": 1})));
        assert_ne!(a, config_hash("bound", &serde_json::json!({"x": 2})));
        assert_ne!(a, config_hash("optimize", &serde_json::json!({"x": 1})));
    }
}
