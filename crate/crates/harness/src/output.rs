//! Trace serialization: CSV files with a config comment line, the JSON
//! metadata sidecar, and the content hash tying them together.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use amwu::algorithms::TraceRecord;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;

/// Hex SHA-256 of the canonical JSON serialization of the config.
pub fn content_hash(config: &ExperimentConfig) -> String {
    let json = serde_json::to_string(config).expect("config serializes");
    let mut hasher = Sha256::new();
    hasher.update(json.as_bytes());
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for byte in digest {
        write!(out, "{byte:02x}").unwrap();
    }
    out
}

/// Column header for a trace CSV: `t,f,grad_norm` then flattened coordinates
/// named `x{block}_{index}`.
pub fn csv_header(block_dims: &[usize]) -> String {
    let mut header = String::from("t,f,grad_norm");
    for (b, &d) in block_dims.iter().enumerate() {
        for k in 0..d {
            write!(header, ",x{b}_{k}").unwrap();
        }
    }
    header
}

/// Renders a trace as CSV. The first line carries the resolved config as a
/// `#` comment so every output file embeds its own provenance; the header
/// row follows.
pub fn trace_csv(config: &ExperimentConfig, block_dims: &[usize], trace: &[TraceRecord]) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "# amwu sha256={} config={}",
        content_hash(config),
        serde_json::to_string(config).expect("config serializes")
    )
    .unwrap();
    writeln!(out, "{}", csv_header(block_dims)).unwrap();
    for rec in trace {
        write!(out, "{},{},{}", rec.t, rec.f_value, rec.grad_norm).unwrap();
        for c in rec.x.flatten() {
            write!(out, ",{c}").unwrap();
        }
        out.push('\n');
    }
    out
}

/// Per-algorithm schedule trace rows `(t, s, gamma, residual)`, downsampled
/// with the trace.
pub fn schedule_rows(trace: &[TraceRecord]) -> Vec<(usize, f64, f64, f64)> {
    trace
        .iter()
        .filter_map(|rec| {
            rec.schedule.as_ref().map(|agents| {
                let (s, gamma, residual) = agents[0];
                (rec.t, s, gamma, residual)
            })
        })
        .collect()
}

/// Metadata written next to the CSVs; re-running `amwu run --config` on this
/// file reproduces the outputs byte for byte.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Sidecar {
    pub config: ExperimentConfig,
    pub content_hash: String,
    pub outputs: Vec<String>,
    /// Algorithm label -> (t, s, gamma, defining-equation residual).
    pub schedule_trace: std::collections::BTreeMap<String, Vec<(usize, f64, f64, f64)>>,
}

impl Sidecar {
    pub fn new(config: &ExperimentConfig) -> Self {
        Self {
            content_hash: content_hash(config),
            config: config.clone(),
            outputs: Vec::new(),
            schedule_trace: Default::default(),
        }
    }

    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        let json = serde_json::to_string_pretty(self).expect("sidecar serializes");
        fs::write(path, json + "\n")
    }
}

/// Loads a config from either a bare config JSON or a sidecar produced by a
/// previous run.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("cannot read {path:?}: {e}"))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| format!("bad JSON in {path:?}: {e}"))?;
    let config_value = match value.get("config") {
        Some(inner) => inner.clone(),
        None => value,
    };
    serde_json::from_value(config_value).map_err(|e| format!("bad config in {path:?}: {e}"))
}

pub fn ensure_dir(dir: &Path) -> std::io::Result<()> {
    fs::create_dir_all(dir)
}

pub fn output_path(dir: &Path, objective: &str, label: &str, ext: &str) -> PathBuf {
    dir.join(format!("{objective}_{label}.{ext}"))
}
