//! Output helpers: atomic file writes, JSON numbers that survive infinities,
//! and the provenance header every file carries.

use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use serde_json::{json, Value};

use crate::config::Config;

/// Writes `contents` to `dir/name` through a temp file in the same
/// directory.
pub fn write_atomic(dir: &Path, name: &str, contents: &[u8]) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    let target = dir.join(name);
    tmp.persist(&target)
        .with_context(|| format!("writing {}", target.display()))?;
    Ok(())
}

/// First line of every CSV/TSV output.
pub fn comment_header(cfg: &Config) -> String {
    format!(
        "# command={} config_hash={} seed={}\n",
        cfg.command, cfg.hash, cfg.seed
    )
}

/// Finite floats as numbers, the rest as strings ("inf", "-inf", "NaN").
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::String(format!("{x}"))
    }
}

/// The result record: provenance, metrics and wall-clock time.
pub fn record(cfg: &Config, metrics: Value, seconds: f64) -> Value {
    json!({
        "command": cfg.command,
        "config_hash": cfg.hash,
        "seed": cfg.seed,
        "model": cfg.model.describe(),
        "metrics": metrics,
        "wall_clock_seconds": seconds,
    })
}

pub fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values always serialize");
    s.push('\n');
    s
}

/// 17 significant digits.
pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}
