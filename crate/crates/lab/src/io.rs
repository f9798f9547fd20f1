//! File formats and the per-run manifest.

use std::collections::BTreeMap;
use std::fs;
use std::io::{Read as _, Write as _};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use crate::failure::{ConfigContext, Failure, Result, RuntimeContext};

pub const MANIFEST: &str = "manifest.json";

/// Read a file, or stdin for `-`.
pub fn read_text(path: &Path) -> Result<String> {
    if path == Path::new("-") {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).config_context("reading stdin")?;
        return Ok(s);
    }
    fs::read_to_string(path).config_context(format!("reading {}", path.display()))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text).config_context(format!("parsing {}", path.display()))
}

/// Pretty JSON with a trailing newline.
pub fn json_bytes<T: Serialize + ?Sized>(value: &T) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(value).runtime_context("serializing JSON")?;
    out.push(b'\n');
    Ok(out)
}

/// One compact JSON document per line.
pub fn jsonl_bytes<T: Serialize>(items: &[T]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    for item in items {
        serde_json::to_writer(&mut out, item).runtime_context("serializing JSONL")?;
        out.push(b'\n');
    }
    Ok(out)
}

/// CSV with the header always present, even without rows.
pub fn csv_bytes(header: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).runtime_context("writing CSV")?;
    for row in rows {
        w.write_record(row).runtime_context("writing CSV")?;
    }
    w.into_inner().map_err(|e| Failure::Runtime(anyhow::anyhow!("{e}")))
}

/// Shortest round-trip decimal form; empty for missing values.
pub fn num(x: f64) -> String {
    format!("{x}")
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Overlay the keys of a JSON file on `base`. Nested objects merge; keys the
/// base does not have are rejected.
pub fn overlay<T: Serialize + DeserializeOwned>(base: &T, file: Option<&Path>) -> Result<T> {
    let Some(path) = file else {
        return serde_json::from_value(serde_json::to_value(base).runtime_context("config")?)
            .runtime_context("config");
    };
    let mut merged = serde_json::to_value(base).runtime_context("serializing defaults")?;
    let patch: Value = read_json(path)?;
    merge(&mut merged, patch, "").map_err(Failure::config)?;
    serde_json::from_value(merged).config_context(format!("config {}", path.display()))
}

fn merge(base: &mut Value, patch: Value, at: &str) -> std::result::Result<(), String> {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                let path = if at.is_empty() { k.clone() } else { format!("{at}.{k}") };
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v, &path)?,
                    None => return Err(format!("unknown config key `{path}`")),
                }
            }
            Ok(())
        }
        (slot, v) => {
            *slot = v;
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    args: &'a [String],
    config: &'a Value,
    seed: Option<u64>,
    versions: BTreeMap<&'static str, &'static str>,
    threads: usize,
    outputs: &'a [String],
    wall_time_secs: f64,
    timestamp: u64,
}

/// One invocation's outputs. With an output directory every artifact becomes
/// a file there and `manifest.json` is written last; without one, only the
/// primary artifact is printed to stdout.
pub struct Run {
    command: String,
    args: Vec<String>,
    out: Option<PathBuf>,
    started: Instant,
    outputs: Vec<String>,
    config: Value,
    seed: Option<u64>,
    threads: usize,
}

impl Run {
    pub fn start(command: &str, args: Vec<String>, out: Option<PathBuf>, threads: usize) -> Result<Self> {
        if let Some(dir) = &out {
            fs::create_dir_all(dir).config_context(format!("creating output directory {}", dir.display()))?;
        }
        Ok(Self {
            command: command.into(),
            args,
            out,
            started: Instant::now(),
            outputs: Vec::new(),
            config: Value::Null,
            seed: None,
            threads,
        })
    }

    pub fn out_dir(&self) -> Option<&Path> {
        self.out.as_deref()
    }

    pub fn threads(&self) -> usize {
        self.threads
    }

    pub fn set_config<C: Serialize>(&mut self, config: &C, seed: Option<u64>) -> Result<()> {
        self.config = serde_json::to_value(config).runtime_context("serializing config")?;
        self.seed = seed;
        Ok(())
    }

    pub fn emit(&mut self, name: &str, bytes: &[u8], primary: bool) -> Result<()> {
        match &self.out {
            Some(dir) => {
                let path = dir.join(name);
                fs::write(&path, bytes).runtime_context(format!("writing {}", path.display()))?;
                self.outputs.push(name.into());
            }
            None if primary => {
                let mut stdout = std::io::stdout().lock();
                stdout.write_all(bytes).runtime_context("writing stdout")?;
                stdout.flush().runtime_context("writing stdout")?;
            }
            None => {}
        }
        Ok(())
    }

    pub fn finish(self) -> Result<()> {
        let Some(dir) = &self.out else {
            return Ok(());
        };
        let versions = BTreeMap::from([
            ("composed-core", composed_core::VERSION),
            ("composed-lab", env!("CARGO_PKG_VERSION")),
        ]);
        let manifest = Manifest {
            command: &self.command,
            args: &self.args,
            config: &self.config,
            seed: self.seed,
            versions,
            threads: self.threads,
            outputs: &self.outputs,
            wall_time_secs: self.started.elapsed().as_secs_f64(),
            timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        };
        let path = dir.join(MANIFEST);
        fs::write(&path, json_bytes(&manifest)?).runtime_context(format!("writing {}", path.display()))
    }
}
