use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::ExperimentError;

/// Output encoding picked from a file extension.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    pub fn from_path(path: &Path) -> Result<Self, ExperimentError> {
        match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
            Some("csv") => Ok(Self::Csv),
            Some("json") => Ok(Self::Json),
            _ => Err(ExperimentError::UnsupportedFormat {
                path: path.to_path_buf(),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Environment {
    pub artifact: String,
    pub version: String,
    pub seed: u64,
}

impl Environment {
    pub fn current(seed: u64) -> Self {
        Self {
            artifact: "geonet".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            seed,
        }
    }
}

/// Named experiment with the exact configuration it ran under, one metrics
/// map per run, and the producing artifact's version.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub config: Value,
    pub runs: Vec<BTreeMap<String, Value>>,
    pub environment: Environment,
}

impl ExperimentReport {
    pub fn new(experiment: impl Into<String>, config: &impl Serialize, seed: u64) -> Result<Self, ExperimentError> {
        Ok(Self {
            experiment: experiment.into(),
            config: serde_json::to_value(config)?,
            runs: Vec::new(),
            environment: Environment::current(seed),
        })
    }

    /// Appends a run; `metrics` must serialise to a JSON object.
    pub fn push_run(&mut self, metrics: &impl Serialize) -> Result<(), ExperimentError> {
        match serde_json::to_value(metrics)? {
            Value::Object(map) => {
                self.runs.push(map.into_iter().collect());
                Ok(())
            }
            other => Err(ExperimentError::InvalidConfig(format!("run metrics must be an object, got {other}"))),
        }
    }

    pub fn to_json(&self) -> Result<String, ExperimentError> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// Long format: `section,key,value`, with sections `environment`,
    /// `config` (nested keys joined by `.`) and `run<i>`.
    pub fn write_csv(&self, out: impl Write) -> Result<(), ExperimentError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["section", "key", "value"])?;
        w.write_record(["experiment", "name", &self.experiment])?;
        let env = serde_json::to_value(&self.environment)?;
        for (k, v) in flatten(&env) {
            w.write_record(["environment", &k, &v])?;
        }
        for (k, v) in flatten(&self.config) {
            w.write_record(["config", &k, &v])?;
        }
        for (i, run) in self.runs.iter().enumerate() {
            let section = format!("run{i}");
            for (k, v) in run {
                for (sub, value) in flatten(v) {
                    let key = if sub.is_empty() { k.clone() } else { format!("{k}.{sub}") };
                    w.write_record([section.as_str(), &key, &value])?;
                }
            }
        }
        w.flush().map_err(|source| ExperimentError::Io {
            path: "<csv>".into(),
            source,
        })?;
        Ok(())
    }

    /// Writes CSV or JSON according to the extension of `path`.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ExperimentError> {
        let path = path.as_ref();
        let bytes = match OutputFormat::from_path(path)? {
            OutputFormat::Json => self.to_json()?.into_bytes(),
            OutputFormat::Csv => {
                let mut buf = Vec::new();
                self.write_csv(&mut buf)?;
                buf
            }
        };
        fs::write(path, bytes).map_err(|source| ExperimentError::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// `(dotted.key, scalar text)` leaves of a JSON value, in key order.
fn flatten(v: &Value) -> Vec<(String, String)> {
    let mut out = Vec::new();
    walk(v, String::new(), &mut out);
    out
}

fn walk(v: &Value, prefix: String, out: &mut Vec<(String, String)>) {
    let join = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(map) => {
            for (k, child) in map {
                walk(child, join(k), out);
            }
        }
        Value::Array(items) => {
            for (i, child) in items.iter().enumerate() {
                walk(child, join(&i.to_string()), out);
            }
        }
        Value::String(s) => out.push((prefix, s.clone())),
        Value::Null => out.push((prefix, String::new())),
        other => out.push((prefix, other.to_string())),
    }
}

/// Whether `key` names a wall-clock measurement: one of its `_`-separated
/// words is `ms`, `s` or `seconds` (`wall_time_s`, `encode_ms_median`).
pub fn is_timing_key(key: &str) -> bool {
    key.split('_').any(|w| matches!(w, "ms" | "s" | "seconds"))
}

/// Drops every object key that holds a wall-clock measurement, leaving what
/// must be identical between two runs of the same configuration.
pub fn strip_timings(v: &mut Value) {
    match v {
        Value::Object(map) => {
            map.retain(|k, _| !is_timing_key(k));
            map.values_mut().for_each(strip_timings);
        }
        Value::Array(items) => items.iter_mut().for_each(strip_timings),
        _ => {}
    }
}
