use std::fs;
use std::path::Path;
use std::time::Instant;

use gaussalign::{Error, Result};
use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

pub const SCHEMA: &str = "gaussalign/1";

#[derive(Debug, Clone, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

impl InputDigest {
    pub fn of_file(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|source| Error::Io { path: path.display().to_string(), source })?;
        Ok(Self { path: path.display().to_string(), sha256: hex::encode(Sha256::digest(&bytes)) })
    }
}

/// The JSON document every subcommand prints.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub schema: &'static str,
    pub command: String,
    pub seed: u64,
    pub inputs: Vec<InputDigest>,
    pub result: Value,
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings: Option<Map<String, Value>>,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Wall-clock seconds per named phase.
#[derive(Debug, Default)]
pub struct Timings {
    phases: Vec<(String, f64)>,
}

impl Timings {
    pub fn time<T>(&mut self, phase: impl Into<String>, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.phases.push((phase.into(), start.elapsed().as_secs_f64()));
        out
    }

    pub fn into_map(self) -> Map<String, Value> {
        self.phases.into_iter().map(|(k, v)| (k, Value::from(v))).collect()
    }
}

/// Rejects payloads with non-finite numbers (serialized as `null`).
pub fn check_finite(value: &Value, at: &str) -> Result<()> {
    match value {
        Value::Null => Err(Error::Range(format!("non-finite value at {at}"))),
        Value::Array(items) => items.iter().enumerate().try_for_each(|(i, v)| check_finite(v, &format!("{at}[{i}]"))),
        Value::Object(map) => map.iter().try_for_each(|(k, v)| check_finite(v, &format!("{at}.{k}"))),
        _ => Ok(()),
    }
}

pub fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("plain data serializes")
}
