//! Report envelope, atomic file writing, and the CSV projection.

use serde::Serialize;
use serde_json::Value;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

/// The canonical JSON report. Field order is fixed by the struct, and all
/// content except `timestamp_unix` is a pure function of the command line,
/// so identical invocations produce byte-identical reports modulo that one
/// field.
#[derive(Debug, Serialize)]
pub struct Envelope {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub params: Value,
    pub timestamp_unix: u64,
    pub passed: bool,
    pub payload: Value,
}

impl Envelope {
    pub fn new(command: String, params: Value, passed: bool, payload: Value) -> Self {
        Self {
            tool: "grandexp",
            version: env!("CARGO_PKG_VERSION"),
            command,
            params,
            timestamp_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            passed,
            payload,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("envelope serializes");
        s.push('\n');
        s
    }

    /// Flattened projection for spreadsheets: suite checks become rows,
    /// everything else key,value rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("section,name,passed,observed,bound,slack\n");
        out.push_str(&format!("meta,command,,{},,\n", csv_field(&self.command)));
        out.push_str(&format!("meta,passed,{},,,\n", self.passed));
        flatten_value("payload", &self.payload, &mut out);
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn flatten_value(prefix: &str, v: &Value, out: &mut String) {
    match v {
        Value::Object(map) => {
            // suites render as check rows
            if let (Some(Value::String(name)), Some(Value::Array(checks))) =
                (map.get("name"), map.get("checks"))
            {
                for c in checks {
                    let get_f = |k: &str| {
                        c.get(k)
                            .and_then(Value::as_f64)
                            .map(|x| x.to_string())
                            .unwrap_or_default()
                    };
                    out.push_str(&format!(
                        "{},{},{},{},{},{}\n",
                        csv_field(name),
                        csv_field(c.get("name").and_then(Value::as_str).unwrap_or("")),
                        c.get("passed").and_then(Value::as_bool).unwrap_or(false),
                        get_f("observed"),
                        get_f("bound"),
                        get_f("slack"),
                    ));
                }
                return;
            }
            for (k, val) in map {
                flatten_value(&format!("{prefix}.{k}"), val, out);
            }
        }
        Value::Array(items) => {
            for (i, item) in items.iter().enumerate() {
                flatten_value(&format!("{prefix}[{i}]"), item, out);
            }
        }
        other => {
            out.push_str(&format!(
                "{},{},,,,\n",
                csv_field(prefix),
                csv_field(&other.to_string())
            ));
        }
    }
}

/// Write atomically: temp file in the same directory, then rename.
pub fn write_atomic(path: &Path, content: &str) -> std::io::Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, content)?;
    std::fs::rename(&tmp, path)
}

pub fn suite_value(suite: &grandexp::Suite) -> Value {
    serde_json::to_value(suite).expect("suite serializes")
}
