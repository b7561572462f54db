use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

/// Envelope shared by every command's JSON output.
#[derive(Debug, Serialize)]
pub struct Report<C: Serialize, R: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub config: C,
    pub result: R,
}

impl<C: Serialize, R: Serialize> Report<C, R> {
    pub fn new(command: &'static str, seed: Option<u64>, config: C, result: R) -> Self {
        Self {
            tool: env!("CARGO_BIN_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            seed,
            config,
            result,
        }
    }

    /// Writes the report to `out`, or to stdout when `out` is `None`.
    pub fn emit(&self, out: Option<&Path>) -> entrochart::Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        match out {
            Some(path) => write_atomic(path, text.as_bytes()),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }
}

/// Writes through a sibling temp file so readers never see partial output.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> entrochart::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// A measurement that may be undefined, rendered as the string "undefined".
pub fn measure(value: Option<f64>) -> Value {
    match value {
        Some(v) if v.is_finite() => Value::from(v),
        _ => Value::from("undefined"),
    }
}
