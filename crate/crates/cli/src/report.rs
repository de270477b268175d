use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

/// Structured output of one command.
#[derive(Debug, Serialize)]
pub struct AnalysisReport {
    pub analysis: String,
    pub input: String,
    /// SHA-256 of the input bytes.
    pub digest: String,
    /// Library routine that produced `outputs`.
    pub method: String,
    pub outputs: Value,
}

impl AnalysisReport {
    pub fn new(analysis: &str, input: &Path, method: &str, outputs: Value) -> Self {
        AnalysisReport {
            analysis: analysis.to_string(),
            input: input.display().to_string(),
            digest: file_digest(input),
            method: method.to_string(),
            outputs,
        }
    }

    pub fn emit(&self, output: Option<&Path>) -> std::io::Result<()> {
        let text = serde_json::to_string_pretty(self).expect("reports serialize") + "\n";
        match output {
            Some(p) => std::fs::write(p, text),
            None => std::io::stdout().write_all(text.as_bytes()),
        }
    }
}

pub fn digest_bytes(bytes: &[u8]) -> String {
    format!("sha256:{:x}", Sha256::digest(bytes))
}

fn file_digest(path: &Path) -> String {
    std::fs::read(path).map_or_else(|_| "unavailable".to_string(), |b| digest_bytes(&b))
}

/// Round to four significant digits for display.
pub fn sig4(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.3e}").parse().unwrap_or(x)
}

pub fn sig4_opt(x: Option<f64>) -> Value {
    x.map_or(Value::Null, |v| Value::from(sig4(v)))
}
