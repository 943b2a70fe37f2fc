use std::path::Path;

use flatcauchy::verify::{Check, CriterionReport};
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub schema: u32,
    pub seed: u64,
    /// SHA-256 over the command line and the bytes of every input file.
    pub input_sha256: String,
    pub pass: bool,
    pub seconds: f64,
    pub checks: Vec<Check>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub criteria: Vec<CriterionReport>,
    #[serde(skip_serializing_if = "Value::is_null")]
    pub result: Value,
}

/// What a command produces before the envelope is filled in.
#[derive(Default)]
pub struct Outcome {
    pub checks: Vec<Check>,
    pub criteria: Vec<CriterionReport>,
    pub result: Value,
}

impl Outcome {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass) && self.criteria.iter().all(|c| c.pass)
    }
}

#[derive(Default)]
pub struct InputHash(Sha256);

impl InputHash {
    pub fn new(args: &[String]) -> Self {
        let mut h = Sha256::new();
        for a in args {
            h.update(a.as_bytes());
            h.update([0u8]);
        }
        Self(h)
    }

    pub fn add(&mut self, bytes: &[u8]) {
        self.0.update((bytes.len() as u64).to_le_bytes());
        self.0.update(bytes);
    }

    pub fn hex(self) -> String {
        self.0.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

pub fn write(value: &impl Serialize, out: Option<&Path>) -> std::io::Result<()> {
    let text = serde_json::to_string_pretty(value).expect("report serializes") + "\n";
    match out {
        Some(p) => std::fs::write(p, text),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(text.as_bytes())
        }
    }
}
