use std::path::Path;

use anyhow::{Context, Result};
use polypencil::pencil::Tolerances;
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Versions {
    pub polypencil: &'static str,
    pub cli: &'static str,
}

/// Everything that determines the output bytes besides the input contents themselves.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub inputs: Vec<InputDigest>,
    pub tolerances: Tolerances,
    pub seed: u64,
    pub versions: Versions,
}

impl RunManifest {
    pub fn new(subcommand: &str, tolerances: Tolerances, seed: u64) -> Self {
        RunManifest {
            subcommand: subcommand.into(),
            inputs: Vec::new(),
            tolerances,
            seed,
            versions: Versions { polypencil: polypencil::VERSION, cli: env!("CARGO_PKG_VERSION") },
        }
    }

    /// Reads an input file and records its digest.
    pub fn read(&mut self, path: &Path) -> Result<String> {
        let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        self.inputs.push(InputDigest { path: path.display().to_string(), sha256: hex(&Sha256::digest(&bytes)) });
        String::from_utf8(bytes).with_context(|| format!("{} is not UTF-8", path.display()))
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Serialize)]
pub struct Envelope<'a, T: Serialize> {
    pub manifest: &'a RunManifest,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<bool>,
    pub result: &'a T,
}
