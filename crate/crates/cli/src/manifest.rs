use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Wall-clock laps, recorded only when requested so that manifests stay
/// byte-identical between runs by default.
pub struct Stopwatch {
    enabled: bool,
    last: Instant,
    laps: BTreeMap<String, f64>,
}

impl Stopwatch {
    pub fn new(enabled: bool) -> Self {
        Self {
            enabled,
            last: Instant::now(),
            laps: BTreeMap::new(),
        }
    }

    pub fn lap(&mut self, stage: &str) {
        let now = Instant::now();
        if self.enabled {
            let ms = (now - self.last).as_secs_f64() * 1e3;
            *self.laps.entry(stage.to_string()).or_default() += ms;
        }
        self.last = now;
    }
}

#[derive(Serialize)]
struct FileRecord {
    file: String,
    sha256: String,
    bytes: usize,
}

#[derive(Serialize)]
pub struct Manifest {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    input: FileRecord,
    /// The pipeline is deterministic; no seed is consumed.
    seed: Option<u64>,
    parameters: BTreeMap<String, Value>,
    outputs: Vec<FileRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    timings_ms: Option<BTreeMap<String, f64>>,
}

impl Manifest {
    pub fn new(command: &'static str, input_name: &str, input: &[u8]) -> Self {
        Self {
            tool: "lightray",
            version: env!("CARGO_PKG_VERSION"),
            command,
            input: FileRecord {
                file: input_name.to_string(),
                sha256: sha256_hex(input),
                bytes: input.len(),
            },
            seed: None,
            parameters: BTreeMap::new(),
            outputs: Vec::new(),
            timings_ms: None,
        }
    }

    pub fn parameter(&mut self, key: &str, value: Value) {
        self.parameters.insert(key.to_string(), value);
    }

    pub fn write_output(&mut self, dir: &Path, name: &str, bytes: &[u8]) -> std::io::Result<()> {
        fs::write(dir.join(name), bytes)?;
        self.outputs.push(FileRecord {
            file: name.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len(),
        });
        Ok(())
    }

    pub fn finish(mut self, dir: &Path, clock: Stopwatch) -> std::io::Result<()> {
        if clock.enabled {
            self.timings_ms = Some(clock.laps);
        }
        let mut text = serde_json::to_string_pretty(&self).expect("manifest serialises");
        text.push('\n');
        fs::write(dir.join("manifest.json"), text)
    }
}
