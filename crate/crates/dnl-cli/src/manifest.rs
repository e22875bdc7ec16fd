//! Run manifests: the effective config snapshot, seed, crate versions,
//! timestamp, and the list of every file the command emitted. Two runs
//! with identical manifest inputs (everything except the timestamp)
//! produce byte-identical CSV outputs.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::{CliResult, RunContext};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Serialize)]
pub struct RunManifest {
    pub command: String,
    pub seed: u64,
    pub plot: bool,
    pub config: serde_json::Value,
    pub versions: BTreeMap<String, String>,
    pub timestamp_unix: u64,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(
        ctx: &RunContext,
        command: &str,
        section: impl Serialize,
        mut outputs: Vec<String>,
    ) -> Self {
        let mut versions = BTreeMap::new();
        versions.insert("dnl-core".to_string(), dnl_core::VERSION.to_string());
        versions.insert(
            "dnl-cli".to_string(),
            env!("CARGO_PKG_VERSION").to_string(),
        );
        outputs.push(MANIFEST_FILE.to_string());
        outputs.sort();
        RunManifest {
            command: command.to_string(),
            seed: ctx.seed,
            plot: ctx.plot,
            config: serde_json::to_value(section).expect("config sections always serialize"),
            versions,
            timestamp_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            outputs,
        }
    }

    pub fn write(&self, out_dir: &Path) -> CliResult<()> {
        std::fs::create_dir_all(out_dir)?;
        let json = serde_json::to_string_pretty(self)
            .expect("manifest always serializes");
        std::fs::write(out_dir.join(MANIFEST_FILE), json)?;
        Ok(())
    }
}
