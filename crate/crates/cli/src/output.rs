//! Artifact writing: run directories keyed by scenario hash, a JSON
//! manifest every data file refers back to, and CSV emission with
//! column headers.

use anyhow::{Context, Result};
use lvfront_core::Scenario;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

pub fn scenario_hash(scenario: &Scenario) -> String {
    let digest = Sha256::digest(scenario.to_canonical_toml().as_bytes());
    digest.iter().take(6).map(|b| format!("{b:02x}")).collect()
}

pub struct RunDir {
    pub dir: PathBuf,
    pub hash: String,
}

impl RunDir {
    pub fn create(root: &Path, scenario: &Scenario) -> Result<Self> {
        let hash = scenario_hash(scenario);
        let dir = root.join(&hash);
        std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        std::fs::write(dir.join("scenario.toml"), scenario.to_canonical_toml())?;
        Ok(Self { dir, hash })
    }

    pub fn write_json(&self, name: &str, value: &impl Serialize) -> Result<PathBuf> {
        let path = self.dir.join(name);
        let mut doc = serde_json::to_value(value)?;
        if let serde_json::Value::Object(map) = &mut doc {
            map.insert("manifest".into(), serde_json::json!(self.hash));
        } else {
            doc = serde_json::json!({ "manifest": self.hash, "data": doc });
        }
        std::fs::write(&path, serde_json::to_string_pretty(&doc)?)?;
        Ok(path)
    }

    /// CSV with a manifest reference line and a header row; rows are
    /// written through the supplied closure.
    pub fn write_csv(
        &self,
        name: &str,
        header: &str,
        rows: impl FnOnce(&mut String),
    ) -> Result<PathBuf> {
        let path = self.dir.join(name);
        let mut out = String::new();
        out.push_str(&format!("# manifest: {}\n", self.hash));
        out.push_str(header);
        out.push('\n');
        rows(&mut out);
        std::fs::write(&path, out)?;
        Ok(path)
    }
}

#[derive(Serialize)]
pub struct Manifest {
    pub scenario_hash: String,
    pub scenario_name: String,
    pub toolkit_version: String,
    pub command: String,
    pub wall_clock_seconds: f64,
    pub grid_n: usize,
    pub tolerances: lvfront_core::Tolerances,
    pub verdicts: serde_json::Value,
}
