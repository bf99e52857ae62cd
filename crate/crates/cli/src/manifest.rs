//! Run manifests: enough to repeat a run and a record of how it went.

use std::path::{Path, PathBuf};

use anyhow::Result;
use serde::{Deserialize, Serialize};

use crate::args::{BenchArgs, EvalArgs, GenerateArgs};
use crate::exit::Failure;

pub const MANIFEST_SCHEMA: &str = "fsd.manifest/1";

/// The replayable part of a manifest.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum Run {
    Generate(GenerateArgs),
    Eval(EvalArgs),
    Bench(BenchArgs),
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema: String,
    pub tool_version: String,
    pub run: Run,
    /// Resolved configurations, backend details and timings; informative only.
    #[serde(default)]
    pub details: serde_json::Value,
}

impl RunManifest {
    pub fn new(run: Run, details: serde_json::Value) -> Self {
        Self { schema: MANIFEST_SCHEMA.into(), tool_version: env!("CARGO_PKG_VERSION").into(), run, details }
    }

    /// Writes to `explicit`, else next to `out`, else to stderr.
    pub fn write(&self, explicit: Option<&Path>, out: Option<&Path>) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        match explicit.map(Path::to_path_buf).or_else(|| out.map(default_path)) {
            Some(path) => std::fs::write(&path, text + "\n")?,
            None => eprintln!("{text}"),
        }
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read manifest {}: {e}", path.display())))?;
        let manifest: RunManifest = serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("bad manifest {}: {e}", path.display())))?;
        if manifest.schema != MANIFEST_SCHEMA {
            return Err(Failure::Usage(format!("unsupported manifest schema `{}`", manifest.schema)).into());
        }
        Ok(manifest)
    }
}

pub fn default_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}
