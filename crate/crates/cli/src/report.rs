//! Report documents and atomic file output.

use std::io::Write;
use std::path::Path;

use anyhow::Context;
use privaudit_core::generators::InstanceSpec;
use privaudit_core::relations::AuditReport;
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub elapsed_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub schema_version: u32,
    pub tool: String,
    pub instance: InstanceSpec,
    pub report: AuditReport,
    /// Excluded from determinism comparisons.
    pub timing: Timing,
}

impl ReportDocument {
    pub fn new(instance: InstanceSpec, report: AuditReport, elapsed_ms: u64) -> Self {
        ReportDocument {
            schema_version: SCHEMA_VERSION,
            tool: format!("privaudit {}", env!("CARGO_PKG_VERSION")),
            instance,
            report,
            timing: Timing { elapsed_ms },
        }
    }

    pub fn to_json(&self, pretty: bool) -> serde_json::Result<String> {
        let mut s = if pretty {
            serde_json::to_string_pretty(self)?
        } else {
            serde_json::to_string(self)?
        };
        s.push('\n');
        Ok(s)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read {}", path.display()))?;
        let doc: ReportDocument = serde_json::from_str(&text)
            .with_context(|| format!("{} is not a report document", path.display()))?;
        anyhow::ensure!(
            doc.schema_version == SCHEMA_VERSION,
            "{}: unsupported schema version {}",
            path.display(),
            doc.schema_version
        );
        Ok(doc)
    }
}

/// Writes `contents` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, contents: &str) -> anyhow::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("cannot create a temporary file in {}", dir.display()))?;
    tmp.write_all(contents.as_bytes())?;
    tmp.flush()?;
    tmp.persist(path)
        .with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}
