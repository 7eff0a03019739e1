use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::Context;
use netlb::network::Algorithm;
use serde::Serialize;

/// Bumped whenever a CSV column is added, removed or reordered.
pub const CSV_SCHEMA: u32 = 1;

pub fn now_ms() -> u128 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0)
}

/// What produced an output directory. `config` is the effective scenario
/// after overrides, so rerunning the command on it (with the same seeds)
/// reproduces every data file.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub scenario: String,
    pub source_config: PathBuf,
    pub config: PathBuf,
    pub config_digest: String,
    pub code_version: String,
    pub csv_schema: u32,
    pub algorithms: Vec<Algorithm>,
    pub seeds: Vec<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<(String, Vec<String>)>,
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
    pub outputs: Vec<PathBuf>,
}

impl RunManifest {
    pub fn new(command: &str, scenario: &str, source_config: &Path, config_digest: String) -> Self {
        RunManifest {
            command: command.to_string(),
            scenario: scenario.to_string(),
            source_config: source_config.to_path_buf(),
            config: PathBuf::new(),
            config_digest,
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            csv_schema: CSV_SCHEMA,
            algorithms: Vec::new(),
            seeds: Vec::new(),
            trace: None,
            sweep: None,
            started_unix_ms: now_ms(),
            finished_unix_ms: 0,
            outputs: Vec::new(),
        }
    }
}

/// An output directory that remembers what was written to it.
pub struct OutDir {
    root: PathBuf,
    written: Vec<PathBuf>,
}

impl OutDir {
    pub fn create(root: &Path) -> anyhow::Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("cannot create {}", root.display()))?;
        Ok(OutDir {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write_with<F>(&mut self, name: &str, f: F) -> anyhow::Result<PathBuf>
    where
        F: FnOnce(&mut BufWriter<File>) -> anyhow::Result<()>,
    {
        let path = self.path(name);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        }
        let file = File::create(&path).with_context(|| format!("cannot write {}", path.display()))?;
        let mut w = BufWriter::new(file);
        f(&mut w).with_context(|| format!("writing {}", path.display()))?;
        w.flush().with_context(|| format!("writing {}", path.display()))?;
        self.written.push(path.clone());
        Ok(path)
    }

    pub fn write_str(&mut self, name: &str, text: &str) -> anyhow::Result<PathBuf> {
        self.write_with(name, |w| Ok(w.write_all(text.as_bytes())?))
    }

    /// Writes the manifest last, listing everything written before it.
    pub fn finish(mut self, mut manifest: RunManifest) -> anyhow::Result<PathBuf> {
        manifest.outputs = std::mem::take(&mut self.written);
        manifest.finished_unix_ms = now_ms();
        let text = serde_json::to_string_pretty(&manifest)? + "\n";
        self.write_str("manifest.json", &text)
    }
}
