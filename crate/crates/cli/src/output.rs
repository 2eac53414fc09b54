//! Atomic file output and the run manifest.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use pencilspec::Error;
use serde::Serialize;

pub fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Collects outputs of one command and writes them through temp-then-rename.
pub struct OutDir {
    dir: PathBuf,
    written: Vec<String>,
}

impl OutDir {
    pub fn create(dir: &Path) -> Result<Self, Error> {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn write_with<F>(&mut self, name: &str, fill: F) -> Result<(), Error>
    where
        F: FnOnce(&mut Vec<u8>) -> std::io::Result<()>,
    {
        let mut buf = Vec::new();
        let path = self.dir.join(name);
        fill(&mut buf).map_err(|e| io_err(&path, e))?;
        write_atomic(&path, &buf)?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn finish(self, mut manifest: RunManifest) -> Result<(), Error> {
        manifest.outputs = self.written.clone();
        manifest.wall_time_s = manifest.started.elapsed().as_secs_f64();
        let path = self.dir.join(MANIFEST_NAME);
        let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Parse(e.to_string()))?;
        write_atomic(&path, text.as_bytes())
    }
}

pub const MANIFEST_NAME: &str = "manifest.json";

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), Error> {
    let tmp = path.with_extension("tmp");
    let mut f = fs::File::create(&tmp).map_err(|e| io_err(&tmp, e))?;
    f.write_all(bytes).map_err(|e| io_err(&tmp, e))?;
    f.sync_all().map_err(|e| io_err(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| io_err(path, e))
}

/// Provenance of one invocation, written as `manifest.json` beside its outputs.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: Option<String>,
    pub settings: serde_json::Map<String, serde_json::Value>,
    pub seed: Option<u64>,
    pub tool_version: String,
    pub threads: usize,
    pub wall_time_s: f64,
    pub outputs: Vec<String>,
    #[serde(skip)]
    started: Instant,
}

impl RunManifest {
    pub fn new(command: &str, config: Option<&Path>) -> Self {
        Self {
            command: command.into(),
            config: config.map(|p| p.display().to_string()),
            settings: serde_json::Map::new(),
            seed: None,
            tool_version: env!("CARGO_PKG_VERSION").into(),
            threads: rayon::current_num_threads(),
            wall_time_s: 0.0,
            outputs: Vec::new(),
            started: Instant::now(),
        }
    }

    pub fn set(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(serde_json::Value::Null);
        self.settings.insert(key.into(), v);
    }
}
