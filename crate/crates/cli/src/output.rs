//! Artifact directory bookkeeping and the run manifest.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::RunConfig;
use crate::CliError;

/// Environment variable naming the root under which runs without an explicit
/// output directory are written.
pub const OUTPUT_ENV: &str = "DGPENALTY_OUTPUT";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub preset: Option<String>,
    pub version: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub config: Option<RunConfig>,
    /// Preset runs record each step instead of a single config.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub steps: Vec<StepRecord>,
    /// Paths relative to the manifest's directory, in write order.
    pub outputs: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StepRecord {
    pub name: String,
    pub command: String,
    pub config: RunConfig,
}

pub struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
}

impl Outputs {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Config(format!("cannot create output directory {}: {e}", dir.display())))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn write(
        &mut self,
        name: &str,
        f: impl FnOnce(&mut BufWriter<File>) -> dgpenalty::Result<()>,
    ) -> Result<(), CliError> {
        let path = self.dir.join(name);
        let mut w = BufWriter::new(File::create(&path).map_err(dgpenalty::Error::from)?);
        f(&mut w)?;
        w.flush().map_err(dgpenalty::Error::from)?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn json(&mut self, name: &str, v: &Value) -> Result<(), CliError> {
        self.write(name, |w| {
            serde_json::to_writer_pretty(&mut *w, v)?;
            writeln!(w)?;
            Ok(())
        })
    }

    /// Records files written by a nested run in `sub`.
    pub fn adopt(&mut self, sub: &str, files: &[String]) {
        self.files.extend(files.iter().map(|f| format!("{sub}/{f}")));
    }

    /// Writes `manifest.json` for a single command and returns the recorded file list.
    pub fn finish(self, command: &str, config: &RunConfig) -> Result<Vec<String>, CliError> {
        let mut config = config.clone();
        config.output = None;
        self.write_manifest(Manifest {
            command: command.to_string(),
            preset: None,
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: Some(config),
            steps: Vec::new(),
            outputs: Vec::new(),
        })
    }

    pub fn finish_preset(self, preset: &str, steps: Vec<StepRecord>) -> Result<Vec<String>, CliError> {
        self.write_manifest(Manifest {
            command: "preset".into(),
            preset: Some(preset.to_string()),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: None,
            steps,
            outputs: Vec::new(),
        })
    }

    fn write_manifest(self, mut m: Manifest) -> Result<Vec<String>, CliError> {
        m.outputs = self.files.clone();
        let text = serde_json::to_string_pretty(&m).map_err(dgpenalty::Error::from)? + "\n";
        std::fs::write(self.dir.join("manifest.json"), text).map_err(dgpenalty::Error::from)?;
        Ok(self.files)
    }
}

/// Flag, then config, then `$DGPENALTY_OUTPUT/<name>`, then `dgpenalty-output/<name>`.
pub fn resolve_dir(flag: Option<&Path>, config: Option<&Path>, name: &str) -> PathBuf {
    if let Some(p) = flag.or(config) {
        return p.to_path_buf();
    }
    match std::env::var_os(OUTPUT_ENV) {
        Some(root) if !root.is_empty() => PathBuf::from(root).join(name),
        _ => PathBuf::from("dgpenalty-output").join(name),
    }
}
