//! Output directories and the manifest written alongside their artifacts.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

pub const VERSION: &str = env!("TOAD_VERSION");

#[derive(Debug, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub argv: Vec<String>,
    pub version: &'static str,
    /// Fully resolved training configuration in `key = value` form.
    pub config: Option<String>,
    pub seeds: BTreeMap<String, u64>,
    pub parameters: BTreeMap<String, String>,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub wall_clock_seconds: f64,
}

pub fn digest(path: &Path) -> std::io::Result<FileDigest> {
    let bytes = fs::read(path)?;
    Ok(FileDigest {
        path: path.display().to_string(),
        sha256: format!("{:x}", Sha256::digest(&bytes)),
        bytes: bytes.len() as u64,
    })
}

/// The only directory a command writes into.
pub struct OutDir {
    root: PathBuf,
    written: Vec<PathBuf>,
    inputs: Vec<PathBuf>,
    started: Instant,
    pub seeds: BTreeMap<String, u64>,
    pub parameters: BTreeMap<String, String>,
    pub config: Option<String>,
}

impl OutDir {
    pub fn create(root: &Path) -> toad::Result<Self> {
        fs::create_dir_all(root)?;
        Ok(Self {
            root: root.to_path_buf(),
            written: Vec::new(),
            inputs: Vec::new(),
            started: Instant::now(),
            seeds: BTreeMap::new(),
            parameters: BTreeMap::new(),
            config: None,
        })
    }

    /// Writes `name` (a bare file name) under the output directory.
    pub fn write(&mut self, name: &str, contents: impl AsRef<[u8]>) -> toad::Result<PathBuf> {
        debug_assert!(!name.contains('/') && !name.contains(".."));
        let path = self.root.join(name);
        fs::write(&path, contents)?;
        log::info!("wrote {}", path.display());
        if !self.written.contains(&path) {
            self.written.push(path.clone());
        }
        Ok(path)
    }

    pub fn input(&mut self, path: &Path) {
        if !self.inputs.iter().any(|p| p == path) {
            self.inputs.push(path.to_path_buf());
        }
    }

    pub fn seed(&mut self, name: &str, value: u64) {
        self.seeds.insert(name.to_owned(), value);
    }

    pub fn param(&mut self, name: &str, value: impl ToString) {
        self.parameters.insert(name.to_owned(), value.to_string());
    }

    /// Writes `manifest.json` describing everything written so far.
    pub fn finish(self, command: &str) -> toad::Result<PathBuf> {
        let inputs = self.inputs.iter().map(|p| digest(p)).collect::<Result<_, _>>()?;
        let outputs = self.written.iter().map(|p| digest(p)).collect::<Result<_, _>>()?;
        let manifest = Manifest {
            command: command.to_owned(),
            argv: std::env::args().collect(),
            version: VERSION,
            config: self.config,
            seeds: self.seeds,
            parameters: self.parameters,
            inputs,
            outputs,
            wall_clock_seconds: self.started.elapsed().as_secs_f64(),
        };
        let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        let path = self.root.join("manifest.json");
        fs::write(&path, json + "\n")?;
        Ok(path)
    }
}
