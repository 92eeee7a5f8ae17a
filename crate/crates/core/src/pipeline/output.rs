use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::Format;
use crate::table::Table;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> io::Result<String> {
    let mut hasher = Sha256::new();
    io::copy(&mut fs::File::open(path)?, &mut hasher)?;
    Ok(hex::encode(hasher.finalize()))
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

impl FileDigest {
    pub fn of(path: &Path, label: &str) -> io::Result<Self> {
        Ok(FileDigest {
            path: label.to_string(),
            sha256: sha256_file(path)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub created_at: DateTime<Utc>,
    pub config_sha256: String,
    /// The effective configuration, enough to rerun the command.
    pub config: String,
    pub master_seed: u64,
    pub seeds: BTreeMap<String, u64>,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
}

/// Collects the outputs of one command and writes its manifest last.
pub struct OutputDir {
    dir: PathBuf,
    command: String,
    formats: Vec<Format>,
    config: String,
    config_sha256: String,
    master_seed: u64,
    pub manifest_name: String,
    pub seeds: BTreeMap<String, u64>,
    pub inputs: Vec<FileDigest>,
    outputs: Vec<FileDigest>,
}

impl OutputDir {
    pub fn create(
        dir: &Path,
        command: &str,
        formats: &[Format],
        config: &str,
        config_sha256: &str,
        master_seed: u64,
    ) -> io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(OutputDir {
            dir: dir.to_path_buf(),
            command: command.to_string(),
            formats: formats.to_vec(),
            config: config.to_string(),
            config_sha256: config_sha256.to_string(),
            master_seed,
            manifest_name: command.to_string(),
            seeds: BTreeMap::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
        })
    }

    pub fn add_input(&mut self, path: &Path) -> io::Result<()> {
        self.inputs.push(FileDigest::of(path, &path.display().to_string())?);
        Ok(())
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> io::Result<PathBuf> {
        let path = self.dir.join(name);
        write_atomic(&path, bytes)?;
        self.outputs.push(FileDigest {
            path: name.to_string(),
            sha256: sha256_hex(bytes),
        });
        log::debug!("wrote {}", path.display());
        Ok(path)
    }

    /// `<stem>.tsv` always; `<stem>.md` when Markdown is enabled.
    pub fn table(&mut self, stem: &str, table: &Table) -> io::Result<()> {
        self.write(&format!("{stem}.tsv"), table.to_tsv().as_bytes())?;
        if self.formats.contains(&Format::Md) {
            self.write(&format!("{stem}.md"), table.to_markdown().as_bytes())?;
        }
        Ok(())
    }

    pub fn finish(self) -> io::Result<Manifest> {
        let manifest = Manifest {
            command: self.command,
            version: env!("CARGO_PKG_VERSION").to_string(),
            created_at: Utc::now(),
            config_sha256: self.config_sha256,
            config: self.config,
            master_seed: self.master_seed,
            seeds: self.seeds,
            inputs: self.inputs,
            outputs: self.outputs,
        };
        let json = serde_json::to_vec_pretty(&manifest).map_err(io::Error::other)?;
        write_atomic(&self.dir.join(format!("{}.manifest.json", self.manifest_name)), &json)?;
        Ok(manifest)
    }
}
