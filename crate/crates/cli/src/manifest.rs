//! Output directory bookkeeping: every file written by a command is hashed
//! and recorded in `run_manifest.json`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::failure::Failure;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandKind {
    Forward,
    Validate,
    Solve,
    Verify,
    Soliton,
    Roundtrip,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EmittedFile {
    pub path: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub command: CommandKind,
    pub config_path: String,
    pub output_dir: String,
    pub emitted: Vec<EmittedFile>,
}

/// Manifest file name of one command; each command keeps its own manifest
/// so successive runs into one directory do not erase each other.
pub fn manifest_file(command: CommandKind) -> String {
    let name = serde_json::to_value(command).expect("command serializes");
    format!("run_manifest_{}.json", name.as_str().expect("command is a string"))
}

/// Writes files into one output directory and records their hashes.
pub struct OutputDir {
    root: PathBuf,
    manifest: RunManifest,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl OutputDir {
    pub fn create(root: &Path, command: CommandKind, config_path: &str) -> Result<Self, Failure> {
        fs::create_dir_all(root).map_err(|e| Failure::io(root, e))?;
        Ok(OutputDir {
            root: root.to_path_buf(),
            manifest: RunManifest {
                command,
                config_path: config_path.to_string(),
                output_dir: root.display().to_string(),
                emitted: Vec::new(),
            },
        })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<(), Failure> {
        let path = self.root.join(name);
        fs::write(&path, contents).map_err(|e| Failure::io(&path, e))?;
        self.manifest.emitted.retain(|f| f.path != name);
        self.manifest.emitted.push(EmittedFile {
            path: name.to_string(),
            bytes: contents.len(),
            sha256: sha256_hex(contents.as_bytes()),
        });
        Ok(())
    }

    /// Write the manifest; it does not list itself.
    pub fn finish(self) -> Result<RunManifest, Failure> {
        let path = self.root.join(manifest_file(self.manifest.command));
        let text = serde_json::to_string_pretty(&self.manifest).expect("manifest serializes");
        fs::write(&path, text).map_err(|e| Failure::io(&path, e))?;
        Ok(self.manifest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha256_known_vector() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn rewrite_replaces_entry() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = OutputDir::create(dir.path(), CommandKind::Forward, "c.json").unwrap();
        out.write("a.txt", "one").unwrap();
        out.write("a.txt", "two").unwrap();
        let m = out.finish().unwrap();
        assert_eq!(m.emitted.len(), 1);
        assert_eq!(m.emitted[0].sha256, sha256_hex(b"two"));
        assert!(dir.path().join("run_manifest_forward.json").exists());
    }
}
