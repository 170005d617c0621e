use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Serialize)]
pub struct Artifact {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub config_sha256: String,
    pub seed: Option<u64>,
    pub artifacts: Vec<Artifact>,
}

/// Writes artifacts into one directory and records their digests.
pub struct ArtifactWriter {
    dir: PathBuf,
    artifacts: Vec<Artifact>,
}

impl ArtifactWriter {
    pub fn create(dir: &Path) -> std::io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), artifacts: Vec::new() })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> std::io::Result<()> {
        fs::write(self.dir.join(name), bytes)?;
        self.artifacts.push(Artifact { path: name.to_string(), sha256: sha256_hex(bytes) });
        Ok(())
    }

    /// Writes `manifest.json` last so its presence marks a completed run.
    pub fn finish(self, command: &str, config_sha256: String, seed: Option<u64>) -> std::io::Result<()> {
        let manifest = Manifest { command: command.to_string(), config_sha256, seed, artifacts: self.artifacts };
        let text = serde_json::to_string_pretty(&manifest).map_err(std::io::Error::other)? + "\n";
        fs::write(self.dir.join("manifest.json"), text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha256_of_abc() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    #[test]
    fn manifest_lists_artifacts_in_write_order() {
        let dir = tempfile::tempdir().unwrap();
        let mut w = ArtifactWriter::create(&dir.path().join("run")).unwrap();
        w.write("b.csv", b"x\n").unwrap();
        w.write("a.csv", b"y\n").unwrap();
        w.finish("test", "00".into(), Some(3)).unwrap();
        let text = fs::read_to_string(dir.path().join("run/manifest.json")).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["artifacts"][0]["path"], "b.csv");
        assert_eq!(v["artifacts"][1]["path"], "a.csv");
        assert_eq!(v["seed"], 3);
    }
}
