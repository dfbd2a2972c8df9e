//! Run directories: atomic file writes and the run manifest.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub sha256: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arm: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub tool_version: String,
    pub kind: String,
    pub config_hash: String,
    pub seed: u64,
    pub started_at: String,
    pub finished_at: String,
    pub files: Vec<ManifestEntry>,
    /// Divergence flag per arm (empty for experiments without arms).
    pub diverged: BTreeMap<String, bool>,
    /// Wall-clock seconds per arm.
    pub wall_time_seconds: BTreeMap<String, f64>,
    pub total_wall_time_seconds: f64,
}

impl RunManifest {
    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Writes every file through a temporary sibling and a rename, and records
/// its digest for the manifest.
#[derive(Debug)]
pub struct RunDir {
    path: PathBuf,
    files: Vec<ManifestEntry>,
}

impl RunDir {
    /// Creates `path`. A previous run in the same place (recognized by its
    /// manifest) is replaced; a non-empty directory without one is refused.
    pub fn create(path: &Path) -> Result<Self> {
        if path.exists() {
            if path.join(MANIFEST_FILE).is_file() {
                fs::remove_dir_all(path).map_err(|e| Error::io(path, e))?;
            } else if fs::read_dir(path).map_err(|e| Error::io(path, e))?.next().is_some() {
                return Err(Error::Config(format!(
                    "{} exists and is not a previous run directory",
                    path.display()
                )));
            }
        }
        fs::create_dir_all(path).map_err(|e| Error::io(path, e))?;
        Ok(Self {
            path: path.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    fn atomic_write(&self, name: &str, bytes: &[u8]) -> Result<()> {
        let dst = self.path.join(name);
        let tmp = self.path.join(format!(".{name}.tmp"));
        let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
        f.sync_all().map_err(|e| Error::io(&tmp, e))?;
        fs::rename(&tmp, &dst).map_err(|e| Error::io(&dst, e))
    }

    pub fn write(&mut self, name: &str, bytes: &[u8], arm: Option<&str>) -> Result<()> {
        self.atomic_write(name, bytes)?;
        self.files.push(ManifestEntry {
            path: name.to_string(),
            sha256: hex::encode(Sha256::digest(bytes)),
            arm: arm.map(str::to_string),
        });
        Ok(())
    }

    pub fn write_csv<R, S>(&mut self, name: &str, header: &[&str], rows: R, arm: Option<&str>) -> Result<()>
    where
        R: IntoIterator<Item = Vec<S>>,
        S: AsRef<[u8]>,
    {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        for r in rows {
            w.write_record(&r)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;
        self.write(name, &bytes, arm)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text.as_bytes(), None)
    }

    /// Writes `manifest.json`, which lists every other file.
    pub fn finish(self, mut manifest: RunManifest) -> Result<RunManifest> {
        manifest.files = self.files;
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        let tmp = RunDir {
            path: self.path,
            files: Vec::new(),
        };
        tmp.atomic_write(MANIFEST_FILE, text.as_bytes())?;
        Ok(manifest)
    }
}

/// Shortest round-trip formatting with stable spellings for non-finite values.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:?}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn manifest() -> RunManifest {
        RunManifest {
            tool: "t".into(),
            tool_version: "0".into(),
            kind: "k".into(),
            config_hash: "h".into(),
            seed: 0,
            started_at: String::new(),
            finished_at: String::new(),
            files: Vec::new(),
            diverged: BTreeMap::new(),
            wall_time_seconds: BTreeMap::new(),
            total_wall_time_seconds: 0.0,
        }
    }

    #[test]
    fn manifest_lists_files_with_digests() {
        let tmp = tempfile::tempdir().unwrap();
        let p = tmp.path().join("run");
        let mut d = RunDir::create(&p).unwrap();
        d.write_csv("a.csv", &["x", "y"], vec![vec!["1", "2"]], Some("arm")).unwrap();
        let m = d.finish(manifest()).unwrap();
        assert_eq!(m.files.len(), 1);
        let bytes = fs::read(p.join("a.csv")).unwrap();
        assert_eq!(bytes, b"x,y\n1,2\n");
        assert_eq!(m.files[0].sha256, hex::encode(Sha256::digest(&bytes)));
        assert_eq!(RunManifest::load(&p).unwrap(), m);
        let leftovers: Vec<_> = fs::read_dir(&p)
            .unwrap()
            .filter(|e| e.as_ref().unwrap().file_name().to_string_lossy().ends_with(".tmp"))
            .collect();
        assert!(leftovers.is_empty());
    }

    #[test]
    fn rerun_replaces_previous_run_but_not_foreign_dirs() {
        let tmp = tempfile::tempdir().unwrap();
        let p = tmp.path().join("run");
        let mut d = RunDir::create(&p).unwrap();
        d.write("old.txt", b"old", None).unwrap();
        d.finish(manifest()).unwrap();
        let d = RunDir::create(&p).unwrap();
        assert!(!d.path().join("old.txt").exists());

        let foreign = tmp.path().join("foreign");
        fs::create_dir(&foreign).unwrap();
        fs::write(foreign.join("keep.txt"), b"x").unwrap();
        assert!(RunDir::create(&foreign).is_err());
        assert!(foreign.join("keep.txt").exists());
    }

    #[test]
    fn float_formatting_round_trips() {
        for x in [0.1, 1e-300, 123456.789, -2.5] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_f64(f64::NAN), "nan");
        assert_eq!(fmt_f64(f64::NEG_INFINITY), "-inf");
    }
}
