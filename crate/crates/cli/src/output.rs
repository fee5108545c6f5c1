//! Atomic artifact writes and the run manifest.

use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use sha2::{Digest, Sha256};

pub struct OutputDir {
    dir: PathBuf,
    written: std::cell::RefCell<Vec<String>>,
}

impl OutputDir {
    pub fn create(dir: &Path) -> anyhow::Result<Self> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Default::default(),
        })
    }

    /// Writes through a temporary file in the same directory, then renames
    /// it over `name`, so readers never see a partial file.
    pub fn write<F>(&self, name: &str, fill: F) -> anyhow::Result<()>
    where
        F: FnOnce(&mut dyn Write) -> anyhow::Result<()>,
    {
        let target = self.dir.join(name);
        let tmp = tempfile::NamedTempFile::new_in(&self.dir)
            .with_context(|| format!("temporary file in {}", self.dir.display()))?;
        {
            let mut w = BufWriter::new(tmp.as_file());
            fill(&mut w)?;
            w.flush()?;
        }
        tmp.as_file().sync_all()?;
        tmp.persist(&target)
            .with_context(|| format!("renaming into {}", target.display()))?;
        self.written.borrow_mut().push(name.to_string());
        Ok(())
    }

    pub fn written(&self) -> Vec<String> {
        self.written.borrow().clone()
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
