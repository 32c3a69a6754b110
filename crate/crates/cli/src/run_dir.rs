//! Per-run output directories named after a hash of the spec echo.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use nlrn_core::io::spec_echo;
use sha2::{Digest, Sha256};

pub struct RunDir {
    path: PathBuf,
}

impl RunDir {
    /// Create `<out>/<command>-<hash>` and write `run.txt` into it.
    pub fn create(out: &Path, command: &str, echo: &BTreeMap<String, String>) -> Result<Self> {
        let text = spec_echo(echo);
        let digest = Sha256::digest(text.as_bytes());
        let hash: String = digest[..8].iter().map(|b| format!("{b:02x}")).collect();
        let path = out.join(format!("{command}-{hash}"));
        fs::create_dir_all(&path).with_context(|| format!("creating {}", path.display()))?;
        let dir = RunDir { path };
        dir.write("run.txt", |w| Ok(w.write_all(text.as_bytes())?))?;
        Ok(dir)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn write(&self, name: &str, f: impl FnOnce(&mut BufWriter<File>) -> nlrn_core::Result<()>) -> Result<()> {
        let path = self.path.join(name);
        let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        let mut w = BufWriter::new(file);
        f(&mut w).with_context(|| format!("writing {}", path.display()))?;
        w.flush().with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }
}

/// Builder for the `key=value` spec echo.
#[derive(Default)]
pub struct Echo(BTreeMap<String, String>);

impl Echo {
    pub fn new(command: &str) -> Self {
        let mut e = Echo::default();
        e.0.insert("command".into(), command.into());
        e
    }

    pub fn set(mut self, key: &str, value: impl ToString) -> Self {
        self.0.insert(key.into(), value.to_string());
        self
    }

    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.0
    }
}
