//! Writes that become visible only once complete: a temp file in the target
//! directory is renamed over the destination.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use tempfile::NamedTempFile;

use crate::error::{CliError, Result};

/// A file being written; dropped without [`AtomicFile::commit`] it leaves no trace.
pub struct AtomicFile {
    dest: PathBuf,
    writer: BufWriter<NamedTempFile>,
}

impl AtomicFile {
    pub fn create(dest: &Path) -> Result<Self> {
        let dir = match dest.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        fs::create_dir_all(&dir).map_err(|e| CliError::at_path(&dir, e))?;
        let tmp = NamedTempFile::new_in(&dir).map_err(|e| CliError::at_path(&dir, e))?;
        Ok(AtomicFile { dest: dest.to_path_buf(), writer: BufWriter::new(tmp) })
    }

    pub fn writer(&mut self) -> &mut BufWriter<NamedTempFile> {
        &mut self.writer
    }

    pub fn commit(self) -> Result<()> {
        let dest = self.dest;
        let tmp = self.writer.into_inner().map_err(|e| CliError::at_path(&dest, e.into_error()))?;
        tmp.as_file().sync_all().map_err(|e| CliError::at_path(&dest, e))?;
        tmp.persist(&dest).map_err(|e| CliError::at_path(&dest, e.error))?;
        Ok(())
    }
}

pub fn write_atomic(dest: &Path, f: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<()> {
    let mut file = AtomicFile::create(dest)?;
    f(file.writer()).map_err(|e| CliError::at_path(dest, e))?;
    file.commit()
}

pub fn write_json<T: serde::Serialize>(dest: &Path, value: &T) -> Result<()> {
    write_atomic(dest, |w| {
        serde_json::to_writer_pretty(&mut *w, value).map_err(std::io::Error::from)?;
        w.write_all(b"\n")
    })
}
