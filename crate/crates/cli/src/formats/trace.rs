//! Traces: `<stem>.ndjson` holds one retained draw per line and
//! `<stem>.meta.json` the run metadata.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use tensor_art::gibbs::{Draw, Trace, TraceMeta};

use crate::atomic::{write_json, AtomicFile};
use crate::error::{CliError, Result};

pub fn trace_path(dir: &Path, chain: u64) -> PathBuf {
    dir.join(format!("trace-{chain}.ndjson"))
}

pub fn meta_path(trace: &Path) -> PathBuf {
    let name = trace.file_name().and_then(|n| n.to_str()).unwrap_or("trace.ndjson");
    let stem = name.strip_suffix(".ndjson").unwrap_or(name);
    trace.with_file_name(format!("{stem}.meta.json"))
}

/// Streams draws into a trace file that appears only on [`TraceWriter::finish`].
pub struct TraceWriter {
    path: PathBuf,
    file: AtomicFile,
    count: usize,
}

impl TraceWriter {
    pub fn create(path: &Path) -> Result<Self> {
        Ok(TraceWriter { path: path.to_path_buf(), file: AtomicFile::create(path)?, count: 0 })
    }

    pub fn write(&mut self, draw: &Draw) -> Result<()> {
        let w = self.file.writer();
        serde_json::to_writer(&mut *w, draw)
            .map_err(std::io::Error::from)
            .and_then(|_| w.write_all(b"\n"))
            .map_err(|e| CliError::at_path(&self.path, e))?;
        self.count += 1;
        Ok(())
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn finish(self, meta: &TraceMeta) -> Result<()> {
        write_json(&meta_path(&self.path), meta)?;
        self.file.commit()
    }
}

pub fn load_trace(path: &Path) -> Result<Trace> {
    let mpath = meta_path(path);
    let text = fs::read_to_string(&mpath).map_err(|e| CliError::at_path(&mpath, e))?;
    let meta: TraceMeta =
        serde_json::from_str(&text).map_err(|e| CliError::validation(format!("{}: {e}", mpath.display())))?;
    let file = File::open(path).map_err(|e| CliError::at_path(path, e))?;
    let total: usize = meta.dims.iter().product();
    let mut draws = Vec::with_capacity(meta.retained);
    for (k, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| CliError::at_path(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let draw: Draw = serde_json::from_str(&line)
            .map_err(|e| CliError::validation(format!("{}:{}: {e}", path.display(), k + 1)))?;
        if draw.coefficient.len() != total * total || draw.sigma.len() != meta.dims.len() {
            return Err(CliError::validation(format!(
                "{}:{}: draw shape does not match dims {:?}",
                path.display(),
                k + 1,
                meta.dims
            )));
        }
        draws.push(draw);
    }
    if draws.len() != meta.retained {
        return Err(CliError::validation(format!(
            "{}: {} draws, metadata says {}",
            path.display(),
            draws.len(),
            meta.retained
        )));
    }
    Ok(Trace { meta, draws })
}

/// `trace-*.ndjson` files in `dir`, ordered by chain index.
pub fn find_traces(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|e| CliError::at_path(dir, e))?;
    let mut found: Vec<(u64, PathBuf)> = entries
        .filter_map(|e| e.ok())
        .filter_map(|e| {
            let name = e.file_name().to_str()?.to_string();
            let chain = name.strip_prefix("trace-")?.strip_suffix(".ndjson")?.parse().ok()?;
            Some((chain, e.path()))
        })
        .collect();
    found.sort();
    if found.is_empty() {
        return Err(CliError::validation(format!("no trace-*.ndjson files in {}", dir.display())));
    }
    Ok(found.into_iter().map(|(_, p)| p).collect())
}
