//! Append-only JSON-lines files.
//!
//! Every line is one record carrying `"v":1`. A line is only complete once its
//! newline is on disk, so a crash can at worst leave a partial final line; that
//! tail is skipped on replay and cut off before the next append.

use std::fs::{self, File, OpenOptions};
use std::io::{self, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub const RECORD_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}:{line}: {reason}", path.display())]
    Corrupt {
        path: PathBuf,
        line: usize,
        reason: String,
    },
}

impl StoreError {
    fn io(path: &Path, source: io::Error) -> Self {
        StoreError::Io {
            path: path.to_owned(),
            source,
        }
    }
}

#[derive(Serialize)]
struct LineOut<'a, T> {
    v: u32,
    #[serde(flatten)]
    record: &'a T,
}

#[derive(Deserialize)]
struct LineIn<T> {
    v: u32,
    #[serde(flatten)]
    record: T,
}

/// Reads every complete record of `path`. A missing file is an empty store.
pub fn replay<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, StoreError> {
    let text = match fs::read(path) {
        Ok(bytes) => bytes,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(StoreError::io(path, e)),
    };
    let complete = match text.iter().rposition(|&b| b == b'\n') {
        Some(i) => &text[..=i],
        None => &text[..0],
    };
    if complete.len() < text.len() {
        log::warn!(
            "{}: ignoring {} bytes of incomplete trailing record",
            path.display(),
            text.len() - complete.len()
        );
    }
    let mut records = Vec::new();
    for (i, line) in complete.split(|&b| b == b'\n').enumerate() {
        if line.iter().all(u8::is_ascii_whitespace) {
            continue;
        }
        let corrupt = |reason: String| StoreError::Corrupt {
            path: path.to_owned(),
            line: i + 1,
            reason,
        };
        let parsed: LineIn<T> = serde_json::from_slice(line).map_err(|e| corrupt(e.to_string()))?;
        if parsed.v != RECORD_VERSION {
            return Err(corrupt(format!("unsupported record version {}", parsed.v)));
        }
        records.push(parsed.record);
    }
    Ok(records)
}

/// Writer half of a store file.
#[derive(Debug)]
pub struct JsonlLog {
    path: PathBuf,
    file: File,
}

impl JsonlLog {
    /// Opens `path` for appending, creating it if needed and dropping any
    /// incomplete trailing record.
    pub fn open(path: &Path) -> Result<Self, StoreError> {
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| StoreError::io(path, e))?;
        }
        let mut file = OpenOptions::new()
            .read(true)
            .write(true)
            .create(true)
            .truncate(false)
            .open(path)
            .map_err(|e| StoreError::io(path, e))?;
        let mut text = Vec::new();
        file.read_to_end(&mut text)
            .map_err(|e| StoreError::io(path, e))?;
        let keep = text.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
        if keep < text.len() {
            file.set_len(keep as u64)
                .map_err(|e| StoreError::io(path, e))?;
            file.sync_all().map_err(|e| StoreError::io(path, e))?;
        }
        file.seek(SeekFrom::End(0))
            .map_err(|e| StoreError::io(path, e))?;
        Ok(Self {
            path: path.to_owned(),
            file,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Appends one record and waits for it to reach the disk.
    pub fn append<T: Serialize>(&mut self, record: &T) -> Result<(), StoreError> {
        let mut line = serde_json::to_vec(&LineOut {
            v: RECORD_VERSION,
            record,
        })
        .map_err(|e| StoreError::io(&self.path, io::Error::new(io::ErrorKind::InvalidInput, e)))?;
        line.push(b'\n');
        self.file
            .write_all(&line)
            .and_then(|_| self.file.sync_data())
            .map_err(|e| StoreError::io(&self.path, e))
    }
}
