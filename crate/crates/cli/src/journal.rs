//! Append-only record of finished sweep trials, one JSON object per line.
//!
//! Line 1 holds the sweep config the journal belongs to; every later line is one
//! `(label, N, width, seed) → success` cell. A final line without its newline is
//! the remnant of an interrupted write and is discarded on resume.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use nflab_core::scaling::{TrialKey, TrialStore};
use serde::{Deserialize, Serialize};

use crate::config::SweepConfig;
use crate::error::{CliError, Result};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    journal: u32,
    config: SweepConfig,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Entry {
    label: String,
    n: usize,
    width: usize,
    seed: u64,
    success: bool,
}

#[derive(Debug)]
pub struct Journal {
    path: PathBuf,
    file: Mutex<File>,
    cells: Mutex<HashMap<TrialKey, bool>>,
}

impl Journal {
    /// Replays an existing journal when `resume` is set, otherwise starts a fresh one.
    pub fn open(path: &Path, config: &SweepConfig, resume: bool) -> Result<Self> {
        let io = |e| CliError::io(path, e);
        let mut cells = HashMap::new();
        if resume && path.exists() {
            let text = std::fs::read(path).map_err(io)?;
            let complete = text.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
            let body = std::str::from_utf8(&text[..complete]).map_err(|e| CliError::Journal {
                path: path.to_path_buf(),
                line: 1 + text[..e.valid_up_to()].iter().filter(|&&b| b == b'\n').count(),
                message: "invalid UTF-8".to_string(),
            })?;
            let corrupt = |line: usize, message: String| CliError::Journal {
                path: path.to_path_buf(),
                line,
                message,
            };
            let mut lines = body.lines().enumerate();
            match lines.next() {
                Some((_, first)) => {
                    let header: Header = serde_json::from_str(first).map_err(|e| corrupt(1, e.to_string()))?;
                    if header.config != *config {
                        return Err(CliError::config(format!(
                            "{} was written for a different sweep config; rerun without --resume",
                            path.display()
                        )));
                    }
                }
                None => return Self::fresh(path, config),
            }
            for (i, line) in lines {
                let e: Entry = serde_json::from_str(line).map_err(|e| corrupt(i + 1, e.to_string()))?;
                let key = TrialKey {
                    label: e.label,
                    n: e.n,
                    width: e.width,
                    seed: e.seed,
                };
                cells.insert(key, e.success);
            }
            let file = OpenOptions::new().write(true).open(path).map_err(io)?;
            file.set_len(complete as u64).map_err(io)?;
            let file = OpenOptions::new().append(true).open(path).map_err(io)?;
            return Ok(Self {
                path: path.to_path_buf(),
                file: Mutex::new(file),
                cells: Mutex::new(cells),
            });
        }
        Self::fresh(path, config)
    }

    fn fresh(path: &Path, config: &SweepConfig) -> Result<Self> {
        let mut file = File::create(path).map_err(|e| CliError::io(path, e))?;
        let header = Header {
            journal: 1,
            config: config.clone(),
        };
        let mut line = serde_json::to_string(&header).expect("headers serialize");
        line.push('\n');
        file.write_all(line.as_bytes()).map_err(|e| CliError::io(path, e))?;
        Ok(Self {
            path: path.to_path_buf(),
            file: Mutex::new(file),
            cells: Mutex::new(HashMap::new()),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn len(&self) -> usize {
        self.cells.lock().expect("journal lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl TrialStore for Journal {
    fn get(&self, key: &TrialKey) -> Option<bool> {
        self.cells.lock().expect("journal lock").get(key).copied()
    }

    fn put(&self, key: &TrialKey, success: bool) -> nflab_core::Result<()> {
        let entry = Entry {
            label: key.label.clone(),
            n: key.n,
            width: key.width,
            seed: key.seed,
            success,
        };
        let mut line = serde_json::to_string(&entry).expect("entries serialize");
        line.push('\n');
        {
            let mut file = self.file.lock().expect("journal lock");
            file.write_all(line.as_bytes())?;
            file.flush()?;
        }
        self.cells.lock().expect("journal lock").insert(key.clone(), success);
        Ok(())
    }
}
