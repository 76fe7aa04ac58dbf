use std::fs::{self, File, OpenOptions};
use std::io::{ErrorKind, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{CliError, Result};

const LOCK_NAME: &str = ".nflab.lock";

/// An output directory owned by this process until dropped.
#[derive(Debug)]
pub struct OutDir {
    root: PathBuf,
    lock: PathBuf,
}

fn pid_alive(pid: u32) -> bool {
    let proc_root = Path::new("/proc");
    // Without procfs there is no way to tell, so the lock is respected.
    !proc_root.is_dir() || proc_root.join(pid.to_string()).exists()
}

impl OutDir {
    pub fn acquire(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        let lock = root.join(LOCK_NAME);
        for _ in 0..2 {
            match OpenOptions::new().write(true).create_new(true).open(&lock) {
                Ok(mut f) => {
                    writeln!(f, "{}", std::process::id()).map_err(|e| CliError::io(&lock, e))?;
                    return Ok(Self {
                        root: root.to_path_buf(),
                        lock,
                    });
                }
                Err(e) if e.kind() == ErrorKind::AlreadyExists => {
                    let holder = fs::read_to_string(&lock).unwrap_or_default();
                    match holder.trim().parse::<u32>() {
                        Ok(pid) if !pid_alive(pid) => {
                            fs::remove_file(&lock).map_err(|e| CliError::io(&lock, e))?;
                        }
                        _ => {
                            return Err(CliError::config(format!(
                                "{} is in use by another run (lock file {})",
                                root.display(),
                                lock.display()
                            )))
                        }
                    }
                }
                Err(e) => return Err(CliError::io(&lock, e)),
            }
        }
        Err(CliError::config(format!("could not lock {}", root.display())))
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write_bytes(&self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.path(name);
        fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(value).expect("reports serialize");
        text.push('\n');
        self.write_bytes(name, text.as_bytes())
    }

    pub fn write_csv(&self, name: &str, table: &Table) -> Result<PathBuf> {
        let path = self.path(name);
        let file = File::create(&path).map_err(|e| CliError::io(&path, e))?;
        table.write_to(file).map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }
}

impl Drop for OutDir {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.lock);
    }
}

/// Shortest round-trip decimal; exponent form only for very large or small magnitudes.
pub fn fmt_f64(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-5..1e16).contains(&a) || !v.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// A header plus string cells, written RFC-4180 style.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write_to(&self, out: impl Write) -> std::io::Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush()
    }
}

pub fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}
