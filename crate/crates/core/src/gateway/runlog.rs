use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::error::{Error, IoContext, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunLogEntry {
    pub key: String,
    pub prompt: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instruction: Option<String>,
    pub output: String,
    pub attempts: u32,
}

/// Append-only JSON-lines record of completed requests. Opening an existing
/// log makes its outputs available for reuse.
pub struct RunLog {
    path: Option<PathBuf>,
    done: Mutex<HashMap<String, String>>,
    writer: Mutex<Option<File>>,
}

impl RunLog {
    /// A log that keeps entries in memory only.
    pub fn in_memory() -> Self {
        Self {
            path: None,
            done: Mutex::new(HashMap::new()),
            writer: Mutex::new(None),
        }
    }

    pub fn open(path: &Path) -> Result<Self> {
        let mut done = HashMap::new();
        if path.exists() {
            let text = fs::read_to_string(path).io_context(|| format!("reading {}", path.display()))?;
            for (i, line) in text.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                // a torn final line from an interrupted run is dropped
                match serde_json::from_str::<RunLogEntry>(line) {
                    Ok(e) => {
                        done.insert(e.key, e.output);
                    }
                    Err(_) if i + 1 == text.lines().count() => {}
                    Err(e) => {
                        return Err(Error::Format {
                            path: path.to_path_buf(),
                            line: i + 1,
                            reason: e.to_string(),
                        })
                    }
                }
            }
        } else if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent).io_context(|| format!("creating {}", parent.display()))?;
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .io_context(|| format!("opening {}", path.display()))?;
        Ok(Self {
            path: Some(path.to_path_buf()),
            done: Mutex::new(done),
            writer: Mutex::new(Some(file)),
        })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn get(&self, key: &str) -> Option<String> {
        self.done.lock().unwrap_or_else(|e| e.into_inner()).get(key).cloned()
    }

    pub fn len(&self) -> usize {
        self.done.lock().unwrap_or_else(|e| e.into_inner()).len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn append(&self, entry: &RunLogEntry) -> Result<()> {
        let line = serde_json::to_string(entry)?;
        let mut writer = self.writer.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(f) = writer.as_mut() {
            writeln!(f, "{line}").io_context(|| "appending to run log".to_string())?;
            f.flush().io_context(|| "flushing run log".to_string())?;
        }
        self.done
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .insert(entry.key.clone(), entry.output.clone());
        Ok(())
    }
}
