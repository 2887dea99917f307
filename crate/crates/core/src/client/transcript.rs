use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CallKind {
    Text,
    Embed,
    Image,
    Online,
}

impl CallKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CallKind::Text => "text",
            CallKind::Embed => "embed",
            CallKind::Image => "image",
            CallKind::Online => "online",
        }
    }
}

/// One attempt against an external endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelTranscript {
    pub kind: CallKind,
    pub endpoint_id: String,
    pub request_key: String,
    pub request: Value,
    /// Response body as text; JSON-encoded for non-text endpoints.
    #[serde(default)]
    pub raw_response: Option<String>,
    #[serde(default)]
    pub error: Option<String>,
    #[serde(default)]
    pub attempt: u32,
    pub timestamp: DateTime<Utc>,
}

/// Append-only transcript log. Writes are serialized through one lock; when
/// backed by a file each entry is flushed as a JSON line before `append`
/// returns.
#[derive(Debug)]
pub struct TranscriptLog {
    inner: Mutex<Inner>,
}

#[derive(Debug)]
struct Inner {
    entries: Vec<ModelTranscript>,
    file: Option<(PathBuf, File)>,
}

impl TranscriptLog {
    pub fn in_memory() -> TranscriptLog {
        TranscriptLog { inner: Mutex::new(Inner { entries: Vec::new(), file: None }) }
    }

    /// Opens `path` for appending. Existing entries are not loaded.
    pub fn append_to(path: &Path) -> std::io::Result<TranscriptLog> {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let f = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(TranscriptLog {
            inner: Mutex::new(Inner { entries: Vec::new(), file: Some((path.to_path_buf(), f)) }),
        })
    }

    pub fn append(&self, t: ModelTranscript) {
        let mut inner = self.inner.lock().expect("transcript lock poisoned");
        if let Some((path, f)) = inner.file.as_mut() {
            let line = serde_json::to_string(&t).expect("transcript serializes");
            if let Err(e) = writeln!(f, "{line}").and_then(|_| f.flush()) {
                tracing::error!(path = %path.display(), error = %e, "failed to persist transcript");
            }
        }
        inner.entries.push(t);
    }

    /// Entries appended through this handle.
    pub fn entries(&self) -> Vec<ModelTranscript> {
        self.inner.lock().expect("transcript lock poisoned").entries.clone()
    }

    pub fn len(&self) -> usize {
        self.inner.lock().expect("transcript lock poisoned").entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn read_file(path: &Path) -> std::io::Result<Vec<ModelTranscript>> {
        let f = File::open(path)?;
        let mut out = Vec::new();
        for line in BufReader::new(f).lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            out.push(
                serde_json::from_str(&line)
                    .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?,
            );
        }
        Ok(out)
    }

    pub fn write_file(path: &Path, entries: &[ModelTranscript]) -> std::io::Result<()> {
        let mut buf = Vec::new();
        for t in entries {
            writeln!(buf, "{}", serde_json::to_string(t).expect("transcript serializes"))?;
        }
        crate::fsutil::write_atomic(path, &buf)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_log_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.jsonl");
        let log = TranscriptLog::append_to(&path).unwrap();
        for i in 0..3 {
            log.append(ModelTranscript {
                kind: CallKind::Text,
                endpoint_id: "m".into(),
                request_key: format!("k{i}"),
                request: serde_json::json!({"prompt": i}),
                raw_response: Some("ok".into()),
                error: None,
                attempt: 0,
                timestamp: Utc::now(),
            });
        }
        let back = TranscriptLog::read_file(&path).unwrap();
        assert_eq!(back, log.entries());
    }
}
