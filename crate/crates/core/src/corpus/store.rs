use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::annotation::{annotation_to_value, validate_annotation};
use super::model::{AnnotationSet, PaintingRecord, PaintingType, TagDimension};
use super::CorpusError;
use crate::fsutil::write_atomic;

/// Counts over a set of records.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub total: usize,
    pub per_type: BTreeMap<PaintingType, usize>,
    pub per_dimension_tagged: BTreeMap<TagDimension, usize>,
}

impl CorpusStats {
    pub fn from_records<'a>(records: impl IntoIterator<Item = &'a PaintingRecord>) -> CorpusStats {
        let mut stats = CorpusStats::default();
        for r in records {
            stats.total += 1;
            *stats.per_type.entry(r.painting_type).or_default() += 1;
            for dim in TagDimension::ALL {
                if !r.annotations.get(dim).is_empty() {
                    *stats.per_dimension_tagged.entry(dim).or_default() += 1;
                }
            }
        }
        stats
    }
}

/// A rejected corpus line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineError {
    /// 1-based line number in the source file.
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct IngestReport {
    pub stats: CorpusStats,
    pub errors: Vec<LineError>,
    pub warnings: Vec<LineError>,
}

/// Corpus-file line shape.
#[derive(Debug, Serialize, Deserialize)]
struct WireRecord {
    id: String,
    image: String,
    #[serde(rename = "type", default)]
    kind: Option<String>,
    #[serde(default)]
    tags: Option<Value>,
    #[serde(default)]
    source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    description: Option<String>,
}

impl WireRecord {
    fn from_record(r: &PaintingRecord) -> WireRecord {
        WireRecord {
            id: r.id.clone(),
            image: r.image_ref.clone(),
            kind: r.painting_type.to_wire().map(str::to_string),
            tags: Some(annotation_to_value(&r.annotations)),
            source: r.source.clone(),
            description: r.description.clone(),
        }
    }

    fn into_record(self) -> Result<(PaintingRecord, Vec<String>), String> {
        if self.id.trim().is_empty() {
            return Err("empty id".into());
        }
        if self.image.trim().is_empty() {
            return Err("empty image reference".into());
        }
        let painting_type = match self.kind.as_deref() {
            None => PaintingType::Unknown,
            Some(k) => match k.parse::<PaintingType>().map_err(|e| e.to_string())? {
                PaintingType::Unknown => return Err("type must be gongbi, xieyi or null".into()),
                t => t,
            },
        };
        let (annotations, warnings) = match self.tags {
            None | Some(Value::Null) => (AnnotationSet::new(), Vec::new()),
            Some(v) => validate_annotation(&v).map_err(|e| e.to_string())?,
        };
        Ok((
            PaintingRecord {
                id: self.id,
                image_ref: self.image,
                painting_type,
                annotations,
                source: self.source,
                description: self.description.filter(|d| !d.trim().is_empty()),
            },
            warnings,
        ))
    }
}

/// Parses one corpus-file line.
pub fn parse_record_line(line: &str) -> Result<PaintingRecord, String> {
    let wire: WireRecord = serde_json::from_str(line).map_err(|e| e.to_string())?;
    wire.into_record().map(|(r, _)| r)
}

/// Serializes one record as a corpus-file line (no trailing newline).
pub fn record_to_line(record: &PaintingRecord) -> String {
    serde_json::to_string(&WireRecord::from_record(record)).expect("record serializes")
}

/// An immutable view of the records at one point in time.
#[derive(Debug, Clone, Default)]
pub struct CorpusSnapshot {
    records: Vec<PaintingRecord>,
    by_id: HashMap<String, usize>,
}

impl CorpusSnapshot {
    pub fn from_records(records: Vec<PaintingRecord>) -> Result<CorpusSnapshot, CorpusError> {
        let mut by_id = HashMap::with_capacity(records.len());
        for (i, r) in records.iter().enumerate() {
            if by_id.insert(r.id.clone(), i).is_some() {
                return Err(CorpusError::DuplicateId(r.id.clone()));
            }
        }
        Ok(CorpusSnapshot { records, by_id })
    }

    pub fn get(&self, id: &str) -> Option<&PaintingRecord> {
        self.by_id.get(id).map(|&i| &self.records[i])
    }

    pub fn records(&self) -> &[PaintingRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn stats(&self) -> CorpusStats {
        CorpusStats::from_records(&self.records)
    }
}

/// Single-file record store with one writer and many snapshot readers.
///
/// Readers call [`CorpusStore::snapshot`] and keep the returned `Arc` for as
/// long as they need a consistent view; writers build a new snapshot and swap
/// it in after the backing file has been rewritten.
#[derive(Debug)]
pub struct CorpusStore {
    path: Option<PathBuf>,
    current: RwLock<Arc<CorpusSnapshot>>,
    writer: Mutex<()>,
}

impl CorpusStore {
    pub fn in_memory() -> CorpusStore {
        CorpusStore {
            path: None,
            current: RwLock::new(Arc::new(CorpusSnapshot::default())),
            writer: Mutex::new(()),
        }
    }

    /// Opens (or prepares) a store backed by `path`. A missing file is an empty store.
    pub fn open(path: impl Into<PathBuf>) -> Result<CorpusStore, CorpusError> {
        let path = path.into();
        let mut records = Vec::new();
        if path.exists() {
            let f = File::open(&path).map_err(|e| CorpusError::io(&path, e))?;
            for (i, line) in BufReader::new(f).lines().enumerate() {
                let line = line.map_err(|e| CorpusError::io(&path, e))?;
                if line.trim().is_empty() {
                    continue;
                }
                let rec = parse_record_line(&line).map_err(|reason| {
                    CorpusError::Schema(format!("{}:{}: {reason}", path.display(), i + 1))
                })?;
                records.push(rec);
            }
        }
        Ok(CorpusStore {
            path: Some(path),
            current: RwLock::new(Arc::new(CorpusSnapshot::from_records(records)?)),
            writer: Mutex::new(()),
        })
    }

    pub fn snapshot(&self) -> Arc<CorpusSnapshot> {
        self.current.read().expect("corpus lock poisoned").clone()
    }

    /// Loads every valid line of a corpus file. Malformed lines and duplicate
    /// ids are skipped and reported; a file with no valid record is an error.
    pub fn ingest_file(&self, path: &Path) -> Result<IngestReport, CorpusError> {
        let f = File::open(path).map_err(|e| CorpusError::io(path, e))?;
        self.ingest_reader(BufReader::new(f))
    }

    pub fn ingest_reader(&self, reader: impl BufRead) -> Result<IngestReport, CorpusError> {
        let _guard = self.writer.lock().expect("corpus writer poisoned");
        let base = self.snapshot();
        let mut seen: HashSet<String> = base.records.iter().map(|r| r.id.clone()).collect();
        let mut added = Vec::new();
        let mut errors = Vec::new();
        let mut warnings = Vec::new();

        for (i, line) in reader.lines().enumerate() {
            let lineno = i + 1;
            let line = match line {
                Ok(l) => l,
                Err(e) => {
                    errors.push(LineError { line: lineno, reason: e.to_string() });
                    continue;
                }
            };
            if line.trim().is_empty() {
                continue;
            }
            let parsed = serde_json::from_str::<WireRecord>(&line)
                .map_err(|e| e.to_string())
                .and_then(WireRecord::into_record);
            match parsed {
                Ok((rec, warns)) => {
                    if !seen.insert(rec.id.clone()) {
                        errors.push(LineError {
                            line: lineno,
                            reason: format!("duplicate id `{}`", rec.id),
                        });
                        continue;
                    }
                    warnings.extend(warns.into_iter().map(|w| LineError { line: lineno, reason: w }));
                    added.push(rec);
                }
                Err(reason) => errors.push(LineError { line: lineno, reason }),
            }
        }

        if added.is_empty() {
            return Err(CorpusError::NoValidRecords { errors: errors.len() });
        }
        if !errors.is_empty() {
            tracing::warn!(rejected = errors.len(), "corpus lines skipped");
        }

        let stats = CorpusStats::from_records(&added);
        let mut records = base.records.clone();
        records.extend(added);
        self.commit(records)?;
        Ok(IngestReport { stats, errors, warnings })
    }

    /// Applies `f` to a copy of the records and commits the result atomically.
    /// Nothing is written if `f` fails.
    pub fn update<T>(
        &self,
        f: impl FnOnce(&mut Vec<PaintingRecord>) -> Result<T, CorpusError>,
    ) -> Result<T, CorpusError> {
        let _guard = self.writer.lock().expect("corpus writer poisoned");
        let mut records = self.snapshot().records.clone();
        let out = f(&mut records)?;
        self.commit(records)?;
        Ok(out)
    }

    /// Replaces the record with the same id.
    pub fn put(&self, record: PaintingRecord) -> Result<(), CorpusError> {
        self.update(|records| {
            match records.iter_mut().find(|r| r.id == record.id) {
                Some(slot) => *slot = record,
                None => records.push(record),
            }
            Ok(())
        })
    }

    fn commit(&self, records: Vec<PaintingRecord>) -> Result<(), CorpusError> {
        let snap = CorpusSnapshot::from_records(records)?;
        if let Some(path) = &self.path {
            let mut buf = Vec::new();
            write_records(&mut buf, snap.records()).map_err(|e| CorpusError::io(path, e))?;
            write_atomic(path, &buf).map_err(|e| CorpusError::io(path, e))?;
        }
        *self.current.write().expect("corpus lock poisoned") = Arc::new(snap);
        Ok(())
    }

    pub fn export(&self, out: &mut impl Write) -> std::io::Result<()> {
        write_records(out, self.snapshot().records())
    }
}

fn write_records(out: &mut impl Write, records: &[PaintingRecord]) -> std::io::Result<()> {
    for r in records {
        writeln!(out, "{}", record_to_line(r))?;
    }
    Ok(())
}
