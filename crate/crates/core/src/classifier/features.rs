use std::collections::HashMap;
use std::io::BufRead;

use crate::corpus::PaintingType;

use super::ClassifierError;

/// Image features for one record, as produced by an external vision backbone.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub record_id: String,
    pub values: Vec<f64>,
}

/// A feature file: every row has the same dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    pub dim: usize,
    pub rows: Vec<FeatureVector>,
}

impl FeatureSet {
    pub fn new(dim: usize, rows: Vec<FeatureVector>) -> Result<FeatureSet, ClassifierError> {
        for r in &rows {
            check_vector(dim, r)?;
        }
        Ok(FeatureSet { dim, rows })
    }

    /// Parses `D=<int>` followed by `record_id,<float>,...` lines.
    pub fn parse(reader: impl BufRead) -> Result<FeatureSet, ClassifierError> {
        let mut lines = reader.lines().enumerate();
        let dim = loop {
            let Some((i, line)) = lines.next() else {
                return Err(ClassifierError::Format("empty feature file".into()));
            };
            let line = line.map_err(|e| ClassifierError::Format(e.to_string()))?;
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            let d = t
                .strip_prefix("D=")
                .and_then(|d| d.trim().parse::<usize>().ok())
                .filter(|&d| d > 0)
                .ok_or_else(|| {
                    ClassifierError::Format(format!("line {}: expected `D=<positive int>`", i + 1))
                })?;
            break d;
        };

        let mut rows = Vec::new();
        for (i, line) in lines {
            let line = line.map_err(|e| ClassifierError::Format(e.to_string()))?;
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            let mut parts = t.split(',');
            let id = parts.next().unwrap_or_default().trim().to_string();
            if id.is_empty() {
                return Err(ClassifierError::Format(format!("line {}: empty record id", i + 1)));
            }
            let values = parts
                .map(|p| p.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| ClassifierError::Format(format!("line {}: {e}", i + 1)))?;
            let fv = FeatureVector { record_id: id, values };
            check_vector(dim, &fv)?;
            rows.push(fv);
        }
        Ok(FeatureSet { dim, rows })
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("D={}\n", self.dim);
        for r in &self.rows {
            s.push_str(&r.record_id);
            for v in &r.values {
                s.push(',');
                s.push_str(&v.to_string());
            }
            s.push('\n');
        }
        s
    }
}

pub(crate) fn check_vector(dim: usize, fv: &FeatureVector) -> Result<(), ClassifierError> {
    if fv.values.len() != dim {
        return Err(ClassifierError::DimensionMismatch {
            expected: dim,
            got: fv.values.len(),
            record: fv.record_id.clone(),
        });
    }
    if fv.values.iter().any(|v| !v.is_finite()) {
        return Err(ClassifierError::NonFinite(fv.record_id.clone()));
    }
    Ok(())
}

/// Parses `record_id,gongbi|xieyi` lines.
pub fn parse_labels(reader: impl BufRead) -> Result<HashMap<String, PaintingType>, ClassifierError> {
    let mut out = HashMap::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| ClassifierError::Format(e.to_string()))?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let (id, label) = t
            .split_once(',')
            .ok_or_else(|| ClassifierError::Format(format!("line {}: expected `id,label`", i + 1)))?;
        let label = match label.trim().to_ascii_lowercase().as_str() {
            "gongbi" => PaintingType::Gongbi,
            "xieyi" => PaintingType::Xieyi,
            other => {
                return Err(ClassifierError::Format(format!("line {}: unknown label `{other}`", i + 1)))
            }
        };
        out.insert(id.trim().to_string(), label);
    }
    Ok(out)
}
