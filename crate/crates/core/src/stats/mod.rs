//! Paired comparisons and agreement coefficients for rating sheets.
//!
//! All functions are pure; none keep state between calls.

mod alpha;
mod ttest;
mod wilcoxon;

use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;

use serde::{Deserialize, Serialize};

pub use alpha::{cronbach_alpha, ItemAxis};
pub use ttest::{paired_t_test, t_test_differences};
pub use wilcoxon::{
    exact_p, normal_approx, signed_ranks, wilcoxon_from_differences, wilcoxon_signed_rank,
    SignedRanks, EXACT_MAX_N,
};

#[derive(Debug, thiserror::Error)]
pub enum StatsError {
    #[error("no nonzero differences")]
    NoNonzeroDifferences,
    #[error("degenerate variance")]
    DegenerateVariance,
    #[error("need at least {need} observations, got {got}")]
    TooFewObservations { need: usize, got: usize },
    #[error("non-finite value in input")]
    NonFinite,
    #[error("rating matrix: {0}")]
    Shape(String),
    #[error("rating sheet: {0}")]
    Sheet(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ExactEnumeration,
    NormalApproximation,
    StudentT,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub method: Method,
    pub n_effective: usize,
    /// Standardized statistic, when the normal approximation ran.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub df: Option<f64>,
}

/// Raters × items grid with no missing cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingMatrix {
    pub raters: Vec<String>,
    pub items: Vec<String>,
    /// `scores[r][i]` is rater `r`'s score for item `i`.
    pub scores: Vec<Vec<f64>>,
}

impl RatingMatrix {
    pub fn new(
        raters: Vec<String>,
        items: Vec<String>,
        scores: Vec<Vec<f64>>,
    ) -> Result<RatingMatrix, StatsError> {
        if scores.len() != raters.len() {
            return Err(StatsError::Shape(format!(
                "{} raters but {} score rows",
                raters.len(),
                scores.len()
            )));
        }
        for (r, row) in raters.iter().zip(&scores) {
            if row.len() != items.len() {
                return Err(StatsError::Shape(format!(
                    "rater `{r}` has {} scores for {} items",
                    row.len(),
                    items.len()
                )));
            }
            if row.iter().any(|x| !x.is_finite()) {
                return Err(StatsError::NonFinite);
            }
        }
        Ok(RatingMatrix { raters, items, scores })
    }
}

/// One row of a rating-sheet CSV (`set_id,item,rater,score`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingRow {
    pub set_id: String,
    pub item: String,
    pub rater: String,
    pub score: Option<f64>,
}

/// A filled (or partly filled) rating sheet.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RatingSheet {
    pub rows: Vec<RatingRow>,
}

impl RatingSheet {
    pub fn from_csv(reader: impl Read) -> Result<RatingSheet, StatsError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let mut rows = Vec::new();
        for rec in rdr.deserialize::<RatingRow>() {
            rows.push(rec.map_err(|e| StatsError::Sheet(e.to_string()))?);
        }
        Ok(RatingSheet { rows })
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.rows {
            w.serialize(r).expect("rating row serializes");
        }
        String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8 csv")
    }

    pub fn item_names(&self) -> BTreeSet<&str> {
        self.rows.iter().map(|r| r.item.as_str()).collect()
    }

    fn filled(&self, item: &str) -> BTreeMap<(&str, &str), f64> {
        self.rows
            .iter()
            .filter(|r| r.item == item)
            .filter_map(|r| r.score.map(|s| ((r.rater.as_str(), r.set_id.as_str()), s)))
            .collect()
    }

    /// Raters × sets matrix of one item's scores. Every rater must have scored
    /// every set.
    pub fn matrix_for(&self, item: &str) -> Result<RatingMatrix, StatsError> {
        let cells = self.filled(item);
        let rows = self.rows.iter().filter(|r| r.item == item);
        let raters: BTreeSet<&str> = rows.clone().map(|r| r.rater.as_str()).collect();
        let sets: BTreeSet<&str> = rows.map(|r| r.set_id.as_str()).collect();
        if raters.is_empty() {
            return Err(StatsError::Sheet(format!("no rows for item `{item}`")));
        }
        let mut scores = Vec::with_capacity(raters.len());
        for r in &raters {
            let mut row = Vec::with_capacity(sets.len());
            for s in &sets {
                let v = cells.get(&(*r, *s)).ok_or_else(|| {
                    StatsError::Sheet(format!("missing score: item `{item}`, rater `{r}`, set `{s}`"))
                })?;
                row.push(*v);
            }
            scores.push(row);
        }
        RatingMatrix::new(
            raters.into_iter().map(String::from).collect(),
            sets.into_iter().map(String::from).collect(),
            scores,
        )
    }

    /// Scores of two items matched on (rater, set); cells missing on either
    /// side are skipped.
    pub fn paired(&self, item_a: &str, item_b: &str) -> Vec<(f64, f64)> {
        let a = self.filled(item_a);
        let b = self.filled(item_b);
        a.iter()
            .filter_map(|(k, va)| b.get(k).map(|vb| (*va, *vb)))
            .collect()
    }
}
