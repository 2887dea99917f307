//! Statistics over a filled evaluation rating sheet.

use guohua_core::ideation::{GenerationMode, CRITERIA};
use guohua_core::stats::{cronbach_alpha, paired_t_test, wilcoxon_signed_rank, ItemAxis, RatingSheet, TestResult};
use serde::{Deserialize, Serialize};

/// Crafted versus baseline on one criterion, paired by (rater, set).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub criterion: String,
    pub pairs: usize,
    pub crafted_mean: Option<f64>,
    pub baseline_mean: Option<f64>,
    pub wilcoxon: Result<TestResult, String>,
    pub t_test: Result<TestResult, String>,
}

/// Inter-rater agreement for one `mode:criterion` item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agreement {
    pub item: String,
    pub alpha: Result<f64, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub comparisons: Vec<Comparison>,
    pub agreement: Vec<Agreement>,
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (n, s) = xs.fold((0usize, 0.0), |(n, s), x| (n + 1, s + x));
    (n > 0).then(|| s / n as f64)
}

/// Tests every criterion rated in both modes and computes α for every item
/// present in the sheet. Failures (too few pairs, missing cells) are kept
/// per entry instead of aborting the report.
pub fn evaluate(sheet: &RatingSheet) -> EvalReport {
    let crafted = GenerationMode::Crafted.as_str();
    let baseline = GenerationMode::Baseline.as_str();
    let comparisons = CRITERIA
        .iter()
        .filter(|(_, both)| *both)
        .map(|(c, _)| {
            let pairs = sheet.paired(&format!("{crafted}:{c}"), &format!("{baseline}:{c}"));
            Comparison {
                criterion: c.to_string(),
                pairs: pairs.len(),
                crafted_mean: mean(pairs.iter().map(|p| p.0)),
                baseline_mean: mean(pairs.iter().map(|p| p.1)),
                wilcoxon: wilcoxon_signed_rank(&pairs).map_err(|e| e.to_string()),
                t_test: paired_t_test(&pairs).map_err(|e| e.to_string()),
            }
        })
        .collect();
    let agreement = sheet
        .item_names()
        .into_iter()
        .map(|item| Agreement {
            item: item.to_string(),
            alpha: sheet
                .matrix_for(item)
                .and_then(|m| cronbach_alpha(&m, ItemAxis::Raters))
                .map_err(|e| e.to_string()),
        })
        .collect();
    EvalReport { comparisons, agreement }
}
