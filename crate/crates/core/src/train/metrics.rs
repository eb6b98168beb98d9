use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum F1Average {
    /// F1 of the at-risk class.
    #[default]
    Binary,
    /// Unweighted mean of the per-class F1 scores.
    Macro,
}

impl std::str::FromStr for F1Average {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "binary" => Ok(F1Average::Binary),
            "macro" => Ok(F1Average::Macro),
            other => Err(Error::Config(format!("unknown F1 average '{other}' (binary|macro)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub split: String,
    pub accuracy: f64,
    pub f1: f64,
    /// `None` when only one class is present.
    pub auroc: Option<f64>,
    /// `[[TN, FP], [FN, TP]]`
    pub confusion: [[usize; 2]; 2],
    pub n: usize,
    pub config_hash: Option<String>,
}

impl Metrics {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self)
            .map(|s| s + "\n")
            .map_err(|e| Error::Format(e.to_string()))
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }
}

fn check(scores: &[f64], labels: &[u8]) -> Result<()> {
    if scores.len() != labels.len() || scores.is_empty() {
        return Err(Error::Shape(format!("{} scores vs {} labels", scores.len(), labels.len())));
    }
    if let Some(l) = labels.iter().find(|l| **l > 1) {
        return Err(Error::Value(format!("label {l} is not 0 or 1")));
    }
    if let Some(s) = scores.iter().find(|s| !s.is_finite()) {
        return Err(Error::Value(format!("non-finite score {s}")));
    }
    Ok(())
}

/// `[[TN, FP], [FN, TP]]` at threshold 0.5; a score of exactly 0.5 predicts 0.
pub fn confusion(scores: &[f64], labels: &[u8]) -> Result<[[usize; 2]; 2]> {
    check(scores, labels)?;
    let mut c = [[0usize; 2]; 2];
    for (s, l) in scores.iter().zip(labels) {
        c[*l as usize][usize::from(*s > 0.5)] += 1;
    }
    Ok(c)
}

fn f1_score(tp: usize, fp: usize, fn_: usize) -> f64 {
    let denom = 2 * tp + fp + fn_;
    if denom == 0 {
        0.0
    } else {
        2.0 * tp as f64 / denom as f64
    }
}

/// Area under the ROC curve as the Mann–Whitney statistic with tied scores
/// counted half, via mid-ranks.
pub fn roc_auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    check(scores, labels)?;
    let n_pos = labels.iter().filter(|l| **l == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::Undefined("AUROC needs both classes among the labels".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // Twice the rank sum of positives keeps mid-ranks integral.
    let mut twice_rank_sum: u64 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // ranks i+1..=j+1 share the mid-rank (i+j+2)/2
        let twice_mid = (i + j + 2) as u64;
        let pos = order[i..=j].iter().filter(|&&k| labels[k] == 1).count() as u64;
        twice_rank_sum += pos * twice_mid;
        i = j + 1;
    }
    let twice_u = twice_rank_sum - (n_pos as u64) * (n_pos as u64 + 1);
    Ok(twice_u as f64 / (2.0 * n_pos as f64 * n_neg as f64))
}

/// Accuracy, F1 and confusion at threshold 0.5, plus AUROC when defined.
pub fn evaluate(split: &str, scores: &[f64], labels: &[u8], average: F1Average) -> Result<Metrics> {
    let c = confusion(scores, labels)?;
    let [[tn, fp], [fn_, tp]] = c;
    let n = scores.len();
    let f1 = match average {
        F1Average::Binary => f1_score(tp, fp, fn_),
        F1Average::Macro => 0.5 * (f1_score(tp, fp, fn_) + f1_score(tn, fn_, fp)),
    };
    let auroc = match roc_auc(scores, labels) {
        Ok(a) => Some(a),
        Err(Error::Undefined(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(Metrics {
        split: split.to_string(),
        accuracy: (tp + tn) as f64 / n as f64,
        f1,
        auroc,
        confusion: c,
        n,
        config_hash: None,
    })
}
