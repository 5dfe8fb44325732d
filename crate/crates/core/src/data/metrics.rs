use serde::{Deserialize, Serialize};

use super::{Role, SplitMask};
use crate::error::{Error, Result};
use crate::graph::ClassId;

/// Overall accuracy, average accuracy and Cohen's kappa over test pixels.
///
/// `confusion[t][p]` counts test pixels of true class `t` predicted as `p`.
/// Unlabelled predictions are wrong for every class; they are counted in
/// `unlabeled[t]` and contribute to no column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub oa: f64,
    pub aa: f64,
    /// NaN (serialized as null) when chance agreement is 1.
    pub kappa: f64,
    pub kappa_defined: bool,
    /// Recall per class; NaN for classes without test pixels.
    pub per_class: Vec<f64>,
    pub confusion: Vec<Vec<u64>>,
    pub unlabeled: Vec<u64>,
    pub n_test: u64,
}

impl MetricsReport {
    pub fn from_confusion(confusion: Vec<Vec<u64>>, unlabeled: Vec<u64>) -> Result<Self> {
        let c = confusion.len();
        if c == 0 || confusion.iter().any(|r| r.len() != c) || unlabeled.len() != c {
            return Err(Error::Config("confusion matrix must be square".into()));
        }
        let rows: Vec<u64> = (0..c)
            .map(|t| confusion[t].iter().sum::<u64>() + unlabeled[t])
            .collect();
        let cols: Vec<u64> = (0..c).map(|p| (0..c).map(|t| confusion[t][p]).sum()).collect();
        let n: u64 = rows.iter().sum();
        if n == 0 {
            return Err(Error::Empty("test set"));
        }
        let trace: u64 = (0..c).map(|i| confusion[i][i]).sum();
        let per_class: Vec<f64> = (0..c)
            .map(|t| {
                if rows[t] == 0 {
                    f64::NAN
                } else {
                    confusion[t][t] as f64 / rows[t] as f64
                }
            })
            .collect();
        let present: Vec<f64> = per_class.iter().copied().filter(|v| !v.is_nan()).collect();
        let aa = present.iter().sum::<f64>() / present.len() as f64;
        // kappa = (N * trace - sum(row * col)) / (N^2 - sum(row * col)),
        // evaluated in integers so the only rounding is the final division.
        let chance: u128 = (0..c).map(|i| rows[i] as u128 * cols[i] as u128).sum();
        let n2 = n as u128 * n as u128;
        let (kappa, kappa_defined) = if chance == n2 {
            (f64::NAN, false)
        } else {
            let num = n as i128 * trace as i128 - chance as i128;
            (num as f64 / (n2 - chance) as f64, true)
        };
        Ok(Self {
            oa: trace as f64 / n as f64,
            aa,
            kappa,
            kappa_defined,
            per_class,
            confusion,
            unlabeled,
            n_test: n,
        })
    }

    pub fn n_unlabeled(&self) -> u64 {
        self.unlabeled.iter().sum()
    }
}

/// Scores `pred` against ground truth `truth` (label 0 = none, class `c` is
/// label `c + 1`) on the test pixels of `mask`.
pub fn compute_metrics(
    pred: &[Option<ClassId>],
    truth: &[u16],
    mask: &SplitMask,
    classes: usize,
) -> Result<MetricsReport> {
    if pred.len() != truth.len() || truth.len() != mask.roles().len() {
        return Err(Error::Config("prediction, truth and split sizes differ".into()));
    }
    let mut confusion = vec![vec![0u64; classes]; classes];
    let mut unlabeled = vec![0u64; classes];
    for p in 0..truth.len() {
        if mask.role(p) != Role::Test {
            continue;
        }
        let t = truth[p] as usize - 1;
        match pred[p] {
            Some(c) if (c as usize) < classes => confusion[t][c as usize] += 1,
            Some(c) => {
                return Err(Error::Config(format!("predicted class {c} out of range")));
            }
            None => unlabeled[t] += 1,
        }
    }
    MetricsReport::from_confusion(confusion, unlabeled)
}
