use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{MapReport, MetricsReport, SplitMask};
use crate::error::{Error, Result};

pub const REPORT_VERSION: u32 = 1;

/// One row of the per-class table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassRow {
    /// Ground-truth label value (1-based).
    pub class: u16,
    pub train_n: usize,
    pub test_n: u64,
    pub accuracy: f64,
}

/// Contents of `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub format_version: u32,
    pub metrics: MetricsReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub map: Option<MapReport>,
    pub classes: Vec<ClassRow>,
    pub config: serde_json::Value,
}

impl EvalReport {
    pub fn new(
        metrics: MetricsReport,
        split: &SplitMask,
        map: Option<MapReport>,
        config: serde_json::Value,
    ) -> Self {
        let classes = metrics
            .per_class
            .iter()
            .enumerate()
            .map(|(c, &accuracy)| ClassRow {
                class: c as u16 + 1,
                train_n: split.train_counts().get(c).copied().unwrap_or(0),
                test_n: metrics.confusion[c].iter().sum::<u64>() + metrics.unlabeled[c],
                accuracy,
            })
            .collect();
        Self {
            format_version: REPORT_VERSION,
            metrics,
            map,
            classes,
            config,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("class,train_n,test_n,accuracy\n");
        for r in &self.classes {
            let _ = writeln!(s, "{},{},{},{}", r.class, r.train_n, r.test_n, r.accuracy);
        }
        s
    }

    /// Writes `report.json` and `report.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let json = dir.join("report.json");
        std::fs::write(&json, serde_json::to_vec_pretty(self)?).map_err(|e| Error::io(&json, e))?;
        let csv = dir.join("report.csv");
        std::fs::write(&csv, self.to_csv()).map_err(|e| Error::io(&csv, e))
    }
}

/// Mean and sample standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub stdev: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let stdev = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Self { mean, stdev }
    }
}

/// OA / AA / kappa over repeated seeded runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatSummary {
    pub runs: usize,
    pub oa: Stat,
    pub aa: Stat,
    pub kappa: Stat,
}

impl RepeatSummary {
    pub fn from_reports(reports: &[MetricsReport]) -> Self {
        let pick = |f: fn(&MetricsReport) -> f64| Stat::of(&reports.iter().map(f).collect::<Vec<_>>());
        Self {
            runs: reports.len(),
            oa: pick(|r| r.oa),
            aa: pick(|r| r.aa),
            kappa: pick(|r| r.kappa),
        }
    }
}
