use std::path::Path;

use facetopo_core::ccpso2::GenerationRecord;
use facetopo_core::trainer::{Metrics, TreeScore};
use serde::{Deserialize, Serialize};

use super::fmt_f64;
use super::landmarks::csv_error;
use crate::{Error, Result};

/// `generation,best_fitness,evaluations`
pub fn write_history_csv(path: &Path, history: &[GenerationRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(["generation", "best_fitness", "evaluations"])
        .map_err(|e| csv_error(path, e))?;
    for r in history {
        w.write_record([r.generation.to_string(), fmt_f64(r.best_fitness), r.evaluations.to_string()])
            .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(Error::io(path))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub recognition_rate: f64,
    pub total: usize,
    pub per_class: Vec<ClassMetrics>,
    /// `confusion[truth][predicted]`
    pub confusion: Vec<Vec<usize>>,
}

impl From<&Metrics> for MetricsReport {
    fn from(m: &Metrics) -> Self {
        Self {
            recognition_rate: m.recognition_rate,
            total: m.total,
            per_class: (0..m.precision.len())
                .map(|k| ClassMetrics {
                    class: k,
                    precision: m.precision[k],
                    recall: m.recall[k],
                    f1: m.f1[k],
                })
                .collect(),
            confusion: m.confusion.clone(),
        }
    }
}

impl MetricsReport {
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("metrics serialize");
        text.push('\n');
        text
    }
}

/// Rows are true classes, columns predicted classes.
pub fn write_confusion_csv(path: &Path, confusion: &[Vec<usize>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    let k = confusion.len();
    let mut header = vec!["truth".to_string()];
    header.extend((0..k).map(|c| format!("pred_{c}")));
    w.write_record(&header).map_err(|e| csv_error(path, e))?;
    for (t, row) in confusion.iter().enumerate() {
        let mut rec = vec![t.to_string()];
        rec.extend(row.iter().map(|v| v.to_string()));
        w.write_record(&rec).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(Error::io(path))
}

/// `index,tree_hash,recognition_rate,final_loss`, hash as 16 hex digits.
pub fn write_baseline_csv(path: &Path, scores: &[TreeScore]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(["index", "tree_hash", "recognition_rate", "final_loss"])
        .map_err(|e| csv_error(path, e))?;
    for (i, s) in scores.iter().enumerate() {
        w.write_record([
            i.to_string(),
            format!("{:016x}", s.digest()),
            fmt_f64(s.metrics.recognition_rate),
            fmt_f64(s.final_loss),
        ])
        .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(Error::io(path))
}
