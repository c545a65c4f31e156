//! Versioned, line-oriented evaluation reports.
//!
//! The text is valid TOML with one scalar or row per line, so two reports
//! diff cleanly. `created_unix` is the only field that changes between
//! identical runs.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use csisense_core::learn::EvalReport;
use serde::{Deserialize, Serialize};

pub const FORMAT: &str = "csisense-report/1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportDoc {
    pub format: String,
    pub created_unix: u64,
    pub config_sha256: String,
    pub pipeline: String,
    pub protocol: String,
    pub target: String,
    pub seed: u64,
    pub samples: u64,
    pub accuracy: f64,
    pub classes: Vec<String>,
    pub per_fold: Vec<f64>,
    pub confusion: Vec<Vec<u64>>,
    #[serde(default)]
    pub extras: BTreeMap<String, f64>,
}

impl ReportDoc {
    pub fn new(r: &EvalReport, pipeline: &str, config_sha256: &str, created_unix: u64) -> Self {
        ReportDoc {
            format: FORMAT.into(),
            created_unix,
            config_sha256: config_sha256.into(),
            pipeline: pipeline.into(),
            protocol: r.protocol.clone(),
            target: r.target.to_string(),
            seed: r.seed,
            samples: r.total(),
            accuracy: r.accuracy,
            classes: r.class_names.clone(),
            per_fold: r.per_fold.clone(),
            confusion: r.confusion.clone(),
            extras: r.extras.iter().cloned().collect(),
        }
    }

    pub fn render(&self) -> String {
        let q = |s: &str| serde_json::to_string(s).expect("string serializes");
        let list = |v: &[String]| v.iter().map(|s| q(s)).collect::<Vec<_>>().join(", ");
        let mut out = String::from("# csisense evaluation report\n");
        let _ = writeln!(out, "format = {}", q(&self.format));
        let _ = writeln!(out, "created_unix = {}", self.created_unix);
        let _ = writeln!(out, "config_sha256 = {}", q(&self.config_sha256));
        let _ = writeln!(out, "pipeline = {}", q(&self.pipeline));
        let _ = writeln!(out, "protocol = {}", q(&self.protocol));
        let _ = writeln!(out, "target = {}", q(&self.target));
        let _ = writeln!(out, "seed = {}", self.seed);
        let _ = writeln!(out, "samples = {}", self.samples);
        let _ = writeln!(out, "accuracy = {:?}", self.accuracy);
        let _ = writeln!(out, "classes = [{}]", list(&self.classes));
        let folds: Vec<String> = self.per_fold.iter().map(|f| format!("{f:?}")).collect();
        let _ = writeln!(out, "per_fold = [{}]", folds.join(", "));
        out.push_str("confusion = [\n");
        for row in &self.confusion {
            let cells: Vec<String> = row.iter().map(|c| c.to_string()).collect();
            let _ = writeln!(out, "  [{}],", cells.join(", "));
        }
        out.push_str("]\n");
        if !self.extras.is_empty() {
            out.push_str("\n[extras]\n");
            for (k, v) in &self.extras {
                let _ = writeln!(out, "{} = {:?}", q(k), v);
            }
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let doc: ReportDoc = toml::from_str(text).map_err(|e| e.to_string())?;
        if doc.format != FORMAT {
            return Err(format!("unsupported report format {:?}", doc.format));
        }
        Ok(doc)
    }

    /// Human-readable summary for the terminal.
    pub fn table(&self) -> String {
        let mut out = String::new();
        let correct: u64 = (0..self.confusion.len()).map(|i| self.confusion[i][i]).sum();
        let _ = writeln!(out, "pipeline  {}", self.pipeline);
        let _ = writeln!(out, "protocol  {} (target {}, seed {})", self.protocol, self.target, self.seed);
        let _ = writeln!(out, "accuracy  {:.2}% ({correct}/{})", 100.0 * self.accuracy, self.samples);
        let folds: Vec<String> = self.per_fold.iter().map(|f| format!("{:.2}", 100.0 * f)).collect();
        let _ = writeln!(out, "folds     {}", folds.join(" "));
        for (k, v) in &self.extras {
            let _ = writeln!(out, "{k}  {:.2}%", 100.0 * v);
        }
        let w = self.classes.iter().map(|c| c.len()).max().unwrap_or(0).max(5);
        let _ = write!(out, "\n{:>w$} |", "truth");
        for c in &self.classes {
            let _ = write!(out, " {c:>w$}");
        }
        out.push('\n');
        for (c, row) in self.classes.iter().zip(&self.confusion) {
            let _ = write!(out, "{c:>w$} |");
            for v in row {
                let _ = write!(out, " {v:>w$}");
            }
            out.push('\n');
        }
        out
    }

    /// Row-normalized confusion matrix, `cell` pixels per entry, white for
    /// a full row.
    pub fn confusion_pixels(&self, cell: usize) -> (usize, Vec<u8>) {
        let c = self.confusion.len();
        let side = c * cell;
        let mut px = vec![0u8; side * side];
        for (i, row) in self.confusion.iter().enumerate() {
            let total: u64 = row.iter().sum();
            for (j, &v) in row.iter().enumerate() {
                let level = if total == 0 { 0 } else { (255.0 * v as f64 / total as f64).round() as u8 };
                for y in i * cell..(i + 1) * cell {
                    px[y * side + j * cell..y * side + (j + 1) * cell].fill(level);
                }
            }
        }
        (side, px)
    }
}

/// `text` with the `created_unix` line removed, for comparing runs.
pub fn without_timestamps(text: &str) -> String {
    text.lines().filter(|l| !l.starts_with("created_unix")).collect::<Vec<_>>().join("\n")
}
