//! Mapping accuracy against simulated ground truth.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::mapper::{MapStatus, MappingRecord};
use crate::signal_model::{RawSignal, Truth};
use crate::{Error, Result};

/// Default distance threshold in bases: one vote window.
pub const DEFAULT_DISTANCE_THRESHOLD: u32 = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccuracyReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub counts: ConfusionCounts,
    pub distance_threshold: u32,
}

pub fn truths_from_signals(signals: &[RawSignal]) -> HashMap<String, Truth> {
    signals
        .iter()
        .filter_map(|s| s.truth.clone().map(|t| (s.read_id.clone(), t)))
        .collect()
}

/// Reads without a truth record are skipped. A mapping is correct when it
/// lands on the true reference within `threshold` bases of the true start.
pub fn classify(
    results: &[MappingRecord],
    truths: &HashMap<String, Truth>,
    threshold: u32,
) -> ConfusionCounts {
    let mut c = ConfusionCounts::default();
    for r in results {
        let Some(t) = truths.get(&r.read_id) else {
            continue;
        };
        match r.status {
            MapStatus::Unmapped => c.fn_ += 1,
            MapStatus::Mapped => {
                let d = (r.ref_start as i64 - t.start as i64).unsigned_abs();
                if r.ref_id == t.reference_id && d <= threshold as u64 {
                    c.tp += 1;
                } else {
                    c.fp += 1;
                }
            }
        }
    }
    c
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn metrics(counts: ConfusionCounts, distance_threshold: u32) -> AccuracyReport {
    let precision = ratio(counts.tp, counts.tp + counts.fp);
    let recall = ratio(counts.tp, counts.tp + counts.fn_);
    // 2PR / (P + R), taken from the counts so it is correctly rounded.
    let f1 = ratio(2 * counts.tp, 2 * counts.tp + counts.fp + counts.fn_);
    AccuracyReport {
        precision,
        recall,
        f1,
        counts,
        distance_threshold,
    }
}

impl AccuracyReport {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("metric\tvalue\n");
        let c = &self.counts;
        for (k, v) in [("tp", c.tp), ("fp", c.fp), ("fn", c.fn_)] {
            writeln!(out, "{k}\t{v}").unwrap();
        }
        for (k, v) in [("precision", self.precision), ("recall", self.recall), ("f1", self.f1)] {
            writeln!(out, "{k}\t{v:.6}").unwrap();
        }
        writeln!(out, "distance_threshold\t{}", self.distance_threshold).unwrap();
        out
    }

    /// Parses [`to_tsv`](Self::to_tsv) output; rates are recomputed from
    /// the counts.
    pub fn from_tsv(text: &str) -> Result<AccuracyReport> {
        let mut fields = HashMap::new();
        for (i, line) in text.lines().enumerate().skip(1) {
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(i + 1, "expected two columns"))?;
            fields.insert(k.to_string(), (i + 1, v.to_string()));
        }
        let int = |k: &str| -> Result<u64> {
            let (line, v) = fields
                .get(k)
                .ok_or_else(|| Error::parse(0, format!("missing {k}")))?;
            v.parse().map_err(|_| Error::parse(*line, format!("bad {k} '{v}'")))
        };
        let counts = ConfusionCounts {
            tp: int("tp")?,
            fp: int("fp")?,
            fn_: int("fn")?,
        };
        Ok(metrics(counts, int("distance_threshold")? as u32))
    }

    pub fn summary(&self) -> String {
        format!(
            "precision {:.4} recall {:.4} F1 {:.4} (TP {} FP {} FN {}, threshold {} bp)",
            self.precision,
            self.recall,
            self.f1,
            self.counts.tp,
            self.counts.fp,
            self.counts.fn_,
            self.distance_threshold
        )
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_tsv()).map_err(|e| Error::io(path, e))
    }
}
