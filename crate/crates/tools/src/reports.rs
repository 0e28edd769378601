//! Report record schemas: per-clip detections, per-trace rankings, CDF
//! series and the attempts-to-50% table.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use pinsound_core::eval::{ExtractionSummary, GuessingCdf, P50Record};

use crate::error::{Result, ToolError};

pub const REPORT_FORMAT_VERSION: u32 = 1;

/// One clip's extraction result; `error` is set instead of timestamps
/// when the clip could not be processed.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DetectionRecord {
    pub format_version: u32,
    pub trace_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamps_ms: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Ground-truth comparison, present when truth was supplied.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<DetectionTruth>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DetectionTruth {
    pub n_truth: usize,
    pub n_matched: usize,
    pub detection_rate: f64,
    /// Signed timing error of each matched event.
    pub errors_ms: Vec<f64>,
    pub gap_errors_ms: Vec<f64>,
}

/// One trace's attack output, truncated to the top N candidates.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RankingRecord {
    pub format_version: u32,
    pub trace_id: String,
    pub model_id: String,
    pub n_candidates: usize,
    /// (PIN, score) pairs, best first.
    pub top: Vec<(String, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub true_pin: Option<String>,
    /// 1-based rank of the true PIN; absent when truth is unknown or the
    /// PIN was filtered out.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank: Option<usize>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub not_found: bool,
}

/// CSV with one row per attempt count.
pub fn write_cdf_csv(path: &Path, cdf: &GuessingCdf) -> Result<()> {
    let mut out = String::from("k,fraction\n");
    for (i, v) in cdf.values().iter().enumerate() {
        writeln!(out, "{},{}", i + 1, v).expect("string write");
    }
    fs::write(path, out).map_err(|e| ToolError::file(path, e.to_string()))
}

/// Plain-text table of per-PIN attempts to reach 50% recovery.
pub fn p50_table(records: &[P50Record]) -> String {
    let mut out = String::from("PIN   attempts  trials\n");
    for r in records {
        let attempts = match r.attempts_to_half {
            Some(k) => k.to_string(),
            None => "-".to_string(),
        };
        writeln!(out, "{}  {:>8}  {:>6}", r.pin, attempts, r.n_trials).expect("string write");
    }
    out
}

/// JSON summary of an evaluation run.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EvalSummary {
    pub format_version: u32,
    pub label: String,
    pub n_trials: usize,
    pub cdf_at: Vec<CdfPoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub improvement: Option<Vec<ImprovementPoint>>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CdfPoint {
    pub k: usize,
    pub fraction: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ImprovementPoint {
    pub k: usize,
    pub baseline: String,
    pub factor: f64,
}

/// JSON form of the pooled extraction statistics.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ExtractionReport {
    pub format_version: u32,
    pub n_clips: usize,
    pub n_truth: usize,
    pub n_matched: usize,
    pub detection_rate: f64,
    pub mean_error_ms: f64,
    pub std_error_ms: f64,
    pub p75_abs_gap_error_ms: f64,
    pub p97_abs_gap_error_ms: f64,
}

impl From<&ExtractionSummary> for ExtractionReport {
    fn from(s: &ExtractionSummary) -> ExtractionReport {
        ExtractionReport {
            format_version: REPORT_FORMAT_VERSION,
            n_clips: s.n_clips,
            n_truth: s.n_truth,
            n_matched: s.n_matched,
            detection_rate: s.detection_rate,
            mean_error_ms: s.mean_error_ms,
            std_error_ms: s.std_error_ms,
            p75_abs_gap_error_ms: s.p75_abs_gap_error_ms,
            p97_abs_gap_error_ms: s.p97_abs_gap_error_ms,
        }
    }
}
