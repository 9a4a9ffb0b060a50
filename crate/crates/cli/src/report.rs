//! Report serialization: metrics JSON/CSV, bench reports, run manifests.

use crate::errors::{CliError, CliResult};
use salientcut_core::eval::MetricsReport;
use salientcut_core::StageTimes;
use serde::Serialize;
use std::path::Path;

pub fn metrics_json(report: &MetricsReport) -> String {
    serde_json::to_string_pretty(report).expect("metrics serialize")
}

/// One row per frame.
pub fn metrics_csv(report: &MetricsReport) -> String {
    let mut out = String::from("frame,tp,tn,fp,fn,error,recall,precision,f_value\n");
    for (i, m) in report.per_frame.iter().enumerate() {
        out.push_str(&format!(
            "{i},{},{},{},{},{},{},{},{}\n",
            m.tp, m.tn, m.fp, m.fn_, m.error, m.recall, m.precision, m.f_value
        ));
    }
    out
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct StageStats {
    pub mean_ms: f64,
    pub min_ms: f64,
    pub max_ms: f64,
}

impl StageStats {
    fn over(values: impl Iterator<Item = f64> + Clone) -> StageStats {
        let mut n = 0usize;
        let mut sum = 0.0;
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for v in values {
            n += 1;
            sum += v;
            min = min.min(v);
            max = max.max(v);
        }
        StageStats {
            mean_ms: if n > 0 { sum / n as f64 } else { 0.0 },
            min_ms: if n > 0 { min } else { 0.0 },
            max_ms: if n > 0 { max } else { 0.0 },
        }
    }
}

/// Per-stage timing summary of one benchmarked run.
#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub resolution: String,
    pub width: usize,
    pub height: usize,
    pub frames: usize,
    pub workers: usize,
    pub fps: f64,
    pub va: StageStats,
    pub priors: StageStats,
    pub tlink: StageStats,
    pub graphcuts: StageStats,
    pub misc: StageStats,
    pub total: StageStats,
}

impl BenchReport {
    pub fn from_times(
        width: usize,
        height: usize,
        workers: usize,
        times: &[StageTimes],
    ) -> BenchReport {
        let total = StageStats::over(times.iter().map(|t| t.total_ms));
        BenchReport {
            resolution: format!("{width}x{height}"),
            width,
            height,
            frames: times.len(),
            workers,
            fps: if total.mean_ms > 0.0 {
                1e3 / total.mean_ms
            } else {
                0.0
            },
            va: StageStats::over(times.iter().map(|t| t.va_ms)),
            priors: StageStats::over(times.iter().map(|t| t.priors_ms)),
            tlink: StageStats::over(times.iter().map(|t| t.tlink_ms)),
            graphcuts: StageStats::over(times.iter().map(|t| t.graphcut_ms)),
            misc: StageStats::over(times.iter().map(|t| t.misc_ms)),
            total,
        }
    }
}

pub fn write_text(path: &Path, content: &str) -> CliResult<()> {
    std::fs::write(path, content).map_err(|e| CliError::io(path.display(), e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).expect("report serialize");
    write_text(path, &text)
}
