//! Report writing: versioned JSON documents, CSV exports, and SVG files.

use std::path::Path;

use serde::Serialize;

use fundepth_core::banddepth::BandDepthResult;
use fundepth_core::curves::FunctionalSample;
use fundepth_core::pipeline::EnsembleSummary;

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

/// Top-level JSON document: schema version, the effective configuration,
/// the method summary and method-specific detail.
#[derive(Serialize)]
pub struct Report<'a, D: Serialize> {
    pub schema_version: u32,
    pub config: &'a crate::config::EffectiveConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summary: Option<&'a EnsembleSummary>,
    pub detail: D,
}

pub fn write_json<D: Serialize>(path: &str, report: &Report<'_, D>) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(report)
        .map_err(|e| CliError::Numeric(format!("serializing report: {e}")))?;
    text.push('\n');
    write_text(path, &text)
}

pub fn write_text(path: &str, text: &str) -> Result<(), CliError> {
    std::fs::write(Path::new(path), text).map_err(|e| CliError::OutputIo {
        path: path.to_string(),
        message: e.to_string(),
    })
}

fn fmt_field(v: f64) -> String {
    format!("{v}")
}

/// Envelope CSV: one row per grid point with the center curve and the
/// nested envelopes (plus the confidence band when present).
pub fn envelope_csv(sample: &FunctionalSample, summary: &EnsembleSummary) -> String {
    let mut out = String::new();
    let has_ci = summary.ci_band.is_some();
    out.push_str("t,center,central_lower,central_upper,nonoutlier_lower,nonoutlier_upper");
    if has_ci {
        out.push_str(",ci_lower,ci_upper");
    }
    out.push('\n');
    for (t, time) in sample.grid().iter().enumerate() {
        out.push_str(&fmt_field(*time));
        for v in [
            summary.center_curve[t],
            summary.central_envelope.lower[t],
            summary.central_envelope.upper[t],
            summary.nonoutlier_envelope.lower[t],
            summary.nonoutlier_envelope.upper[t],
        ] {
            out.push(',');
            out.push_str(&fmt_field(v));
        }
        if let Some(ci) = &summary.ci_band {
            out.push(',');
            out.push_str(&fmt_field(ci.lower[t]));
            out.push(',');
            out.push_str(&fmt_field(ci.upper[t]));
        }
        out.push('\n');
    }
    out
}

/// Depth CSV: label, depth, rank (1 = deepest).
pub fn depths_csv(sample: &FunctionalSample, depths: &BandDepthResult) -> String {
    let mut rank_of = vec![0usize; sample.n()];
    for (rank, &idx) in depths.ranking.iter().enumerate() {
        rank_of[idx] = rank + 1;
    }
    let mut out = String::from("label,depth,rank\n");
    for (i, label) in sample.labels().iter().enumerate() {
        out.push_str(&format!(
            "{label},{},{}\n",
            fmt_field(depths.depths[i]),
            rank_of[i]
        ));
    }
    out
}

/// Scores CSV: label plus one column per component.
pub fn scores_csv(sample: &FunctionalSample, scores: &[Vec<f64>]) -> String {
    let p = scores.first().map(|s| s.len()).unwrap_or(0);
    let mut out = String::from("label");
    for k in 1..=p {
        out.push_str(&format!(",score{k}"));
    }
    out.push('\n');
    for (label, row) in sample.labels().iter().zip(scores) {
        out.push_str(label);
        for v in row {
            out.push(',');
            out.push_str(&fmt_field(*v));
        }
        out.push('\n');
    }
    out
}
