//! On-disk artifacts: the JSON results document and the text parameter file.
//!
//! Results are serialized with a fixed field order and shortest round-trip
//! float formatting, so two identical runs produce byte-identical files —
//! `wall_seconds` is the only field that varies between reruns.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::CliError;
use crate::metrics::{MetricsReport, RegressionErrors};

/// Flat final metrics, as they appear in comparison tables: the regression
/// errors are those of the scores against the binary labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub accuracy: f64,
    pub auc: Option<f64>,
    pub mae: f64,
    pub mape_percent: Option<f64>,
    pub rmse: f64,
    pub mse: f64,
}

impl MetricsSummary {
    pub fn from_report(report: &MetricsReport) -> Self {
        let RegressionErrors {
            mae,
            mape_percent,
            rmse,
            mse,
            ..
        } = report.errors_vs_labels.clone();
        Self {
            accuracy: report.accuracy,
            auc: report.auc,
            mae,
            mape_percent,
            rmse,
            mse,
        }
    }
}

/// Self-describing output of one command: the effective config, what ran,
/// and what came out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsDocument {
    pub artifact_version: String,
    pub command: String,
    pub seed: u64,
    pub config: RunConfig,
    /// Benchmark objective name for `optimize` runs.
    pub objective: Option<String>,
    /// Best objective value per iteration, non-increasing.
    pub history: Vec<f64>,
    pub best_fitness: f64,
    /// Best position for benchmark runs (trained weights live in the
    /// parameter file instead).
    pub best_position: Option<Vec<f64>>,
    pub metrics: Option<MetricsSummary>,
    pub roc_points: Option<Vec<(f64, f64)>>,
    /// Hex codec layout hash for runs that persist parameters.
    pub codec_hash: Option<String>,
    pub wall_seconds: f64,
}

impl ResultsDocument {
    pub fn artifact_version() -> String {
        format!("sparrownet/{}", env!("CARGO_PKG_VERSION"))
    }

    pub fn save(&self, path: &Path) -> Result<(), CliError> {
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| CliError::Runtime(format!("serializing results: {e}")))?;
        fs::write(path, json + "\n").map_err(|e| CliError::write(path, e))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::read(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("{} is not a results document: {e}", path.display())))
    }
}

/// Writes a flat parameter vector: a three-line header (format tag, codec
/// layout hash, count) followed by one float per line.
pub fn save_params(path: &Path, values: &[f64], layout_hash: u64) -> Result<(), CliError> {
    let mut out = String::with_capacity(values.len() * 20 + 64);
    out.push_str("sparrownet-params v1\n");
    out.push_str(&format!("layout = {layout_hash:016x}\n"));
    out.push_str(&format!("count = {}\n", values.len()));
    for v in values {
        out.push_str(&format!("{v}\n"));
    }
    fs::write(path, out).map_err(|e| CliError::write(path, e))
}

/// Reads a parameter file and checks its layout hash against the codec the
/// current configuration implies; a mismatch means the weights would be
/// silently misaligned, so it is an artifact-consistency error.
pub fn load_params(path: &Path, expected_hash: u64) -> Result<Vec<f64>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::read(path, e))?;
    let mut lines = text.lines();
    let magic = lines.next().unwrap_or_default();
    if magic != "sparrownet-params v1" {
        return Err(CliError::Usage(format!(
            "{} is not a sparrownet parameter file",
            path.display()
        )));
    }
    let layout_line = lines.next().unwrap_or_default();
    let hash = layout_line
        .strip_prefix("layout = ")
        .and_then(|h| u64::from_str_radix(h, 16).ok())
        .ok_or_else(|| CliError::Usage(format!("bad layout line `{layout_line}`")))?;
    if hash != expected_hash {
        return Err(CliError::ArtifactMismatch(format!(
            "parameter file layout {hash:016x} does not match configured codec {expected_hash:016x}"
        )));
    }
    let count_line = lines.next().unwrap_or_default();
    let count: usize = count_line
        .strip_prefix("count = ")
        .and_then(|c| c.parse().ok())
        .ok_or_else(|| CliError::Usage(format!("bad count line `{count_line}`")))?;
    let values: Vec<f64> = lines
        .filter(|l| !l.is_empty())
        .map(|l| {
            l.parse()
                .map_err(|e| CliError::Usage(format!("bad parameter value `{l}`: {e}")))
        })
        .collect::<Result<_, _>>()?;
    if values.len() != count {
        return Err(CliError::ArtifactMismatch(format!(
            "parameter file declares {count} values but holds {}",
            values.len()
        )));
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmp(name: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join("sparrownet-doc-tests");
        std::fs::create_dir_all(&dir).unwrap();
        dir.join(name)
    }

    #[test]
    fn params_round_trip_and_hash_guard() {
        let path = tmp("params.txt");
        let values = vec![0.5, -1.25, 3.0e-7, 2.0];
        save_params(&path, &values, 0xDEAD_BEEF).unwrap();
        assert_eq!(load_params(&path, 0xDEAD_BEEF).unwrap(), values);
        match load_params(&path, 0xFEED_FACE) {
            Err(CliError::ArtifactMismatch(_)) => {}
            other => panic!("expected artifact mismatch, got {other:?}"),
        }
    }

    #[test]
    fn results_document_serialization_is_stable() {
        let doc = ResultsDocument {
            artifact_version: ResultsDocument::artifact_version(),
            command: "optimize".into(),
            seed: 3,
            config: RunConfig::default(),
            objective: Some("sphere".into()),
            history: vec![2.0, 1.0, 0.5],
            best_fitness: 0.5,
            best_position: Some(vec![0.1, -0.2]),
            metrics: None,
            roc_points: None,
            codec_hash: None,
            wall_seconds: 1.25,
        };
        let path = tmp("results.json");
        doc.save(&path).unwrap();
        let loaded = ResultsDocument::load(&path).unwrap();
        assert_eq!(doc, loaded);

        let a = serde_json::to_string_pretty(&doc).unwrap();
        let b = serde_json::to_string_pretty(&loaded).unwrap();
        assert_eq!(a, b);
    }
}
