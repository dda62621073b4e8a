//! Validation analyses over a campaign snapshot: agreement, importance,
//! sensitivity, stepwise distinctness, cost, power and training pass rates,
//! plus the on-disk report bundle.
//!
//! Every pipeline is a pure function of the snapshot and its options.
//! Per-label work may run in parallel; results are always ordered by schema
//! label order so outputs are byte-stable.

mod agreement;
mod bundle;
mod cost;
mod importance;
mod pass_rates;
mod power;
mod sensitivity;
mod stepwise;
pub mod svg;

use serde::Serialize;

pub use agreement::{agreement_analysis, AgreementReport, AgreementRow};
pub use bundle::{run_analyses, write_bundle, AnalysisOptions, AnalysisResults, BundleManifest, ReportKind, BUNDLE_FORMAT};
pub use cost::{cost_analysis, cost_row, median, CostReport, CostRow};
pub use importance::{
    comparative_design, importance_analysis, linear_design, univariate_fit, Design, ImportanceReport, ImportanceRow,
};
pub use pass_rates::{training_pass_rates, PassRate};
pub use power::{power_report, PowerRow};
pub use sensitivity::{sensitivity_analysis, PairTest, SensitivityReport, SensitivityRow, DEFAULT_ALPHAS};
pub use stepwise::{stepwise_analysis, stepwise_search, StepwiseReport, StepwiseStep, StepwiseTrace};

use crate::metrics::MetricError;

#[derive(Debug, thiserror::Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Stat(#[from] statkit::StatError),
    #[error("{0}")]
    Invalid(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

pub type Result<T> = std::result::Result<T, AnalysisError>;

/// Regression model family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Linear,
    Logistic,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Linear => "linear",
            ModelKind::Logistic => "logistic",
        }
    }

    pub(crate) fn fit(self, x: &statkit::Matrix, y: &[f64]) -> statkit::Result<statkit::RegressionFit> {
        match self {
            ModelKind::Linear => statkit::ols_fit_with(x, y, statkit::Aliasing::Drop),
            ModelKind::Logistic => statkit::logistic_fit_with(x, y, statkit::Aliasing::Drop),
        }
    }
}

/// Stable per-label seed derived from the run seed.
pub(crate) fn label_seed(seed: u64, label: &str) -> u64 {
    use sha2::{Digest, Sha256};
    let d = Sha256::digest(format!("{seed}\u{1f}{label}").as_bytes());
    u64::from_le_bytes(d[..8].try_into().expect("sha256 has 8 bytes"))
}

/// Shortest round-trip formatting for CSV cells; empty for `None`.
pub(crate) fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub(crate) fn csv_string(header: &[&str], rows: Vec<Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
}
