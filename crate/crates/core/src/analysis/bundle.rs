//! Running analyses together and writing the on-disk report bundle.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::cost::CostReport;
use super::importance::quality_label;
use super::pass_rates::pass_rates_csv;
use super::power::power_csv;
use super::{
    agreement_analysis, cost_analysis, importance_analysis, power_report, sensitivity_analysis, stepwise_analysis, svg,
    training_pass_rates, AgreementReport, AnalysisError, ImportanceReport, PassRate, PowerRow, Result, SensitivityReport,
    StepwiseReport, DEFAULT_ALPHAS,
};
use crate::campaign::{export_records, sha256_hex, CampaignSnapshot, ExportFilter};
use crate::corpus::LabelKind;

pub const BUNDLE_FORMAT: &str = "abceval-report-bundle";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportKind {
    Agreement,
    Importance,
    Sensitivity,
    Stepwise,
    Cost,
    Power,
    PassRates,
    All,
}

impl ReportKind {
    pub const EACH: [ReportKind; 7] = [
        ReportKind::Agreement,
        ReportKind::Importance,
        ReportKind::Sensitivity,
        ReportKind::Stepwise,
        ReportKind::Cost,
        ReportKind::Power,
        ReportKind::PassRates,
    ];

    pub fn includes(self, other: ReportKind) -> bool {
        self == ReportKind::All || self == other
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ReportKind::Agreement => "agreement",
            ReportKind::Importance => "importance",
            ReportKind::Sensitivity => "sensitivity",
            ReportKind::Stepwise => "stepwise",
            ReportKind::Cost => "cost",
            ReportKind::Power => "power",
            ReportKind::PassRates => "pass_rates",
            ReportKind::All => "all",
        }
    }
}

impl std::str::FromStr for ReportKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        ReportKind::EACH
            .into_iter()
            .chain([ReportKind::All])
            .find(|k| k.as_str() == s.replace('-', "_"))
            .ok_or_else(|| format!("unknown report {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisOptions {
    pub report: ReportKind,
    pub seed: u64,
    pub bootstrap_resamples: usize,
    pub confidence_level: f64,
    pub downsample: usize,
    pub beam_width: usize,
    pub alphas: Vec<f64>,
    pub cost_dialogues: usize,
    pub wage_per_hour: f64,
    pub power_d: Vec<f64>,
    pub power_f2: Vec<f64>,
    pub power_n: Vec<usize>,
    pub power_alpha: f64,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            report: ReportKind::All,
            seed: 0,
            bootstrap_resamples: 10_000,
            confidence_level: 0.95,
            downsample: 32,
            beam_width: 100,
            alphas: DEFAULT_ALPHAS.to_vec(),
            cost_dialogues: 400,
            wage_per_hour: 20.0,
            power_d: vec![0.2, 0.3, 0.4, 0.5, 0.8],
            power_f2: vec![0.02, 0.14 * 0.14, 0.15],
            power_n: vec![32, 50, 100, 200, 400],
            power_alpha: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisResults {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub agreement: Option<AgreementReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub importance: Option<ImportanceReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sensitivity: Option<SensitivityReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub stepwise: Vec<StepwiseReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cost: Option<CostReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub power: Option<Vec<PowerRow>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pass_rates: Option<Vec<PassRate>>,
}

pub fn run_analyses(snapshot: &CampaignSnapshot, opts: &AnalysisOptions) -> Result<AnalysisResults> {
    let want = |k| opts.report.includes(k);
    let mut out = AnalysisResults {
        agreement: None,
        importance: None,
        sensitivity: None,
        stepwise: Vec::new(),
        cost: None,
        power: None,
        pass_rates: None,
    };
    if want(ReportKind::Agreement) {
        out.agreement = Some(agreement_analysis(snapshot, opts.bootstrap_resamples, opts.confidence_level, opts.seed)?);
    }
    if want(ReportKind::Importance) {
        out.importance = Some(importance_analysis(snapshot)?);
    }
    if want(ReportKind::Sensitivity) {
        out.sensitivity = Some(sensitivity_analysis(snapshot, opts.downsample, opts.seed, &opts.alphas)?);
    }
    if want(ReportKind::Stepwise) {
        for kind in [LabelKind::LikertDialogue, LabelKind::Comparative] {
            let target = quality_label(snapshot, kind)?;
            out.stepwise.push(stepwise_analysis(snapshot, &target, opts.beam_width)?);
        }
    }
    if want(ReportKind::Cost) {
        out.cost = Some(cost_analysis(snapshot, opts.cost_dialogues, opts.wage_per_hour));
    }
    if want(ReportKind::Power) {
        out.power = Some(power_report(&opts.power_d, &opts.power_f2, &opts.power_n, opts.power_alpha)?);
    }
    if want(ReportKind::PassRates) {
        out.pass_rates = Some(training_pass_rates(snapshot));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDigests {
    pub corpus: String,
    pub schema: String,
    pub records: String,
    pub campaign: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSizes {
    pub conversations: usize,
    pub pairs: usize,
    pub records: usize,
    pub double_annotated: usize,
}

/// `manifest.json`. Holds no timestamps so identical runs give identical bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleManifest {
    pub format: String,
    pub version: String,
    pub seed: u64,
    pub options: AnalysisOptions,
    pub campaign: String,
    pub n: SampleSizes,
    pub inputs: InputDigests,
    /// File name to sha256 of its bytes, excluding the manifest.
    pub files: BTreeMap<String, String>,
}

fn render(results: &AnalysisResults) -> BTreeMap<String, String> {
    let mut files = BTreeMap::new();
    if let Some(a) = &results.agreement {
        files.insert("agreement.csv".into(), a.to_csv());
        let bars: Vec<_> = a
            .rows
            .iter()
            .map(|r| (r.label.clone(), r.alpha, r.ci_low.zip(r.ci_high)))
            .collect();
        files.insert("agreement.svg".into(), svg::bar_chart("Krippendorff's alpha", &bars));
    }
    if let Some(i) = &results.importance {
        files.insert("importance.csv".into(), i.to_csv());
        let mut predictors: Vec<String> = Vec::new();
        for r in &i.rows {
            if !predictors.contains(&r.predictor) {
                predictors.push(r.predictor.clone());
            }
        }
        let series: Vec<(String, Vec<f64>)> = [(i.dialogue_target.as_str(), "r2"), (i.pair_target.as_str(), "mcfadden")]
            .iter()
            .map(|&(target, name)| {
                let values = predictors
                    .iter()
                    .map(|p| i.rows.iter().find(|r| &r.predictor == p && r.target == target).and_then(|r| r.fitness).unwrap_or(0.0))
                    .collect();
                (format!("{target} ({name})"), values)
            })
            .collect();
        files.insert("importance.svg".into(), svg::grouped_bar_chart("Predictive validity", &predictors, &series));
    }
    if let Some(s) = &results.sensitivity {
        files.insert("sensitivity.csv".into(), s.to_csv());
        files.insert("sensitivity_tests.csv".into(), s.tests_csv());
        let labels: Vec<String> = s.rows.iter().map(|r| r.label.clone()).collect();
        let series: Vec<(String, Vec<f64>)> = s
            .alphas
            .iter()
            .enumerate()
            .map(|(i, a)| (format!("alpha {a}"), s.rows.iter().map(|r| r.counts[i] as f64).collect()))
            .collect();
        files.insert("sensitivity.svg".into(), svg::grouped_bar_chart("Significant bot pairs", &labels, &series));
    }
    for st in &results.stepwise {
        files.insert(format!("stepwise_{}.csv", st.target), st.to_csv());
        let series: Vec<(String, Vec<(f64, f64)>)> = st
            .traces
            .iter()
            .map(|t| (t.method.as_str().to_string(), t.trace.steps.iter().map(|s| (s.size as f64, s.adjusted_fitness)).collect()))
            .collect();
        files.insert(
            format!("stepwise_{}.svg", st.target),
            svg::line_chart(&format!("Adjusted fitness for {}", st.target), "predictors", &series),
        );
    }
    if let Some(c) = &results.cost {
        files.insert("cost.csv".into(), c.to_csv());
        let bars: Vec<_> = c.methods.iter().map(|r| (r.name.clone(), Some(r.estimated_cost), None)).collect();
        files.insert("cost.svg".into(), svg::bar_chart(&format!("Estimated cost for {} dialogues", c.dialogues), &bars));
    }
    if let Some(p) = &results.power {
        files.insert("power.csv".into(), power_csv(p));
        let mut series: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
        for r in p {
            let name = format!("{} {}", r.test, r.effect);
            match series.iter_mut().find(|s| s.0 == name) {
                Some(s) => s.1.push((r.n as f64, r.power)),
                None => series.push((name, vec![(r.n as f64, r.power)])),
            }
        }
        files.insert("power.svg".into(), svg::line_chart("Power", "n", &series));
    }
    if let Some(p) = &results.pass_rates {
        files.insert("pass_rates.csv".into(), pass_rates_csv(p));
        let bars: Vec<_> = p.iter().map(|r| (r.task_key.clone(), Some(r.rate), None)).collect();
        files.insert("pass_rates.svg".into(), svg::bar_chart("Training pass rate", &bars));
    }
    files
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> AnalysisError + '_ {
    move |source| AnalysisError::Io { path: path.display().to_string(), source }
}

/// Writes every rendered report plus `manifest.json` into `out`. The bundle
/// is assembled in a sibling temporary directory and renamed into place, so
/// readers see either the previous bundle or the complete new one.
pub fn write_bundle(snapshot: &CampaignSnapshot, opts: &AnalysisOptions, results: &AnalysisResults, out: &Path) -> Result<BundleManifest> {
    let files = render(results);
    let schema_digest = snapshot.corpus.schema().digest();
    let export = export_records(&snapshot.records, &ExportFilter::default(), &schema_digest);
    let manifest = BundleManifest {
        format: BUNDLE_FORMAT.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        seed: opts.seed,
        options: opts.clone(),
        campaign: snapshot.config.name.clone(),
        n: SampleSizes {
            conversations: snapshot.corpus.conversations().len(),
            pairs: snapshot.corpus.pairs().len(),
            records: snapshot.records.len(),
            double_annotated: snapshot.config.double_annotation.len(),
        },
        inputs: InputDigests {
            corpus: snapshot.corpus.digest(),
            schema: schema_digest,
            records: sha256_hex(export.as_bytes()),
            campaign: snapshot.digest.clone(),
        },
        files: files.iter().map(|(k, v)| (k.clone(), sha256_hex(v.as_bytes()))).collect(),
    };
    let manifest_json = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";

    let parent = match out.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&parent).map_err(io_err(&parent))?;
    let name = out.file_name().ok_or_else(|| AnalysisError::Invalid(format!("bad output path {}", out.display())))?.to_string_lossy();
    let tmp = parent.join(format!(".{name}.tmp-{}", std::process::id()));
    if tmp.exists() {
        fs::remove_dir_all(&tmp).map_err(io_err(&tmp))?;
    }
    fs::create_dir(&tmp).map_err(io_err(&tmp))?;
    for (file, body) in files.iter().chain([(&"manifest.json".to_string(), &manifest_json)]) {
        let p = tmp.join(file);
        fs::write(&p, body).map_err(io_err(&p))?;
    }
    if out.exists() {
        let old = parent.join(format!(".{name}.old-{}", std::process::id()));
        fs::rename(out, &old).map_err(io_err(out))?;
        fs::rename(&tmp, out).map_err(io_err(out))?;
        fs::remove_dir_all(&old).map_err(io_err(&old))?;
    } else {
        fs::rename(&tmp, out).map_err(io_err(out))?;
    }
    Ok(manifest)
}
