//! On-disk JSON report shapes. `compare` reads `pyramid.json` back, so the
//! pyramid file deserializes as well as serializes.

use rfm_pyramid::pyramid::{Centroid, KMeansConfig, KMeansFit, PyramidClass, PyramidReport};
use rfm_pyramid::stats::{
    AlphaResult, BinomialItemResult, TTestResult, TwoPropZResult, UTestResult,
};
use serde::{Deserialize, Serialize};

use crate::provenance::Provenance;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassEntry {
    pub class: PyramidClass,
    pub cluster_index: usize,
    pub centroid: Centroid,
    pub rfm_sum: f64,
    pub count: usize,
    pub percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PyramidFile {
    pub cohort: String,
    /// Platinum first.
    pub classes: Vec<ClassEntry>,
    pub x: usize,
    pub n: usize,
    pub success_proportion: f64,
    pub seed: u64,
    pub restarts: usize,
    pub max_iterations: usize,
    pub tolerance: f64,
    pub inertia: f64,
    pub iterations: usize,
    pub converged: bool,
    pub provenance: Provenance,
}

impl PyramidFile {
    pub fn new(
        report: &PyramidReport,
        fit: &KMeansFit,
        config: &KMeansConfig,
        provenance: Provenance,
    ) -> Self {
        Self {
            cohort: report.cohort_name.clone(),
            classes: report
                .by_class()
                .into_iter()
                .map(|c| ClassEntry {
                    class: c.class_label,
                    cluster_index: c.cluster_index,
                    centroid: c.centroid,
                    rfm_sum: c.rfm_sum,
                    count: c.count,
                    percent: c.percent,
                })
                .collect(),
            x: report.success_count,
            n: report.total,
            success_proportion: report.success_proportion,
            seed: config.seed,
            restarts: config.restarts,
            max_iterations: config.max_iterations,
            tolerance: config.tolerance,
            inertia: fit.inertia,
            iterations: fit.iterations,
            converged: fit.converged,
            provenance,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    /// The cohorts differ at the configured significance level.
    Accepted,
    Rejected,
}

impl Decision {
    pub fn from_p(p: f64, significance: f64) -> Self {
        if p < significance {
            Decision::Accepted
        } else {
            Decision::Rejected
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Section<R> {
    pub hypothesis: String,
    pub test: String,
    pub statistic: f64,
    pub p_value: f64,
    pub significance: f64,
    pub decision: Decision,
    pub result: R,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonFile {
    pub cohort_a: String,
    pub cohort_b: String,
    pub significance: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub h1: Option<Section<UTestResult>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub h2: Option<Section<TTestResult>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub h3: Option<Section<TwoPropZResult>>,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidityFile {
    pub cut_point: u8,
    pub significance: f64,
    pub experts: usize,
    pub items: Vec<BinomialItemResult>,
    pub all_confirmed: bool,
    pub alpha: Option<AlphaResult>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub alpha_error: Option<String>,
    pub reliable: bool,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestFile {
    pub events: usize,
    pub customers: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub survey_responses: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub population: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub required_sample: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub sample_adequate: Option<bool>,
    pub row_errors: Vec<String>,
    pub provenance: Provenance,
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}
