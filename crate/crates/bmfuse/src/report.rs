//! `report.json` layout.

use std::collections::BTreeMap;

use bmfuse_core::evaluation::{EerPoint, OperatingPoint};
use bmfuse_core::normalization::NormalizationParams;
use bmfuse_core::score::{MultimodalScoreTable, Polarity};
use serde::{Serialize, Serializer};

use crate::pipeline::{EvalSettings, Evaluation, WeightSource};

/// Overrides the report timestamp, for reproducible output.
pub const TIMESTAMP_ENV: &str = "BMFUSE_FIXED_TIMESTAMP";

/// JSON has no infinities; the `-inf` sentinel threshold is written as a string.
fn real_or_string<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    if x.is_finite() {
        s.serialize_f64(*x)
    } else {
        s.serialize_str(&x.to_string())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub tool: &'static str,
    pub version: &'static str,
    pub timestamp: String,
    pub dataset: DatasetSummary,
    pub normalization: NormalizationSummary,
    pub fusion: FusionSummary,
    pub mapping_table: String,
    pub roc: String,
    pub metrics: Metrics,
    pub unimodal: Vec<UnimodalMetrics>,
    pub config: ConfigEcho,
}

#[derive(Debug, Clone, Serialize)]
pub struct MatcherSummary {
    pub name: String,
    pub polarity: Polarity,
}

#[derive(Debug, Clone, Serialize)]
pub struct DatasetSummary {
    pub matchers: Vec<MatcherSummary>,
    pub rows: usize,
    pub genuine: usize,
    pub impostor: usize,
    pub dropped_incomplete: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct NormalizationSummary {
    pub method: String,
    /// `evaluation` or `reference`.
    pub fitted_on: &'static str,
    pub params: BTreeMap<String, NormalizationParams>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FusionSummary {
    pub rule: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weight_source: Option<WeightSource>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bins: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EerSummary {
    pub eer: f64,
    #[serde(serialize_with = "real_or_string")]
    pub threshold: f64,
    pub far: f64,
    pub frr: f64,
}

impl From<EerPoint> for EerSummary {
    fn from(p: EerPoint) -> Self {
        EerSummary {
            eer: p.eer,
            threshold: p.threshold,
            far: p.far,
            frr: p.frr,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GarAt {
    pub requested_far: f64,
    pub achieved_far: f64,
    #[serde(serialize_with = "real_or_string")]
    pub threshold: f64,
    pub gar: f64,
    pub false_accepts: usize,
    pub n_impostor: usize,
    pub genuine_accepted: usize,
    pub n_genuine: usize,
}

impl GarAt {
    fn new(p: &OperatingPoint, n_genuine: usize, n_impostor: usize) -> Self {
        GarAt {
            requested_far: p.requested_far,
            achieved_far: p.achieved_far,
            threshold: p.threshold,
            gar: p.gar,
            false_accepts: p.false_accepts,
            n_impostor,
            genuine_accepted: n_genuine - p.false_rejects,
            n_genuine,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Metrics {
    pub eer: EerSummary,
    pub gar_at: Vec<GarAt>,
}

#[derive(Debug, Clone, Serialize)]
pub struct UnimodalMetrics {
    pub matcher: String,
    pub eer: EerSummary,
    pub gar_at: Vec<GarAt>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConfigEcho {
    pub input: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference: Option<String>,
    pub norm: String,
    pub fuse: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    pub bins: usize,
    pub alpha: f64,
    pub far: Vec<f64>,
    pub drop_incomplete: bool,
}

/// Timestamp from [`TIMESTAMP_ENV`] if set, else seconds since the Unix epoch.
pub fn timestamp() -> String {
    std::env::var(TIMESTAMP_ENV).unwrap_or_else(|_| {
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs().to_string())
            .unwrap_or_default()
    })
}

pub struct ReportInputs<'a> {
    pub table: &'a MultimodalScoreTable,
    pub dropped_incomplete: usize,
    pub drop_incomplete: bool,
    pub settings: &'a EvalSettings,
    pub evaluation: &'a Evaluation,
    pub input: String,
    pub reference: Option<String>,
    pub mapping_table_file: String,
    pub roc_file: String,
}

impl RunReport {
    pub fn build(inp: ReportInputs<'_>) -> RunReport {
        let ev = inp.evaluation;
        let (n_g, n_i) = (ev.mapping.n_genuine(), ev.mapping.n_impostor());
        let norm = inp
            .settings
            .norm
            .map_or_else(|| "none".to_string(), |m| m.to_string());
        let probabilistic = ev.rule.needs_model();
        RunReport {
            tool: "bmfuse",
            version: env!("CARGO_PKG_VERSION"),
            timestamp: timestamp(),
            dataset: DatasetSummary {
                matchers: inp
                    .table
                    .matchers()
                    .iter()
                    .map(|m| MatcherSummary {
                        name: m.name().to_string(),
                        polarity: m.polarity(),
                    })
                    .collect(),
                rows: inp.table.rows().len(),
                genuine: inp.table.genuine_count(),
                impostor: inp.table.impostor_count(),
                dropped_incomplete: inp.dropped_incomplete,
            },
            normalization: NormalizationSummary {
                method: norm.clone(),
                fitted_on: if inp.reference.is_some() {
                    "reference"
                } else {
                    "evaluation"
                },
                params: ev.params.clone(),
            },
            fusion: FusionSummary {
                rule: ev.rule.name(),
                weights: ev.rule.weights().map(<[f64]>::to_vec),
                weight_source: ev.weight_source,
                bins: probabilistic.then_some(inp.settings.bins),
                alpha: probabilistic.then_some(inp.settings.alpha),
            },
            mapping_table: inp.mapping_table_file,
            roc: inp.roc_file,
            metrics: Metrics {
                eer: ev.eer.into(),
                gar_at: ev
                    .operating_points
                    .iter()
                    .map(|p| GarAt::new(p, n_g, n_i))
                    .collect(),
            },
            unimodal: ev
                .unimodal
                .iter()
                .map(|u| UnimodalMetrics {
                    matcher: u.matcher.clone(),
                    eer: u.eer.into(),
                    gar_at: u
                        .operating_points
                        .iter()
                        .map(|p| GarAt::new(p, u.mapping.n_genuine(), u.mapping.n_impostor()))
                        .collect(),
                })
                .collect(),
            config: ConfigEcho {
                input: inp.input,
                reference: inp.reference,
                norm,
                fuse: ev.rule.name(),
                weights: inp.settings.weights.clone(),
                bins: inp.settings.bins,
                alpha: inp.settings.alpha,
                far: inp.settings.fars.clone(),
                drop_incomplete: inp.drop_incomplete,
            },
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}
