//! normalize -> fuse -> sweep, shared by the CLI and library callers.

use std::collections::BTreeMap;

use bmfuse_core::evaluation::{
    compute_mapping_table, equal_error_rate_point, gar_at_far, EerPoint, MappingTable,
    OperatingPoint,
};
use bmfuse_core::fusion::{
    calibrate_probability, derive_accuracy_weights, fuse_table, FusionRule, DEFAULT_ALPHA,
    DEFAULT_BINS,
};
use bmfuse_core::normalization::{
    fit_table_params, normalize_table, NormalizationMethod, NormalizationParams,
};
use bmfuse_core::score::{split_score_set, MultimodalScoreTable, ScoreSet};

use crate::Error;

/// Fusion rule as chosen on the command line; weights are resolved later.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleChoice {
    Sum,
    Min,
    Max,
    Product,
    WeightedSum,
    SumProb,
    ProdProb,
}

impl RuleChoice {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "sum" => RuleChoice::Sum,
            "min" => RuleChoice::Min,
            "max" => RuleChoice::Max,
            "product" => RuleChoice::Product,
            "wsum" => RuleChoice::WeightedSum,
            "sumprob" => RuleChoice::SumProb,
            "prodprob" => RuleChoice::ProdProb,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightSource {
    Given,
    /// Inverse unimodal EER.
    Eer,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalSettings {
    /// `None` fuses raw scores.
    pub norm: Option<NormalizationMethod>,
    pub rule: RuleChoice,
    pub weights: Option<Vec<f64>>,
    pub bins: usize,
    pub alpha: f64,
    pub fars: Vec<f64>,
}

impl Default for EvalSettings {
    fn default() -> Self {
        EvalSettings {
            norm: Some(NormalizationMethod::MinMax),
            rule: RuleChoice::Sum,
            weights: None,
            bins: DEFAULT_BINS,
            alpha: DEFAULT_ALPHA,
            fars: vec![0.01, 0.001],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnimodalResult {
    pub matcher: String,
    pub mapping: MappingTable,
    pub eer: EerPoint,
    pub operating_points: Vec<OperatingPoint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub params: BTreeMap<String, NormalizationParams>,
    pub rule: FusionRule,
    pub weight_source: Option<WeightSource>,
    pub fused: ScoreSet,
    pub mapping: MappingTable,
    pub eer: EerPoint,
    pub operating_points: Vec<OperatingPoint>,
    pub unimodal: Vec<UnimodalResult>,
}

fn sweep(
    set: &ScoreSet,
    fars: &[f64],
) -> Result<(MappingTable, EerPoint, Vec<OperatingPoint>), Error> {
    let mapping = compute_mapping_table(&set.genuine, &set.impostor)?;
    let eer = equal_error_rate_point(&mapping);
    let ops = fars
        .iter()
        .map(|&f| gar_at_far(&mapping, f))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((mapping, eer, ops))
}

/// Per-matcher sweep on raw scores.
pub fn evaluate_unimodal(
    table: &MultimodalScoreTable,
    fars: &[f64],
) -> Result<Vec<UnimodalResult>, Error> {
    table
        .matchers()
        .iter()
        .map(|m| {
            let set = split_score_set(table, m.name())?;
            let (mapping, eer, operating_points) = sweep(&set, fars)?;
            Ok(UnimodalResult {
                matcher: m.name().to_string(),
                mapping,
                eer,
                operating_points,
            })
        })
        .collect()
}

/// Runs the full evaluation. Normalization parameters are fitted on
/// `reference` when given, otherwise on `table` itself.
pub fn evaluate(
    table: &MultimodalScoreTable,
    reference: Option<&MultimodalScoreTable>,
    settings: &EvalSettings,
) -> Result<Evaluation, Error> {
    let unimodal = evaluate_unimodal(table, &settings.fars)?;

    let (normalized, params) = match settings.norm {
        None => (table.clone(), BTreeMap::new()),
        Some(method) => {
            let params = fit_table_params(reference.unwrap_or(table), method)?;
            (normalize_table(table, method, &params)?, params)
        }
    };

    let (rule, weight_source) = match settings.rule {
        RuleChoice::Sum => (FusionRule::SimpleSum, None),
        RuleChoice::Min => (FusionRule::MinScore, None),
        RuleChoice::Max => (FusionRule::MaxScore, None),
        RuleChoice::Product => (FusionRule::Product, None),
        RuleChoice::SumProb => (FusionRule::SumOfProbabilities, None),
        RuleChoice::ProdProb => (FusionRule::ProductOfProbabilities, None),
        RuleChoice::WeightedSum => match &settings.weights {
            Some(w) => (
                FusionRule::weighted_sum(w.clone())?,
                Some(WeightSource::Given),
            ),
            None => {
                let eers: Vec<f64> = unimodal.iter().map(|u| u.eer.eer).collect();
                let w = derive_accuracy_weights(&eers)?;
                (FusionRule::weighted_sum(w)?, Some(WeightSource::Eer))
            }
        },
    };

    let model = if rule.needs_model() {
        Some(calibrate_probability(
            &normalized,
            settings.bins,
            settings.alpha,
        )?)
    } else {
        None
    };
    let fused = fuse_table(&normalized, &rule, model.as_ref())?;
    let (mapping, eer, operating_points) = sweep(&fused, &settings.fars)?;
    Ok(Evaluation {
        params,
        rule,
        weight_source,
        fused,
        mapping,
        eer,
        operating_points,
        unimodal,
    })
}
