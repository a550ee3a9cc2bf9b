//! Score-level and decision-level fusion.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use crate::score::{Label, MatcherId, MultimodalScoreTable, ScoreSet};

/// Default number of calibration bins per matcher.
pub const DEFAULT_BINS: usize = 32;
/// Default Laplace smoothing count.
pub const DEFAULT_ALPHA: f64 = 1.0;
/// Lower bound applied to an EER before inverting it into a weight.
pub const EER_FLOOR: f64 = 1e-6;

const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FusionError {
    #[error("nothing to fuse")]
    EmptyInput,
    #[error("product rule needs non-negative scores, got {0}")]
    NegativeInputForProduct(f64),
    #[error("probability rules need a calibrated probability model")]
    MissingModel,
    #[error("{weights} weights given for {scores} scores")]
    WeightArityMismatch { weights: usize, scores: usize },
    #[error("{thresholds} thresholds given for {matchers} matchers")]
    ThresholdArityMismatch { thresholds: usize, matchers: usize },
    #[error("probability model covers {model} matchers, row has {scores}")]
    ModelArityMismatch { model: usize, scores: usize },
    #[error("weights must be finite, non-negative and sum to 1 (sum = {sum})")]
    BadWeights { sum: f64 },
    #[error("EER {0} is outside [0, 0.5]")]
    BadEer(f64),
    #[error("calibration needs at least one genuine and one impostor row")]
    InsufficientData,
    #[error("bad calibration config: {0}")]
    BadConfig(&'static str),
    #[error("matcher `{0}` has a constant score column; bins cannot be formed")]
    DegenerateRange(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum FusionRule {
    /// Arithmetic mean; threshold-equivalent to the plain sum for a fixed matcher count.
    SimpleSum,
    MinScore,
    MaxScore,
    Product,
    WeightedSum(Vec<f64>),
    SumOfProbabilities,
    ProductOfProbabilities,
}

impl FusionRule {
    /// Validated weighted-sum rule.
    pub fn weighted_sum(weights: Vec<f64>) -> Result<Self, FusionError> {
        check_weights(&weights)?;
        Ok(FusionRule::WeightedSum(weights))
    }

    pub fn needs_model(&self) -> bool {
        matches!(
            self,
            FusionRule::SumOfProbabilities | FusionRule::ProductOfProbabilities
        )
    }

    /// Short name as used on the command line.
    pub fn name(&self) -> &'static str {
        match self {
            FusionRule::SimpleSum => "sum",
            FusionRule::MinScore => "min",
            FusionRule::MaxScore => "max",
            FusionRule::Product => "product",
            FusionRule::WeightedSum(_) => "wsum",
            FusionRule::SumOfProbabilities => "sumprob",
            FusionRule::ProductOfProbabilities => "prodprob",
        }
    }

    pub fn weights(&self) -> Option<&[f64]> {
        match self {
            FusionRule::WeightedSum(w) => Some(w),
            _ => None,
        }
    }
}

impl fmt::Display for FusionRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn check_weights(weights: &[f64]) -> Result<(), FusionError> {
    let sum: f64 = weights.iter().sum();
    let ok = weights.iter().all(|w| w.is_finite() && *w >= 0.0)
        && libm::fabs(sum - 1.0) <= WEIGHT_SUM_TOLERANCE;
    if ok {
        Ok(())
    } else {
        Err(FusionError::BadWeights { sum })
    }
}

/// Genuine posterior of one bin under Laplace smoothing. An empty bin with
/// `alpha == 0` has no evidence either way and gets 0.5.
pub fn smoothed_posterior(genuine: usize, impostor: usize, alpha: f64) -> f64 {
    let den = (genuine + impostor) as f64 + 2.0 * alpha;
    if den == 0.0 {
        0.5
    } else {
        (genuine as f64 + alpha) / den
    }
}

/// Equal-width histogram calibration of one matcher.
#[derive(Debug, Clone, PartialEq)]
pub struct BinnedPosterior {
    edges: Vec<f64>,
    posteriors: Vec<f64>,
}

impl BinnedPosterior {
    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn posteriors(&self) -> &[f64] {
        &self.posteriors
    }

    /// Bin `i` covers `[edges[i], edges[i+1])`; the last bin is closed, and
    /// scores outside the fitted range fall into the first or last bin.
    pub fn bin_of(&self, score: f64) -> usize {
        let inner = &self.edges[1..self.edges.len() - 1];
        inner.partition_point(|&e| e <= score)
    }

    pub fn posterior(&self, score: f64) -> f64 {
        self.posteriors[self.bin_of(score)]
    }
}

/// Maps each matcher's normalized score to a genuine posterior.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityModel {
    matchers: Vec<BinnedPosterior>,
    alpha: f64,
}

impl ProbabilityModel {
    pub fn matchers(&self) -> &[BinnedPosterior] {
        &self.matchers
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn bins(&self) -> usize {
        self.matchers.first().map_or(0, |m| m.posteriors.len())
    }
}

pub fn calibrate_probability(
    table: &MultimodalScoreTable,
    bins: usize,
    alpha: f64,
) -> Result<ProbabilityModel, FusionError> {
    if bins < 2 {
        return Err(FusionError::BadConfig("at least 2 bins are required"));
    }
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(FusionError::BadConfig("smoothing must be finite and >= 0"));
    }
    if table.genuine_count() == 0 || table.impostor_count() == 0 {
        return Err(FusionError::InsufficientData);
    }

    let mut matchers = Vec::with_capacity(table.matchers().len());
    for (j, m) in table.matchers().iter().enumerate() {
        let (lo, hi) = table
            .column(j)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
                (lo.min(s), hi.max(s))
            });
        let width = hi - lo;
        let mut edges: Vec<f64> = (0..bins)
            .map(|k| lo + width * (k as f64 / bins as f64))
            .collect();
        edges.push(hi);
        if !edges.windows(2).all(|w| w[0] < w[1]) {
            return Err(FusionError::DegenerateRange(m.name().into()));
        }

        let mut partial = BinnedPosterior {
            edges,
            posteriors: Vec::new(),
        };
        let mut genuine = alloc::vec![0usize; bins];
        let mut impostor = alloc::vec![0usize; bins];
        for row in table.rows() {
            let b = partial.bin_of(row.scores[j]);
            match row.label {
                Label::Genuine => genuine[b] += 1,
                Label::Impostor => impostor[b] += 1,
            }
        }
        partial.posteriors = genuine
            .iter()
            .zip(&impostor)
            .map(|(&g, &i)| smoothed_posterior(g, i, alpha))
            .collect();
        matchers.push(partial);
    }
    Ok(ProbabilityModel { matchers, alpha })
}

/// Fuses one row of normalized scores (one per matcher, in table order).
pub fn fuse_scores(
    row_scores: &[f64],
    rule: &FusionRule,
    model: Option<&ProbabilityModel>,
) -> Result<f64, FusionError> {
    if row_scores.is_empty() {
        return Err(FusionError::EmptyInput);
    }
    let k = row_scores.len() as f64;
    match rule {
        FusionRule::SimpleSum => Ok(row_scores.iter().sum::<f64>() / k),
        FusionRule::MinScore => Ok(row_scores.iter().copied().fold(f64::INFINITY, f64::min)),
        FusionRule::MaxScore => Ok(row_scores.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
        FusionRule::Product => {
            if let Some(&neg) = row_scores.iter().find(|&&s| s < 0.0) {
                return Err(FusionError::NegativeInputForProduct(neg));
            }
            Ok(row_scores.iter().product())
        }
        FusionRule::WeightedSum(weights) => {
            if weights.len() != row_scores.len() {
                return Err(FusionError::WeightArityMismatch {
                    weights: weights.len(),
                    scores: row_scores.len(),
                });
            }
            check_weights(weights)?;
            Ok(weights.iter().zip(row_scores).map(|(w, s)| w * s).sum())
        }
        FusionRule::SumOfProbabilities | FusionRule::ProductOfProbabilities => {
            let model = model.ok_or(FusionError::MissingModel)?;
            if model.matchers.len() != row_scores.len() {
                return Err(FusionError::ModelArityMismatch {
                    model: model.matchers.len(),
                    scores: row_scores.len(),
                });
            }
            let posteriors = model
                .matchers
                .iter()
                .zip(row_scores)
                .map(|(m, &s)| m.posterior(s));
            if *rule == FusionRule::SumOfProbabilities {
                Ok(posteriors.sum::<f64>() / k)
            } else {
                Ok(posteriors.product())
            }
        }
    }
}

/// Fuses every row and partitions the result by label.
pub fn fuse_table(
    table: &MultimodalScoreTable,
    rule: &FusionRule,
    model: Option<&ProbabilityModel>,
) -> Result<ScoreSet, FusionError> {
    let mut genuine = Vec::with_capacity(table.genuine_count());
    let mut impostor = Vec::with_capacity(table.impostor_count());
    for row in table.rows() {
        let fused = fuse_scores(&row.scores, rule, model)?;
        match row.label {
            Label::Genuine => genuine.push(fused),
            Label::Impostor => impostor.push(fused),
        }
    }
    Ok(ScoreSet {
        matcher: MatcherId::similarity(rule.name()).expect("rule names are nonempty"),
        genuine,
        impostor,
    })
}

/// Inverse-EER weights, normalized to sum to 1. EERs below [`EER_FLOOR`] are floored.
pub fn derive_accuracy_weights(per_matcher_eer: &[f64]) -> Result<Vec<f64>, FusionError> {
    if per_matcher_eer.is_empty() {
        return Err(FusionError::EmptyInput);
    }
    if let Some(&bad) = per_matcher_eer.iter().find(|&&e| !(0.0..=0.5).contains(&e)) {
        return Err(FusionError::BadEer(bad));
    }
    let inverse: Vec<f64> = per_matcher_eer
        .iter()
        .map(|&e| 1.0 / e.max(EER_FLOOR))
        .collect();
    let total: f64 = inverse.iter().sum();
    Ok(inverse.into_iter().map(|v| v / total).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Decision {
    Accept,
    Reject,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DecisionRule {
    And,
    Or,
}

/// Accept iff `score >= threshold`.
pub fn decide(score: f64, threshold: f64) -> Decision {
    if score >= threshold {
        Decision::Accept
    } else {
        Decision::Reject
    }
}

pub fn fuse_decisions(decisions: &[Decision], rule: DecisionRule) -> Result<Decision, FusionError> {
    if decisions.is_empty() {
        return Err(FusionError::EmptyInput);
    }
    let accepted = |d: &Decision| *d == Decision::Accept;
    let accept = match rule {
        DecisionRule::Or => decisions.iter().any(accepted),
        DecisionRule::And => decisions.iter().all(accepted),
    };
    Ok(if accept {
        Decision::Accept
    } else {
        Decision::Reject
    })
}

/// Error counts of decision-level fusion with one fixed threshold per matcher.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecisionCounts {
    pub false_accepts: usize,
    pub false_rejects: usize,
    pub n_genuine: usize,
    pub n_impostor: usize,
}

impl DecisionCounts {
    pub fn far(&self) -> f64 {
        self.false_accepts as f64 / self.n_impostor as f64
    }

    pub fn frr(&self) -> f64 {
        self.false_rejects as f64 / self.n_genuine as f64
    }
}

pub fn decision_fusion_counts(
    table: &MultimodalScoreTable,
    thresholds: &[f64],
    rule: DecisionRule,
) -> Result<DecisionCounts, FusionError> {
    if thresholds.len() != table.matchers().len() {
        return Err(FusionError::ThresholdArityMismatch {
            thresholds: thresholds.len(),
            matchers: table.matchers().len(),
        });
    }
    let mut counts = DecisionCounts {
        false_accepts: 0,
        false_rejects: 0,
        n_genuine: 0,
        n_impostor: 0,
    };
    let mut decisions = Vec::with_capacity(thresholds.len());
    for row in table.rows() {
        decisions.clear();
        decisions.extend(
            row.scores
                .iter()
                .zip(thresholds)
                .map(|(&s, &t)| decide(s, t)),
        );
        let fused = fuse_decisions(&decisions, rule)?;
        match row.label {
            Label::Genuine => {
                counts.n_genuine += 1;
                counts.false_rejects += usize::from(fused == Decision::Reject);
            }
            Label::Impostor => {
                counts.n_impostor += 1;
                counts.false_accepts += usize::from(fused == Decision::Accept);
            }
        }
    }
    Ok(counts)
}
