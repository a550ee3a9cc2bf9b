//! Min-max, z-score, median/MAD and tanh score normalization.
//!
//! Parameters are fitted over the pooled genuine and impostor scores of a
//! matcher. No method clips its output, so each transform stays strictly
//! increasing and leaves single-matcher ROC curves untouched.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::score::{MultimodalScoreTable, ScoreSet};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NormError {
    #[error("cannot fit normalization parameters on an empty score set")]
    EmptyScores,
    #[error("score {0} is not finite")]
    NonFinite(f64),
    #[error("{method} normalization has a zero denominator")]
    DegenerateParams { method: NormalizationMethod },
    #[error("no normalization parameters for matcher `{0}`")]
    MissingParams(String),
    #[error("parameters for matcher `{matcher}` were fitted for {found}, not {expected}")]
    MethodMismatch {
        matcher: String,
        expected: NormalizationMethod,
        found: NormalizationMethod,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormalizationMethod {
    MinMax,
    ZScore,
    Mad,
    Tanh,
}

impl NormalizationMethod {
    pub const ALL: [NormalizationMethod; 4] = [
        NormalizationMethod::MinMax,
        NormalizationMethod::ZScore,
        NormalizationMethod::Mad,
        NormalizationMethod::Tanh,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            NormalizationMethod::MinMax => "minmax",
            NormalizationMethod::ZScore => "zscore",
            NormalizationMethod::Mad => "mad",
            NormalizationMethod::Tanh => "tanh",
        }
    }
}

impl fmt::Display for NormalizationMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl core::str::FromStr for NormalizationMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        NormalizationMethod::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| alloc::format!("unknown normalization `{s}`"))
    }
}

/// All statistics of the fitting population. Only those used by `method` are
/// read by [`apply_normalization`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizationParams {
    pub method: NormalizationMethod,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    /// Population standard deviation (divides by N).
    pub std: f64,
    pub median: f64,
    /// Median of absolute deviations from the median, without a consistency factor.
    pub mad: f64,
    pub fitted_on: usize,
}

impl NormalizationParams {
    /// Fits every statistic on `scores` and checks the denominator `method` needs.
    pub fn fit(scores: &[f64], method: NormalizationMethod) -> Result<Self, NormError> {
        if scores.is_empty() {
            return Err(NormError::EmptyScores);
        }
        if let Some(&bad) = scores.iter().find(|s| !s.is_finite()) {
            return Err(NormError::NonFinite(bad));
        }
        let n = scores.len() as f64;
        let mut sorted = scores.to_vec();
        sorted.sort_by(f64::total_cmp);
        let min = sorted[0];
        let max = sorted[sorted.len() - 1];
        let mean = scores.iter().sum::<f64>() / n;
        let var = scores.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / n;
        let std = libm::sqrt(var);
        let median = median_of_sorted(&sorted);
        let mut deviations: Vec<f64> = sorted.iter().map(|s| libm::fabs(s - median)).collect();
        deviations.sort_by(f64::total_cmp);
        let mad = median_of_sorted(&deviations);

        let params = NormalizationParams {
            method,
            min,
            max,
            mean,
            std,
            median,
            mad,
            fitted_on: scores.len(),
        };
        params.denominator()?;
        Ok(params)
    }

    fn denominator(&self) -> Result<f64, NormError> {
        let d = match self.method {
            NormalizationMethod::MinMax => self.max - self.min,
            NormalizationMethod::ZScore | NormalizationMethod::Tanh => self.std,
            NormalizationMethod::Mad => self.mad,
        };
        if d > 0.0 && d.is_finite() {
            Ok(d)
        } else {
            Err(NormError::DegenerateParams {
                method: self.method,
            })
        }
    }
}

fn median_of_sorted(sorted: &[f64]) -> f64 {
    let mid = sorted.len() / 2;
    if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        sorted[mid - 1] / 2.0 + sorted[mid] / 2.0
    }
}

/// Fits `method` on the pooled genuine and impostor scores of one matcher.
pub fn fit_normalization_params(
    scores: &ScoreSet,
    method: NormalizationMethod,
) -> Result<NormalizationParams, NormError> {
    let pooled: Vec<f64> = scores.pooled().collect();
    NormalizationParams::fit(&pooled, method)
}

/// Fits `method` per matcher column of `table`, keyed by matcher name.
pub fn fit_table_params(
    table: &MultimodalScoreTable,
    method: NormalizationMethod,
) -> Result<BTreeMap<String, NormalizationParams>, NormError> {
    table
        .matchers()
        .iter()
        .enumerate()
        .map(|(j, m)| {
            let column: Vec<f64> = table.column(j).collect();
            NormalizationParams::fit(&column, method).map(|p| (m.name().into(), p))
        })
        .collect()
}

pub fn apply_normalization(s: f64, params: &NormalizationParams) -> Result<f64, NormError> {
    let d = params.denominator()?;
    Ok(match params.method {
        NormalizationMethod::MinMax => (s - params.min) / d,
        NormalizationMethod::ZScore => (s - params.mean) / d,
        NormalizationMethod::Mad => (s - params.median) / d,
        NormalizationMethod::Tanh => 0.5 * (libm::tanh(0.01 * ((s - params.mean) / d)) + 1.0),
    })
}

/// Replaces every cell with its normalized value. Labels and row order are kept.
pub fn normalize_table(
    table: &MultimodalScoreTable,
    method: NormalizationMethod,
    params_per_matcher: &BTreeMap<String, NormalizationParams>,
) -> Result<MultimodalScoreTable, NormError> {
    let params = table
        .matchers()
        .iter()
        .map(|m| {
            let p = params_per_matcher
                .get(m.name())
                .ok_or_else(|| NormError::MissingParams(m.name().into()))?;
            if p.method != method {
                return Err(NormError::MethodMismatch {
                    matcher: m.name().into(),
                    expected: method,
                    found: p.method,
                });
            }
            p.denominator()?;
            Ok(*p)
        })
        .collect::<Result<Vec<_>, _>>()?;
    table.try_map_scores(|j, s| apply_normalization(s, &params[j]))
}
