//! Seeded synthetic multimodal score tables.
//!
//! The generator is ChaCha20 (`rand_chacha`) seeded through
//! `SeedableRng::seed_from_u64`. Uniforms take the top 53 bits of each `u64`,
//! and normals come from the Box-Muller transform evaluated with the pure-Rust
//! `libm`, so a given [`SimConfig`] yields bit-identical tables on every platform.
//!
//! Rows are produced genuine first (`g0001`, `g0002`, ...), then impostor
//! (`a0001` vs `b0001`, ...). Within a row one sample is drawn per matcher in
//! profile order; matchers are independent.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::score::{Label, MatcherId, MultimodalScoreTable, Row};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("bad simulation config: {0}")]
    BadConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreDistribution {
    #[default]
    Gaussian,
}

/// Class-conditional score distributions of one simulated matcher.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatcherProfile {
    pub name: String,
    pub genuine_mean: f64,
    pub genuine_std: f64,
    pub impostor_mean: f64,
    pub impostor_std: f64,
    #[serde(skip)]
    pub distribution: ScoreDistribution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    #[serde(rename = "matchers")]
    pub profiles: Vec<MatcherProfile>,
    pub n_genuine_pairs: usize,
    pub n_impostor_pairs: usize,
    pub seed: u64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |msg: String| Err(SynthError::BadConfig(msg));
        if self.profiles.is_empty() {
            return bad("at least one matcher profile is required".into());
        }
        if self.n_genuine_pairs == 0 || self.n_impostor_pairs == 0 {
            return bad("pair counts must be at least 1".into());
        }
        for (i, p) in self.profiles.iter().enumerate() {
            if p.name.is_empty() {
                return bad("matcher names must be nonempty".into());
            }
            if self.profiles[..i].iter().any(|o| o.name == p.name) {
                return bad(format!("matcher `{}` appears twice", p.name));
            }
            let stds_ok = [p.genuine_std, p.impostor_std]
                .iter()
                .all(|s| s.is_finite() && *s > 0.0);
            if !stds_ok {
                return bad(format!(
                    "matcher `{}`: standard deviations must be > 0",
                    p.name
                ));
            }
            if !(p.genuine_mean.is_finite() && p.impostor_mean.is_finite()) {
                return bad(format!("matcher `{}`: means must be finite", p.name));
            }
            if p.genuine_mean <= p.impostor_mean {
                return bad(format!(
                    "matcher `{}`: genuine mean must exceed impostor mean",
                    p.name
                ));
            }
        }
        Ok(())
    }
}

struct Gaussian {
    rng: ChaCha20Rng,
    spare: Option<f64>,
}

impl Gaussian {
    fn new(seed: u64) -> Self {
        Gaussian {
            rng: ChaCha20Rng::seed_from_u64(seed),
            spare: None,
        }
    }

    /// Uniform on [0, 1) with 53 random bits.
    fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    fn standard(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let r = libm::sqrt(-2.0 * libm::log(u1));
        let theta = 2.0 * PI * u2;
        self.spare = Some(r * libm::sin(theta));
        r * libm::cos(theta)
    }

    fn sample(&mut self, mean: f64, std: f64) -> f64 {
        mean + std * self.standard()
    }
}

pub fn generate_synthetic_table(config: &SimConfig) -> Result<MultimodalScoreTable, SynthError> {
    config.validate()?;
    let matchers = config
        .profiles
        .iter()
        .map(|p| MatcherId::similarity(p.name.clone()))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| SynthError::BadConfig(format!("{e}")))?;

    let mut gauss = Gaussian::new(config.seed);
    let mut rows = Vec::with_capacity(config.n_genuine_pairs + config.n_impostor_pairs);
    for i in 1..=config.n_genuine_pairs {
        let id = format!("g{i:04}");
        let scores = config
            .profiles
            .iter()
            .map(|p| gauss.sample(p.genuine_mean, p.genuine_std))
            .collect();
        rows.push(Row {
            target_id: id.clone(),
            query_id: id,
            label: Label::Genuine,
            scores,
        });
    }
    for i in 1..=config.n_impostor_pairs {
        let scores = config
            .profiles
            .iter()
            .map(|p| gauss.sample(p.impostor_mean, p.impostor_std))
            .collect();
        rows.push(Row {
            target_id: format!("a{i:04}"),
            query_id: format!("b{i:04}"),
            label: Label::Impostor,
            scores,
        });
    }
    MultimodalScoreTable::new(matchers, rows).map_err(|e| SynthError::BadConfig(format!("{e}")))
}
