//! Match-score level evaluation of multimodal biometric systems.
//!
//! The crate is `no_std` (it needs `alloc`) and contains only the pure
//! numeric pieces: score tables, normalization, fusion rules, the FAR/FRR
//! threshold sweep and a seeded synthetic score generator. File formats,
//! reports and the command line live in the `bmfuse` crate.
//!
//! Scores are always oriented so that higher means "more genuine"; distance
//! matchers are negated when records are created (see [`score::Polarity`]).
//! A score is accepted when `score >= threshold`.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod evaluation;
pub mod fusion;
pub mod normalization;
pub mod score;
pub mod synth;

pub use evaluation::{
    brute_force_rates, compute_mapping_table, equal_error_rate, gar_at_far, roc_points, EvalError,
    MappingRow, MappingTable, OperatingPoint, RocPoint,
};
pub use fusion::{
    calibrate_probability, decide, derive_accuracy_weights, fuse_decisions, fuse_scores,
    fuse_table, Decision, DecisionRule, FusionError, FusionRule, ProbabilityModel,
};
pub use normalization::{
    apply_normalization, fit_normalization_params, normalize_table, NormError, NormalizationMethod,
    NormalizationParams,
};
pub use score::{
    build_multimodal_table, split_score_set, Alignment, Label, MatcherId, MultimodalScoreTable,
    Polarity, Row, ScoreError, ScoreRecord, ScoreSet,
};
pub use synth::{generate_synthetic_table, MatcherProfile, SimConfig, SynthError};
