//! Score records, genuine/impostor labeling and multimodal alignment.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScoreError {
    #[error("matcher name must not be empty")]
    EmptyMatcherName,
    #[error("target and query ids must not be empty")]
    EmptyId,
    #[error("score {0} is not finite")]
    NonFinite(f64),
    #[error("no score records")]
    NoRecords,
    #[error("unknown matcher `{0}`")]
    UnknownMatcher(String),
    #[error("matcher `{0}` listed more than once")]
    DuplicateMatcher(String),
    #[error("pair ({target_id}, {query_id}) has no score for matcher `{matcher}`")]
    MissingScore {
        target_id: String,
        query_id: String,
        matcher: String,
    },
    #[error("pair ({target_id}, {query_id}) has more than one score for matcher `{matcher}`")]
    DuplicateScore {
        target_id: String,
        query_id: String,
        matcher: String,
    },
    #[error("row has {found} scores but the table has {expected} matchers")]
    RowArity { expected: usize, found: usize },
    #[error("row ({target_id}, {query_id}) carries a label inconsistent with its ids")]
    LabelMismatch { target_id: String, query_id: String },
}

/// Orientation of a matcher's raw output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    /// Higher raw score means more similar.
    Similarity,
    /// Lower raw score means more similar; stored negated.
    Distance,
}

impl Polarity {
    /// Maps a raw score into the higher-is-more-genuine orientation.
    pub fn orient(self, raw: f64) -> f64 {
        match self {
            Polarity::Similarity => raw,
            Polarity::Distance => -raw,
        }
    }

    /// Inverse of [`Polarity::orient`]. Negation is exact, so this round-trips bit for bit.
    pub fn restore(self, oriented: f64) -> f64 {
        self.orient(oriented)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MatcherId {
    name: String,
    polarity: Polarity,
}

impl MatcherId {
    pub fn new(name: impl Into<String>, polarity: Polarity) -> Result<Self, ScoreError> {
        let name = name.into();
        if name.is_empty() {
            return Err(ScoreError::EmptyMatcherName);
        }
        Ok(MatcherId { name, polarity })
    }

    pub fn similarity(name: impl Into<String>) -> Result<Self, ScoreError> {
        Self::new(name, Polarity::Similarity)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn polarity(&self) -> Polarity {
        self.polarity
    }
}

/// One comparison result. `score` is already oriented (distance matchers negated).
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRecord {
    pub matcher: MatcherId,
    pub target_id: String,
    pub query_id: String,
    pub score: f64,
}

impl ScoreRecord {
    /// Builds a record from a raw matcher output, applying the matcher's polarity.
    pub fn from_raw(
        matcher: MatcherId,
        target_id: impl Into<String>,
        query_id: impl Into<String>,
        raw: f64,
    ) -> Result<Self, ScoreError> {
        let target_id = target_id.into();
        let query_id = query_id.into();
        if target_id.is_empty() || query_id.is_empty() {
            return Err(ScoreError::EmptyId);
        }
        if !raw.is_finite() {
            return Err(ScoreError::NonFinite(raw));
        }
        let score = matcher.polarity().orient(raw);
        Ok(ScoreRecord {
            matcher,
            target_id,
            query_id,
            score,
        })
    }

    pub fn label(&self) -> Label {
        Label::from_ids(&self.target_id, &self.query_id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Genuine,
    Impostor,
}

impl Label {
    /// Genuine iff the two ids are byte-for-byte equal.
    pub fn from_ids(target_id: &str, query_id: &str) -> Label {
        if target_id == query_id {
            Label::Genuine
        } else {
            Label::Impostor
        }
    }
}

/// One matcher's scores partitioned by class.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreSet {
    pub matcher: MatcherId,
    pub genuine: Vec<f64>,
    pub impostor: Vec<f64>,
}

impl ScoreSet {
    /// Both classes are present, so FAR and FRR are defined.
    pub fn is_usable(&self) -> bool {
        !self.genuine.is_empty() && !self.impostor.is_empty()
    }

    pub fn len(&self) -> usize {
        self.genuine.len() + self.impostor.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Genuine followed by impostor scores.
    pub fn pooled(&self) -> impl Iterator<Item = f64> + '_ {
        self.genuine.iter().chain(self.impostor.iter()).copied()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub target_id: String,
    pub query_id: String,
    pub label: Label,
    pub scores: Vec<f64>,
}

/// Comparison pairs aligned across matchers. Every row has one finite score per
/// matcher, in the order of [`MultimodalScoreTable::matchers`].
#[derive(Debug, Clone, PartialEq)]
pub struct MultimodalScoreTable {
    matchers: Vec<MatcherId>,
    rows: Vec<Row>,
}

impl MultimodalScoreTable {
    pub fn new(matchers: Vec<MatcherId>, rows: Vec<Row>) -> Result<Self, ScoreError> {
        for (i, m) in matchers.iter().enumerate() {
            if matchers[..i].iter().any(|o| o.name() == m.name()) {
                return Err(ScoreError::DuplicateMatcher(m.name.clone()));
            }
        }
        for row in &rows {
            if row.scores.len() != matchers.len() {
                return Err(ScoreError::RowArity {
                    expected: matchers.len(),
                    found: row.scores.len(),
                });
            }
            if row.target_id.is_empty() || row.query_id.is_empty() {
                return Err(ScoreError::EmptyId);
            }
            if row.label != Label::from_ids(&row.target_id, &row.query_id) {
                return Err(ScoreError::LabelMismatch {
                    target_id: row.target_id.clone(),
                    query_id: row.query_id.clone(),
                });
            }
            if let Some(&bad) = row.scores.iter().find(|s| !s.is_finite()) {
                return Err(ScoreError::NonFinite(bad));
            }
        }
        Ok(MultimodalScoreTable { matchers, rows })
    }

    pub fn matchers(&self) -> &[MatcherId] {
        &self.matchers
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn matcher_index(&self, name: &str) -> Option<usize> {
        self.matchers.iter().position(|m| m.name() == name)
    }

    pub fn genuine_count(&self) -> usize {
        self.rows
            .iter()
            .filter(|r| r.label == Label::Genuine)
            .count()
    }

    pub fn impostor_count(&self) -> usize {
        self.rows.len() - self.genuine_count()
    }

    /// Scores of one matcher in row order.
    pub fn column(&self, index: usize) -> impl Iterator<Item = f64> + '_ {
        self.rows.iter().map(move |r| r.scores[index])
    }

    /// Same rows and labels with every cell passed through `f(matcher_index, score)`.
    pub(crate) fn try_map_scores<E>(
        &self,
        mut f: impl FnMut(usize, f64) -> Result<f64, E>,
    ) -> Result<Self, E> {
        let mut rows = Vec::with_capacity(self.rows.len());
        for row in &self.rows {
            let scores = row
                .scores
                .iter()
                .enumerate()
                .map(|(j, &s)| f(j, s))
                .collect::<Result<Vec<_>, E>>()?;
            rows.push(Row {
                target_id: row.target_id.clone(),
                query_id: row.query_id.clone(),
                label: row.label,
                scores,
            });
        }
        Ok(MultimodalScoreTable {
            matchers: self.matchers.clone(),
            rows,
        })
    }
}

/// What to do with pairs that lack a score for some matcher.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Alignment {
    /// Incomplete pairs are an error.
    #[default]
    Strict,
    /// Incomplete pairs are removed and counted.
    DropIncomplete,
}

/// Aligns records into rows keyed by `(target_id, query_id)`, in strict mode.
pub fn build_multimodal_table(
    records: &[ScoreRecord],
    matchers: &[MatcherId],
) -> Result<MultimodalScoreTable, ScoreError> {
    build_multimodal_table_with(records, matchers, Alignment::Strict).map(|(t, _)| t)
}

/// Aligns records into rows keyed by `(target_id, query_id)`. Rows appear in the
/// order their pair is first seen. Returns the table and the number of dropped pairs.
pub fn build_multimodal_table_with(
    records: &[ScoreRecord],
    matchers: &[MatcherId],
    alignment: Alignment,
) -> Result<(MultimodalScoreTable, usize), ScoreError> {
    if records.is_empty() {
        return Err(ScoreError::NoRecords);
    }
    let mut index: BTreeMap<(&str, &str), usize> = BTreeMap::new();
    let mut pairs: Vec<(&str, &str)> = Vec::new();
    let mut cells: Vec<Vec<Option<f64>>> = Vec::new();

    for rec in records {
        let col = matchers
            .iter()
            .position(|m| m.name() == rec.matcher.name())
            .ok_or_else(|| ScoreError::UnknownMatcher(rec.matcher.name.clone()))?;
        let key = (rec.target_id.as_str(), rec.query_id.as_str());
        let row = *index.entry(key).or_insert_with(|| {
            pairs.push(key);
            cells.push(vec![None; matchers.len()]);
            pairs.len() - 1
        });
        let cell = &mut cells[row][col];
        if cell.is_some() {
            return Err(ScoreError::DuplicateScore {
                target_id: rec.target_id.clone(),
                query_id: rec.query_id.clone(),
                matcher: rec.matcher.name.clone(),
            });
        }
        *cell = Some(rec.score);
    }

    let mut rows = Vec::with_capacity(pairs.len());
    let mut dropped = 0;
    for ((target_id, query_id), row_cells) in pairs.into_iter().zip(cells) {
        if let Some(missing) = row_cells.iter().position(Option::is_none) {
            match alignment {
                Alignment::Strict => {
                    return Err(ScoreError::MissingScore {
                        target_id: target_id.into(),
                        query_id: query_id.into(),
                        matcher: matchers[missing].name.clone(),
                    })
                }
                Alignment::DropIncomplete => {
                    dropped += 1;
                    continue;
                }
            }
        }
        rows.push(Row {
            target_id: target_id.into(),
            query_id: query_id.into(),
            label: Label::from_ids(target_id, query_id),
            scores: row_cells.into_iter().flatten().collect(),
        });
    }
    let table = MultimodalScoreTable::new(matchers.to_vec(), rows)?;
    Ok((table, dropped))
}

/// Partitions one matcher's column by label. A table without one of the
/// classes still yields a set; check [`ScoreSet::is_usable`] before evaluating.
pub fn split_score_set(
    table: &MultimodalScoreTable,
    matcher: &str,
) -> Result<ScoreSet, ScoreError> {
    let col = table
        .matcher_index(matcher)
        .ok_or_else(|| ScoreError::UnknownMatcher(matcher.into()))?;
    let mut genuine = Vec::new();
    let mut impostor = Vec::new();
    for row in table.rows() {
        match row.label {
            Label::Genuine => genuine.push(row.scores[col]),
            Label::Impostor => impostor.push(row.scores[col]),
        }
    }
    Ok(ScoreSet {
        matcher: table.matchers()[col].clone(),
        genuine,
        impostor,
    })
}
