//! Score CSV, ROC / mapping-table CSV and simulation-config JSON.
//!
//! Score files have the header `matcher,target_id,query_id,score`, no quoting,
//! `.` as decimal separator, LF or CRLF line endings. Blank lines and lines
//! starting with `#` are skipped.
//!
//! Reals are written with Rust's shortest round-trip formatting (at most 17
//! significant digits), so parsing an emitted file gives back the same bits.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use bmfuse_core::evaluation::{MappingTable, RocPoint};
use bmfuse_core::score::{MatcherId, MultimodalScoreTable, Polarity, ScoreRecord};
use bmfuse_core::synth::SimConfig;
use thiserror::Error;

pub const SCORE_HEADER: [&str; 4] = ["matcher", "target_id", "query_id", "score"];

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("input has no data rows")]
    EmptyInput,
    #[error("line {line}: expected header `{}`", SCORE_HEADER.join(","))]
    BadHeader { line: u64 },
    #[error("line {line}: {reason}")]
    MalformedRow { line: u64, reason: String },
    #[error("line {line}: unknown matcher `{name}`")]
    UnknownMatcher { line: u64, name: String },
}

impl ParseError {
    pub fn line(&self) -> Option<u64> {
        match self {
            ParseError::EmptyInput => None,
            ParseError::BadHeader { line }
            | ParseError::MalformedRow { line, .. }
            | ParseError::UnknownMatcher { line, .. } => Some(*line),
        }
    }
}

fn reader(bytes: &[u8]) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .quoting(false)
        .flexible(true)
        .from_reader(bytes)
}

fn csv_error(e: csv::Error) -> ParseError {
    let line = e.position().map_or(0, |p| p.line());
    ParseError::MalformedRow {
        line,
        reason: e.to_string(),
    }
}

/// Parses a score file into records, in file order. Without a polarity map
/// every matcher is treated as a similarity matcher; with one, matchers absent
/// from the map are rejected.
pub fn parse_score_csv(
    bytes: &[u8],
    polarity_map: Option<&BTreeMap<String, Polarity>>,
) -> Result<Vec<ScoreRecord>, ParseError> {
    let mut rdr = reader(bytes);
    let mut records = rdr.records();

    let header = match records.next() {
        None => return Err(ParseError::EmptyInput),
        Some(r) => r.map_err(csv_error)?,
    };
    let header_line = header.position().map_or(1, |p| p.line());
    if header.iter().ne(SCORE_HEADER) {
        return Err(ParseError::BadHeader { line: header_line });
    }

    let mut out = Vec::new();
    for rec in records {
        let rec = rec.map_err(csv_error)?;
        let line = rec.position().map_or(0, |p| p.line());
        let malformed = |reason: String| ParseError::MalformedRow { line, reason };
        if rec.len() != 4 {
            return Err(malformed(format!(
                "expected 4 columns, found {}",
                rec.len()
            )));
        }
        let name = &rec[0];
        let polarity = match polarity_map {
            None => Polarity::Similarity,
            Some(map) => *map.get(name).ok_or_else(|| ParseError::UnknownMatcher {
                line,
                name: name.to_string(),
            })?,
        };
        let raw: f64 = rec[3]
            .parse()
            .map_err(|_| malformed(format!("cannot parse score `{}`", &rec[3])))?;
        let matcher = MatcherId::new(name, polarity).map_err(|e| malformed(e.to_string()))?;
        let record = ScoreRecord::from_raw(matcher, &rec[1], &rec[2], raw)
            .map_err(|e| malformed(e.to_string()))?;
        out.push(record);
    }
    if out.is_empty() {
        return Err(ParseError::EmptyInput);
    }
    Ok(out)
}

/// Distinct matchers in order of first appearance.
pub fn matchers_in_order(records: &[ScoreRecord]) -> Vec<MatcherId> {
    let mut out: Vec<MatcherId> = Vec::new();
    for r in records {
        if !out.iter().any(|m| m.name() == r.matcher.name()) {
            out.push(r.matcher.clone());
        }
    }
    out
}

/// Shortest decimal that parses back to the same `f64`.
pub fn fmt_real(x: f64) -> String {
    format!("{x}")
}

/// Writes a table back in score-file format, undoing polarity negation so the
/// file re-ingests to an identical table.
pub fn emit_score_csv(table: &MultimodalScoreTable) -> String {
    let mut out = SCORE_HEADER.join(",");
    out.push('\n');
    for row in table.rows() {
        for (m, &s) in table.matchers().iter().zip(&row.scores) {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                m.name(),
                row.target_id,
                row.query_id,
                fmt_real(m.polarity().restore(s))
            );
        }
    }
    out
}

#[derive(Debug, Error)]
pub enum RocCsvError {
    #[error("no ROC points to write")]
    Empty,
    #[error("{0}")]
    Parse(#[from] ParseError),
}

/// `far,gar` rows in the order given (ascending threshold for [`roc_points`]).
///
/// [`roc_points`]: bmfuse_core::evaluation::roc_points
pub fn emit_roc_csv(points: &[RocPoint]) -> Result<String, RocCsvError> {
    if points.is_empty() {
        return Err(RocCsvError::Empty);
    }
    let mut out = String::from("far,gar\n");
    for p in points {
        let _ = writeln!(out, "{},{}", fmt_real(p.far), fmt_real(p.gar));
    }
    Ok(out)
}

pub fn parse_roc_csv(bytes: &[u8]) -> Result<Vec<RocPoint>, RocCsvError> {
    let mut rows = reader(bytes).into_records();
    match rows.next() {
        None => return Err(ParseError::EmptyInput.into()),
        Some(h) => {
            let h = h.map_err(csv_error)?;
            if h.iter().ne(["far", "gar"]) {
                let line = h.position().map_or(1, |p| p.line());
                return Err(ParseError::BadHeader { line }.into());
            }
        }
    }
    let mut points = Vec::new();
    for rec in rows {
        let rec = rec.map_err(csv_error)?;
        let line = rec.position().map_or(0, |p| p.line());
        let field = |i: usize| -> Result<f64, ParseError> {
            rec.get(i)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| ParseError::MalformedRow {
                    line,
                    reason: "expected two numeric columns".into(),
                })
        };
        if rec.len() != 2 {
            return Err(ParseError::MalformedRow {
                line,
                reason: format!("expected 2 columns, found {}", rec.len()),
            }
            .into());
        }
        points.push(RocPoint {
            far: field(0)?,
            gar: field(1)?,
        });
    }
    if points.is_empty() {
        return Err(RocCsvError::Empty);
    }
    Ok(points)
}

/// Mapping table as `threshold,far,frr,gar`, preceded by a comment with the class counts.
pub fn emit_mapping_table_csv(table: &MappingTable) -> String {
    let mut out = format!(
        "# n_genuine={} n_impostor={} accept_if=score>=threshold\nthreshold,far,frr,gar\n",
        table.n_genuine(),
        table.n_impostor()
    );
    for r in table.rows() {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            fmt_real(r.threshold),
            fmt_real(r.far),
            fmt_real(r.frr),
            fmt_real(r.gar)
        );
    }
    out
}

pub fn parse_sim_config(bytes: &[u8]) -> Result<SimConfig, serde_json::Error> {
    serde_json::from_slice(bytes)
}
