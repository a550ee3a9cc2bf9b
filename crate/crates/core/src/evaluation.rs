//! Threshold sweep, FAR/FRR mapping table, ROC points, EER and operating points.
//!
//! Every observed score is used as a threshold. A comparison is accepted when
//! `score >= threshold`, so
//!
//! * `FAR(t) = |{impostor >= t}| / n_impostor`
//! * `FRR(t) = |{genuine < t}| / n_genuine`
//! * `GAR(t) = 1 - FRR(t)`
//!
//! Rates are kept as integer counts and divided once, which makes them exactly
//! comparable with [`brute_force_rates`].

use alloc::vec::Vec;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("genuine and impostor score lists must both be nonempty")]
    EmptyClass,
    #[error("score {0} is not finite")]
    NonFinite(f64),
    #[error("target FAR {0} is outside [0, 1]")]
    BadTarget(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MappingRow {
    pub threshold: f64,
    pub far: f64,
    pub frr: f64,
    pub gar: f64,
    /// Impostor scores at or above the threshold.
    pub false_accepts: usize,
    /// Genuine scores below the threshold.
    pub false_rejects: usize,
}

/// Thresholds in strictly ascending order with their error rates. The first
/// row is the `-inf` sentinel (everything accepted) and the last sits just
/// above the largest score (everything rejected).
#[derive(Debug, Clone, PartialEq)]
pub struct MappingTable {
    rows: Vec<MappingRow>,
    n_genuine: usize,
    n_impostor: usize,
}

impl MappingTable {
    pub fn rows(&self) -> &[MappingRow] {
        &self.rows
    }

    pub fn n_genuine(&self) -> usize {
        self.n_genuine
    }

    pub fn n_impostor(&self) -> usize {
        self.n_impostor
    }

    fn row(&self, threshold: f64, false_accepts: usize, false_rejects: usize) -> MappingRow {
        row(
            threshold,
            false_accepts,
            false_rejects,
            self.n_genuine,
            self.n_impostor,
        )
    }

    /// `(FAR, FRR)` at an arbitrary threshold. The rates only change at observed
    /// scores, so they equal those of the first row whose threshold is `>= t`.
    pub fn rates_at(&self, threshold: f64) -> (f64, f64) {
        let i = self.rows.partition_point(|r| r.threshold < threshold);
        let r = self
            .rows
            .get(i)
            .copied()
            .unwrap_or_else(|| self.row(threshold, 0, self.n_genuine));
        (r.far, r.frr)
    }
}

fn row(threshold: f64, fa: usize, fr: usize, n_genuine: usize, n_impostor: usize) -> MappingRow {
    let frr = fr as f64 / n_genuine as f64;
    MappingRow {
        threshold,
        far: fa as f64 / n_impostor as f64,
        frr,
        gar: 1.0 - frr,
        false_accepts: fa,
        false_rejects: fr,
    }
}

fn check_scores(genuine: &[f64], impostor: &[f64]) -> Result<(), EvalError> {
    if genuine.is_empty() || impostor.is_empty() {
        return Err(EvalError::EmptyClass);
    }
    match genuine.iter().chain(impostor).find(|s| !s.is_finite()) {
        Some(&bad) => Err(EvalError::NonFinite(bad)),
        None => Ok(()),
    }
}

pub fn compute_mapping_table(genuine: &[f64], impostor: &[f64]) -> Result<MappingTable, EvalError> {
    check_scores(genuine, impostor)?;
    let (n_g, n_i) = (genuine.len(), impostor.len());
    let mut g = genuine.to_vec();
    let mut imp = impostor.to_vec();
    g.sort_by(f64::total_cmp);
    imp.sort_by(f64::total_cmp);

    let mut rows = Vec::with_capacity(n_g + n_i + 2);
    rows.push(row(f64::NEG_INFINITY, n_i, 0, n_g, n_i));

    // g[..gi] and imp[..ii] are the scores strictly below the current threshold
    let (mut gi, mut ii) = (0, 0);
    while gi < n_g || ii < n_i {
        let t = match (g.get(gi), imp.get(ii)) {
            (Some(&a), Some(&b)) => a.min(b),
            (Some(&a), None) => a,
            (None, Some(&b)) => b,
            (None, None) => unreachable!(),
        };
        rows.push(row(t, n_i - ii, gi, n_g, n_i));
        while gi < n_g && g[gi] <= t {
            gi += 1;
        }
        while ii < n_i && imp[ii] <= t {
            ii += 1;
        }
    }

    let max = rows[rows.len() - 1].threshold;
    rows.push(row(max.next_up(), 0, n_g, n_g, n_i));
    Ok(MappingTable {
        rows,
        n_genuine: n_g,
        n_impostor: n_i,
    })
}

/// Literal count-and-divide at one threshold: impostors on the accept side,
/// genuines on the reject side. Reference implementation for the sweep.
pub fn brute_force_rates(
    genuine: &[f64],
    impostor: &[f64],
    threshold: f64,
) -> Result<(f64, f64), EvalError> {
    if genuine.is_empty() || impostor.is_empty() {
        return Err(EvalError::EmptyClass);
    }
    let false_accepts = impostor.iter().filter(|&&s| s >= threshold).count();
    let false_rejects = genuine.iter().filter(|&&s| s < threshold).count();
    Ok((
        false_accepts as f64 / impostor.len() as f64,
        false_rejects as f64 / genuine.len() as f64,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub far: f64,
    pub gar: f64,
}

/// One point per mapping-table row, in ascending threshold order.
pub fn roc_points(table: &MappingTable) -> Vec<RocPoint> {
    table
        .rows
        .iter()
        .map(|r| RocPoint {
            far: r.far,
            gar: r.gar,
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EerPoint {
    pub threshold: f64,
    pub far: f64,
    pub frr: f64,
    pub eer: f64,
}

/// Row minimizing `|FAR - FRR|` (first, i.e. smallest threshold, on ties).
/// The gap is compared exactly on cross-multiplied counts.
pub fn equal_error_rate_point(table: &MappingTable) -> EerPoint {
    let (n_g, n_i) = (table.n_genuine as u128, table.n_impostor as u128);
    let gap =
        |r: &MappingRow| (r.false_accepts as u128 * n_g).abs_diff(r.false_rejects as u128 * n_i);
    let best = table
        .rows
        .iter()
        .reduce(|best, r| if gap(r) < gap(best) { r } else { best })
        .expect("mapping tables always carry sentinel rows");
    EerPoint {
        threshold: best.threshold,
        far: best.far,
        frr: best.frr,
        eer: (best.far + best.frr) / 2.0,
    }
}

pub fn equal_error_rate(table: &MappingTable) -> f64 {
    equal_error_rate_point(table).eer
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint {
    pub requested_far: f64,
    pub achieved_far: f64,
    pub threshold: f64,
    pub gar: f64,
    pub false_accepts: usize,
    pub false_rejects: usize,
}

/// Most permissive threshold whose FAR stays within `target_far`. Since FAR
/// only falls as the threshold rises, this maximizes GAR under the budget.
pub fn gar_at_far(table: &MappingTable, target_far: f64) -> Result<OperatingPoint, EvalError> {
    if !(0.0..=1.0).contains(&target_far) {
        return Err(EvalError::BadTarget(target_far));
    }
    let r = table
        .rows
        .iter()
        .find(|r| r.far <= target_far)
        .expect("the last row has FAR 0");
    Ok(OperatingPoint {
        requested_far: target_far,
        achieved_far: r.far,
        threshold: r.threshold,
        gar: r.gar,
        false_accepts: r.false_accepts,
        false_rejects: r.false_rejects,
    })
}
