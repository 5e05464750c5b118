//! Exhaustive grid search over weights, used to cross-check the allocator
//! on small instances.

use std::collections::BTreeSet;

use num_traits::Zero;

use super::Weights;
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::rational::{ratio, Rational};

pub const ORACLE_MAX_R: usize = 3;
pub const ORACLE_MAX_Q: usize = 12;
pub const ORACLE_MAX_DENOMINATOR: u32 = 32;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleCounts {
    /// Lexicographically smallest sorted-descending count vector on the grid.
    pub best_sorted: Vec<usize>,
    pub witness: Weights,
    /// Unsorted counts at the witness.
    pub counts: Vec<usize>,
    pub grid_points: usize,
}

/// Tries every weight vector with `b_1 = 1` and remaining coordinates in
/// `{p/d : 1 ≤ p ≤ d·max_multiple, d ≤ denominator_bound}`, skipping points
/// where some row's minimum is tied.
///
/// Rows are assigned by cross-multiplication (`b_l·a_{i,j} < b_j·a_{i,l}`),
/// never by dividing, so this path shares no code with `counts`.
pub fn oracle_best_counts(
    inst: &Instance,
    denominator_bound: u32,
    max_multiple: u32,
) -> Result<OracleCounts> {
    let (q, r) = (inst.q(), inst.r());
    if r == 0 || r > ORACLE_MAX_R || q > ORACLE_MAX_Q {
        return Err(Error::Guard(format!(
            "need 1 <= r <= {ORACLE_MAX_R} and q <= {ORACLE_MAX_Q}, got r = {r}, q = {q}"
        )));
    }
    if denominator_bound == 0 || denominator_bound > ORACLE_MAX_DENOMINATOR || max_multiple == 0 {
        return Err(Error::Guard(format!(
            "need 1 <= denominator_bound <= {ORACLE_MAX_DENOMINATOR} and max_multiple >= 1"
        )));
    }
    let mut grid = BTreeSet::new();
    for d in 1..=denominator_bound {
        for p in 1..=d * max_multiple {
            grid.insert(ratio(i64::from(p), i64::from(d)));
        }
    }
    let grid: Vec<Rational> = grid.into_iter().collect();

    let mut best: Option<OracleCounts> = None;
    let mut point = vec![Rational::from_integer(1.into()); r];
    let mut index = vec![0usize; r.saturating_sub(1)];
    let mut points = 0usize;
    loop {
        for (slot, &k) in index.iter().enumerate() {
            point[slot + 1] = grid[k].clone();
        }
        points += 1;
        if let Some(counts) = tie_free_counts(inst, &point) {
            let mut sorted = counts.clone();
            sorted.sort_unstable_by(|a, b| b.cmp(a));
            if best.as_ref().is_none_or(|b| sorted < b.best_sorted) {
                best = Some(OracleCounts {
                    best_sorted: sorted,
                    witness: Weights::new(point.clone())?,
                    counts,
                    grid_points: 0,
                });
            }
        }
        // odometer increment over the r-1 free coordinates
        let mut slot = 0;
        loop {
            if slot == index.len() {
                let mut found = best.ok_or_else(|| {
                    Error::NotAdmissible("no tie-free weights on the grid".into())
                })?;
                found.grid_points = points;
                return Ok(found);
            }
            index[slot] += 1;
            if index[slot] < grid.len() {
                break;
            }
            index[slot] = 0;
            slot += 1;
        }
    }
}

fn tie_free_counts(inst: &Instance, b: &[Rational]) -> Option<Vec<usize>> {
    let mut counts = vec![0; b.len()];
    for row in inst.rows() {
        let mut winner: Option<usize> = None;
        let mut tied = false;
        for j in (0..b.len()).filter(|&j| !row[j].is_zero()) {
            match winner {
                None => winner = Some(j),
                Some(w) => {
                    // b_j / a_j  vs  b_w / a_w
                    let lhs = &b[j] * &row[w];
                    let rhs = &b[w] * &row[j];
                    if lhs < rhs {
                        winner = Some(j);
                        tied = false;
                    } else if lhs == rhs {
                        tied = true;
                    }
                }
            }
        }
        if tied {
            return None;
        }
        counts[winner?] += 1;
    }
    Some(counts)
}
