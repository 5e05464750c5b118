//! Lexicographic minimax weights.
//!
//! For positive weights `b` each row `P_i` is assigned to the coordinate `j`
//! minimizing `b_j / a_{i,j}` (zero entries count as `+∞`). The allocator
//! searches for weights whose per-coordinate counts are balanced: sorted in
//! descending order, consecutive counts differ by at most one, which forces
//! every count up to `q/r − (r−1)/2`.
//!
//! The search follows the transfer argument directly. Starting from
//! admissible (tie-free) weights, it repeatedly finds the first gap of two or
//! more in the sorted counts, scales up the weights of the heavier block by
//! the smallest factor that moves one row across, and steps just past that
//! factor. Every move strictly decreases the sorted count vector in
//! lexicographic order, so the loop terminates.

mod oracle;

pub use oracle::{oracle_best_counts, OracleCounts, ORACLE_MAX_DENOMINATOR, ORACLE_MAX_Q, ORACLE_MAX_R};

use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::instance::{
    check_genericity, check_support_condition, ensure_valid, perturb, GenericityCheck,
    Instance, PerturbedInstance, SupportCheck,
};
use crate::rational::{ceil_to_i64, format_rational, int, ratio, simplest_between, ExtRational, Rational};
use crate::seeded::{self, STREAM_WEIGHTS};

/// Retry budget for drawing admissible initial weights and for shrinking the
/// step past a transfer point.
pub const RETRY_BUDGET: usize = 32;

/// Strictly positive weight vector `Q = (b_1, …, b_r)`; in the certificate
/// it is the coordinate vector of the ample class `A = Σ b_j E_j`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Weights(Vec<Rational>);

impl Weights {
    pub fn new(values: Vec<Rational>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter("weights must be non-empty".into()));
        }
        if let Some((j, v)) = values.iter().enumerate().find(|(_, v)| !v.is_positive()) {
            return Err(Error::InvalidParameter(format!(
                "weight b_{} = {} is not positive",
                j + 1,
                format_rational(v)
            )));
        }
        Ok(Weights(values))
    }

    /// Skips the positivity check so a verifier can report bad input itself.
    pub(crate) fn unchecked(values: Vec<Rational>) -> Self {
        Weights(values)
    }

    pub fn ones(r: usize) -> Self {
        Weights(vec![Rational::one(); r])
    }

    /// Shorthand for tests and fixtures: `(num, den)` pairs.
    pub fn from_fractions(values: &[(i64, i64)]) -> Result<Self> {
        Weights::new(values.iter().map(|&(p, q)| ratio(p, q)).collect())
    }

    pub fn values(&self) -> &[Rational] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `t·b` for positive `t`.
    pub fn scaled(&self, t: &Rational) -> Weights {
        assert!(t.is_positive(), "scale factor must be positive");
        Weights(self.0.iter().map(|b| b * t).collect())
    }

    /// Rescaled so that `b_1 = 1`.
    pub fn normalized(&self) -> Weights {
        let first = self.0[0].clone();
        self.scaled(&first.recip())
    }

    /// `max_l b_l / min_l b_l`.
    pub fn spread(&self) -> Rational {
        let max = self.0.iter().max().expect("non-empty");
        let min = self.0.iter().min().expect("non-empty");
        max / min
    }
}

impl fmt::Display for Weights {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(format_rational).collect();
        write!(f, "({})", parts.join(", "))
    }
}

impl Serialize for Weights {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        crate::rational::serde_str::vec::serialize(&self.0, s)
    }
}

impl<'de> Deserialize<'de> for Weights {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let values = crate::rational::serde_str::vec::deserialize(d)?;
        Weights::new(values).map_err(D::Error::custom)
    }
}

/// `n_j(Q, P_1, …, P_q)` for every coordinate. A row whose minimum is
/// attained at several coordinates increments each of them and sets
/// `had_ties`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CountVector {
    pub counts: Vec<usize>,
    pub had_ties: bool,
}

impl CountVector {
    /// Counts in descending order.
    pub fn sorted_desc(&self) -> Vec<usize> {
        let mut sorted = self.counts.clone();
        sorted.sort_unstable_by(|a, b| b.cmp(a));
        sorted
    }

    pub fn min(&self) -> usize {
        self.counts.iter().copied().min().unwrap_or(0)
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}

/// Coordinates attaining `min_l b_l / a_{i,l}` for one row.
pub(crate) fn row_minimizers(row: &[Rational], b: &[Rational]) -> Vec<usize> {
    let mut best = ExtRational::Infinite;
    let mut at = Vec::new();
    for (j, (a, bj)) in row.iter().zip(b).enumerate() {
        let value = ExtRational::quotient(bj, a);
        if !value.is_finite() {
            continue;
        }
        match value.cmp(&best) {
            std::cmp::Ordering::Less => {
                best = value;
                at.clear();
                at.push(j);
            }
            std::cmp::Ordering::Equal => at.push(j),
            std::cmp::Ordering::Greater => {}
        }
    }
    at
}

pub fn counts(inst: &Instance, w: &Weights) -> CountVector {
    assert_eq!(w.len(), inst.r(), "weight vector length must equal r");
    let mut counts = vec![0; inst.r()];
    let mut had_ties = false;
    for row in inst.rows() {
        let at = row_minimizers(row, w.values());
        had_ties |= at.len() > 1;
        for j in at {
            counts[j] += 1;
        }
    }
    CountVector { counts, had_ties }
}

/// `⌈q/r − (r−1)/2⌉`, the guaranteed lower bound on every balanced count.
pub fn count_bound(q: usize, r: usize) -> i64 {
    let (q, r) = (q as i64, r as i64);
    ceil_to_i64(&(ratio(q, r) - ratio(r - 1, 2)))
}

/// `(1/(2M))^r ≤ b_l / b_{l'} ≤ (2M)^r` for all `l, l'`, with `M` the
/// largest ratio between nonzero entries of `inst`.
pub fn satisfies_ratio_bound(inst: &Instance, w: &Weights) -> bool {
    let two_m = int(2) * inst.max_entry_ratio();
    let exponent = i32::try_from(inst.r()).expect("r fits in i32");
    w.spread() <= num_traits::pow::Pow::pow(&two_m, exponent)
}

/// Why a weight vector is outside the admissible set. Positions are 1-based.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AdmissibilityFailure {
    /// Two nonzero coordinates of `(a_{i,1}/b_1, …, a_{i,r}/b_r)` coincide.
    RepeatedCoordinate { row: usize, cols: (usize, usize) },
    /// Two distinct (row, column pair) items have the same coordinate ratio.
    RepeatedRatio {
        first: (usize, (usize, usize)),
        second: (usize, (usize, usize)),
        value: String,
    },
}

impl fmt::Display for AdmissibilityFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AdmissibilityFailure::RepeatedCoordinate { row, cols } => {
                write!(f, "row {row}: coordinates {} and {} coincide", cols.0, cols.1)
            }
            AdmissibilityFailure::RepeatedRatio { first, second, value } => write!(
                f,
                "ratio {value} shared by row {} cols {:?} and row {} cols {:?}",
                first.0, first.1, second.0, second.1
            ),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Admissibility {
    Pass,
    Fail(AdmissibilityFailure),
}

impl Admissibility {
    pub fn is_pass(&self) -> bool {
        matches!(self, Admissibility::Pass)
    }
}

/// Membership in the admissible set: per row the nonzero values
/// `a_{i,j}/b_j` are distinct, and across all rows the ratios
/// `(a_{i,j}/b_j)/(a_{i,j'}/b_{j'})` of distinct nonzero coordinates are
/// distinct between different `(i, {j, j'})` items.
pub fn in_admissible_set(inst: &Instance, w: &Weights) -> Admissibility {
    assert_eq!(w.len(), inst.r(), "weight vector length must equal r");
    let b = w.values();
    let mut items: Vec<(Rational, usize, (usize, usize))> = Vec::new();
    for (i, row) in inst.rows().iter().enumerate() {
        let scaled: Vec<Option<Rational>> = row
            .iter()
            .zip(b)
            .map(|(a, bj)| (!a.is_zero()).then(|| a / bj))
            .collect();
        for j in 0..scaled.len() {
            let Some(x) = &scaled[j] else { continue };
            for (j2, y) in scaled.iter().enumerate().skip(j + 1) {
                let Some(y) = y else { continue };
                if x == y {
                    return Admissibility::Fail(AdmissibilityFailure::RepeatedCoordinate {
                        row: i + 1,
                        cols: (j + 1, j2 + 1),
                    });
                }
                items.push((x / y, i, (j, j2)));
                items.push((y / x, i, (j, j2)));
            }
        }
    }
    items.sort();
    for pair in items.windows(2) {
        let (v1, i1, c1) = &pair[0];
        let (v2, i2, c2) = &pair[1];
        if v1 == v2 && (i1, c1) != (i2, c2) {
            return Admissibility::Fail(AdmissibilityFailure::RepeatedRatio {
                first: (i1 + 1, (c1.0 + 1, c1.1 + 1)),
                second: (i2 + 1, (c2.0 + 1, c2.1 + 1)),
                value: format_rational(v1),
            });
        }
    }
    Admissibility::Pass
}

/// Admissible starting weights: `(1, …, 1)` if it qualifies, otherwise
/// `b_j = 1 + 1/p_j` over seed-shuffled distinct primes, redrawn up to
/// [`RETRY_BUDGET`] times.
pub fn initial_weights(inst: &Instance, seed: u64) -> Result<Weights> {
    if let GenericityCheck::Fail(w) = check_genericity(inst) {
        return Err(Error::NotGeneric(w.rows.0, w.rows.1, w.cols.0, w.cols.1));
    }
    let r = inst.r();
    let ones = Weights::ones(r);
    if in_admissible_set(inst, &ones).is_pass() {
        return Ok(ones);
    }
    let mut rng = seeded::rng(seed, STREAM_WEIGHTS);
    for _ in 0..RETRY_BUDGET {
        let primes = seeded::shuffled_primes(&mut rng, r);
        let w = Weights(
            primes
                .iter()
                .map(|&p| Rational::one() + Rational::new(1.into(), p.into()))
                .collect(),
        );
        if in_admissible_set(inst, &w).is_pass() {
            return Ok(w);
        }
    }
    Err(Error::RetryExhausted {
        what: "initial weights",
        budget: RETRY_BUDGET,
    })
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BalanceOptions {
    /// Safety cap on accepted moves; defaults to `q²·r`.
    pub max_moves: Option<usize>,
}

impl BalanceOptions {
    pub fn cap_for(&self, inst: &Instance) -> usize {
        self.max_moves
            .unwrap_or_else(|| (inst.q() * inst.q() * inst.r()).max(1))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BalanceOutcome {
    pub weights: Weights,
    /// Sorted (descending) count vectors: the starting one, then one per move.
    pub trace: Vec<Vec<usize>>,
}

impl BalanceOutcome {
    pub fn moves(&self) -> usize {
        self.trace.len() - 1
    }
}

/// One accepted transfer.
struct Move {
    weights: Weights,
    counts: CountVector,
}

/// Coordinates ordered by descending count, ties by index.
fn count_order(cv: &CountVector) -> Vec<usize> {
    let mut order: Vec<usize> = (0..cv.counts.len()).collect();
    order.sort_by(|&x, &y| cv.counts[y].cmp(&cv.counts[x]).then(x.cmp(&y)));
    order
}

/// Balances admissible weights until consecutive sorted counts differ by at
/// most one. The result is admissible.
pub fn balance(inst: &Instance, w: &Weights, opts: &BalanceOptions) -> Result<BalanceOutcome> {
    if let Admissibility::Fail(why) = in_admissible_set(inst, w) {
        return Err(Error::NotAdmissible(why.to_string()));
    }
    let cap = opts.cap_for(inst);
    let mut weights = w.clone();
    let mut cv = counts(inst, &weights);
    let mut trace = vec![cv.sorted_desc()];
    loop {
        let order = count_order(&cv);
        let gap = (0..order.len().saturating_sub(1))
            .find(|&p| cv.counts[order[p]] >= cv.counts[order[p + 1]] + 2);
        let Some(gap) = gap else {
            return Ok(BalanceOutcome { weights, trace });
        };
        if trace.len() > cap {
            return Err(Error::IterationCap {
                cap,
                counts: cv.sorted_desc(),
            });
        }
        let mut high = vec![false; order.len()];
        for &j in &order[..=gap] {
            high[j] = true;
        }
        let step = transfer(inst, &weights, &high, gap)?;
        let next_sorted = step.counts.sorted_desc();
        assert!(
            next_sorted < *trace.last().expect("non-empty trace"),
            "transfer must decrease the sorted count vector"
        );
        weights = step.weights;
        cv = step.counts;
        trace.push(next_sorted);
    }
}

/// Scales the `high` coordinates by the smallest factor that moves a row's
/// minimum into the low block, then steps slightly past it.
fn transfer(inst: &Instance, w: &Weights, high: &[bool], gap: usize) -> Result<Move> {
    let b = w.values();
    // λ_{i,h,l} = (b_l/a_{i,l}) / (b_h/a_{i,h}) is where row i's ratio at the
    // scaled high coordinate h meets its ratio at the low coordinate l.
    let crossing = |row: &[Rational], h: usize, l: usize| -> Rational {
        (&b[l] / &row[l]) / (&b[h] / &row[h])
    };
    let mut critical: Option<Rational> = None;
    for row in inst.rows() {
        let at = row_minimizers(row, b);
        debug_assert_eq!(at.len(), 1, "admissible weights are tie-free");
        let h = at[0];
        if !high[h] {
            continue;
        }
        for l in (0..b.len()).filter(|&l| !high[l] && !row[l].is_zero()) {
            let lambda = crossing(row, h, l);
            if critical.as_ref().is_none_or(|c| lambda < *c) {
                critical = Some(lambda);
            }
        }
    }
    let critical = critical.ok_or(Error::Stuck { gap: gap + 1 })?;

    // The next coordinate coincidence along the path bounds the step.
    let mut next_event: Option<Rational> = None;
    for row in inst.rows() {
        for h in (0..b.len()).filter(|&h| high[h] && !row[h].is_zero()) {
            for l in (0..b.len()).filter(|&l| !high[l] && !row[l].is_zero()) {
                let lambda = crossing(row, h, l);
                if lambda > critical && next_event.as_ref().is_none_or(|e| lambda < *e) {
                    next_event = Some(lambda);
                }
            }
        }
    }
    let mut epsilon = match &next_event {
        Some(e) => (e - &critical) / int(2),
        None => critical.clone(),
    };
    for _ in 0..RETRY_BUDGET {
        let lambda = simplest_between(&critical, &(&critical + &epsilon));
        let scaled = Weights(
            b.iter()
                .zip(high)
                .map(|(bj, &is_high)| if is_high { bj * &lambda } else { bj.clone() })
                .collect(),
        );
        if in_admissible_set(inst, &scaled).is_pass() {
            let counts = counts(inst, &scaled);
            return Ok(Move { weights: scaled, counts });
        }
        epsilon /= int(2);
    }
    Err(Error::RetryExhausted {
        what: "transfer step",
        budget: RETRY_BUDGET,
    })
}

/// Shrinks large gaps between consecutive sorted weights so that
/// `b_{l+1}/b_l ≤ 2M`, which gives `(1/(2M))^r ≤ b_l/b_{l'} ≤ (2M)^r`.
///
/// Each pass scales every weight above an oversized gap by a factor
/// `λ ∈ ((b_l/b_{l+1})M, 2(b_l/b_{l+1})M)`. No row changes the coordinate
/// at which its minimum is attained, so counts never drop.
pub fn repair_ratios(inst: &Instance, w: &Weights) -> Weights {
    let m = inst.max_entry_ratio();
    let two_m = int(2) * &m;
    let mut b = w.values().to_vec();
    let mut order: Vec<usize> = (0..b.len()).collect();
    order.sort_by(|&x, &y| b[x].cmp(&b[y]).then(x.cmp(&y)));
    for pos in 0..order.len().saturating_sub(1) {
        let (lo, hi) = (order[pos], order[pos + 1]);
        if &b[hi] / &b[lo] <= two_m {
            continue;
        }
        let base = &b[lo] / &b[hi] * &m;
        let lambda = simplest_between(&base, &(&base * int(2)));
        for &k in &order[pos + 1..] {
            b[k] *= &lambda;
        }
    }
    Weights(b)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolveOptions {
    /// Perturbation size used when the instance is not generic.
    pub kappa: Rational,
    pub balance: BalanceOptions,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            kappa: ratio(1, 100),
            balance: BalanceOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Solution {
    /// Normalized so that `b_1 = 1`.
    pub weights: Weights,
    /// Counts on the perturbed matrix (tie-free).
    pub counts: CountVector,
    /// Tie-inclusive counts on the caller's matrix, for diagnostics.
    pub unperturbed_counts: CountVector,
    pub perturbation: PerturbedInstance,
    pub moves: usize,
}

/// Full pipeline: support gate, perturbation (identity when already
/// generic), admissible start, balancing, ratio repair.
pub fn solve_minimax(inst: &Instance, seed: u64, opts: &SolveOptions) -> Result<Solution> {
    ensure_valid(inst)?;
    if let SupportCheck::Fail(v) = check_support_condition(inst)? {
        return Err(Error::SupportCondition(v));
    }
    let pert = perturb(inst, &opts.kappa, seed)?;
    solve_perturbed(&pert, seed, &opts.balance)
}

/// The allocator on an already perturbed (generic) instance.
pub fn solve_perturbed(pert: &PerturbedInstance, seed: u64, opts: &BalanceOptions) -> Result<Solution> {
    let matrix = pert.perturbed();
    let start = initial_weights(matrix, seed)?;
    let balanced = balance(matrix, &start, opts)?;
    let weights = repair_ratios(matrix, &balanced.weights).normalized();
    Ok(Solution {
        counts: counts(matrix, &weights),
        unperturbed_counts: counts(pert.base(), &weights),
        weights,
        perturbation: pert.clone(),
        moves: balanced.moves(),
    })
}
