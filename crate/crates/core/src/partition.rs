//! Positive partitions: `⌊q/r⌋` disjoint `r`-element row sets whose sums
//! are strictly positive in every coordinate.
//!
//! Only supports matter for positivity, so the search runs on bitmasks.
//! The construction peels one coordinate at a time: pick one seed row per
//! block covering that coordinate, project the rest away from it, recurse,
//! then glue one seed onto each sub-block.

use std::fmt;

use itertools::Itertools;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::certificate::{threshold_check, ThresholdReport};
use crate::error::{Error, Result};
use crate::instance::{ensure_valid, Instance};
use crate::rational::Rational;

pub const DEFAULT_NODE_BUDGET: usize = 1_000_000;
pub const ORACLE_MAX_Q: usize = 12;
pub const ORACLE_MAX_R: usize = 3;

/// Blocks of 1-based row indices, each sorted, ordered by first index.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub blocks: Vec<Vec<usize>>,
}

impl Partition {
    fn canonical(mut blocks: Vec<Vec<usize>>) -> Partition {
        for block in &mut blocks {
            block.sort_unstable();
        }
        blocks.sort();
        Partition { blocks }
    }
}

#[derive(Clone, Debug)]
pub struct PartitionOptions {
    /// Peel the coordinate covered by the most rows first instead of the
    /// last remaining one.
    pub reorder_coordinates: bool,
    pub node_budget: usize,
}

impl Default for PartitionOptions {
    fn default() -> Self {
        PartitionOptions { reorder_coordinates: false, node_budget: DEFAULT_NODE_BUDGET }
    }
}

/// 0-based rows kept after dropping `q − r⌊q/r⌋` surplus rows, widest
/// support first and later rows first among equals.
pub fn trim_rows(inst: &Instance) -> Vec<usize> {
    let keep = inst.r() * inst.blocks();
    let mut order: Vec<usize> = (0..inst.q()).collect();
    order.sort_by_key(|&i| (std::cmp::Reverse(inst.support_mask(i).count_ones()), std::cmp::Reverse(i)));
    let mut dropped: Vec<usize> = order[..inst.q() - keep].to_vec();
    dropped.sort_unstable();
    (0..inst.q()).filter(|i| dropped.binary_search(i).is_err()).collect()
}

pub fn build_partition(inst: &Instance) -> Result<Partition> {
    build_partition_with(inst, &PartitionOptions::default())
}

pub fn build_partition_with(inst: &Instance, opts: &PartitionOptions) -> Result<Partition> {
    ensure_valid(inst)?;
    if inst.r() > 62 {
        return Err(Error::TooManyGenerators { r: inst.r(), max: 62 });
    }
    let m = inst.blocks();
    let rows: Vec<(usize, u64)> = trim_rows(inst).into_iter().map(|i| (i, inst.support_mask(i))).collect();
    let active = (1u64 << inst.r()) - 1;
    let mut search = Search { m, opts, nodes: 0 };
    match search.solve(&rows, active)? {
        Some(blocks) => Ok(Partition::canonical(
            blocks.into_iter().map(|b| b.into_iter().map(|i| i + 1).collect()).collect(),
        )),
        None => Err(Error::NoPartition(format!(
            "every seed selection exhausted for {m} blocks; the support condition likely fails"
        ))),
    }
}

struct Search<'a> {
    m: usize,
    opts: &'a PartitionOptions,
    nodes: usize,
}

impl Search<'_> {
    /// Rows carry their original index and support restricted to `active`.
    fn solve(&mut self, rows: &[(usize, u64)], active: u64) -> Result<Option<Vec<Vec<usize>>>> {
        self.nodes += 1;
        if self.nodes > self.opts.node_budget {
            return Err(Error::NoPartition(format!("search budget of {} nodes exhausted", self.opts.node_budget)));
        }
        if active == 0 {
            return Ok(rows.is_empty().then(|| vec![Vec::new(); self.m]));
        }
        let coord = self.seed_coordinate(rows, active);
        let bit = 1u64 << coord;
        let rest_active = active & !bit;

        let mut forced = Vec::new();
        let mut candidates = Vec::new();
        for (k, &(_, mask)) in rows.iter().enumerate() {
            if mask & bit == 0 {
                continue;
            }
            if mask & rest_active == 0 {
                forced.push(k);
            } else {
                candidates.push(k);
            }
        }
        if forced.len() > self.m || forced.len() + candidates.len() < self.m {
            return Ok(None);
        }
        candidates.sort_by_key(|&k| (rows[k].1.count_ones(), rows[k].0));

        for extra in candidates.iter().copied().combinations(self.m - forced.len()) {
            let mut seeds: Vec<usize> = forced.iter().copied().chain(extra).collect();
            seeds.sort_unstable_by_key(|&k| rows[k].0);
            let rest: Vec<(usize, u64)> = rows
                .iter()
                .enumerate()
                .filter(|(k, _)| !seeds.contains(k))
                .map(|(_, &(i, mask))| (i, mask & rest_active))
                .collect();
            if !hall_condition(&rest, rest_active, self.m) {
                continue;
            }
            if let Some(mut blocks) = self.solve(&rest, rest_active)? {
                for (block, &k) in blocks.iter_mut().zip(&seeds) {
                    block.push(rows[k].0);
                }
                return Ok(Some(blocks));
            }
        }
        Ok(None)
    }

    fn seed_coordinate(&self, rows: &[(usize, u64)], active: u64) -> u32 {
        let mut coords = (0..64).filter(|j| active & (1 << j) != 0);
        if self.opts.reorder_coordinates {
            coords
                .max_by_key(|&j| (rows.iter().filter(|(_, mask)| mask & (1 << j) != 0).count(), j))
                .expect("active is nonzero")
        } else {
            coords.next_back().expect("active is nonzero")
        }
    }
}

/// For every proper `T ⊂ active`, at most `|T|·m` rows are supported in `T`.
fn hall_condition(rows: &[(usize, u64)], active: u64, m: usize) -> bool {
    let coords: Vec<u32> = (0..64).filter(|j| active & (1 << j) != 0).collect();
    let k = coords.len();
    if k > crate::instance::DEFAULT_MAX_GENERATORS {
        // too wide to tabulate; let the recursion decide
        return true;
    }
    let compress = |mask: u64| {
        coords
            .iter()
            .enumerate()
            .filter(|(_, &j)| mask & (1 << j) != 0)
            .fold(0usize, |acc, (slot, _)| acc | (1 << slot))
    };
    let mut supported = vec![0usize; 1 << k];
    for &(_, mask) in rows {
        supported[compress(mask)] += 1;
    }
    for bit in 0..k {
        for t in 0..(1usize << k) {
            if t & (1 << bit) != 0 {
                supported[t] += supported[t ^ (1 << bit)];
            }
        }
    }
    let full = (1usize << k) - 1;
    (0..full).all(|t| supported[t] <= t.count_ones() as usize * m)
}

/// What [`verify_partition`] rejects. Blocks, indices and coordinates are
/// 1-based.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PartitionFailure {
    BlockCount { expected: usize, found: usize },
    BlockSize { block: usize, expected: usize, found: usize },
    IndexOutOfRange { block: usize, index: usize },
    NotDisjoint { index: usize },
    ZeroCoordinate { block: usize, coordinate: usize, sum: String },
}

impl fmt::Display for PartitionFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PartitionFailure::BlockCount { expected, found } => write!(f, "expected {expected} blocks, found {found}"),
            PartitionFailure::BlockSize { block, expected, found } => {
                write!(f, "block {block} has {found} indices, expected {expected}")
            }
            PartitionFailure::IndexOutOfRange { block, index } => write!(f, "block {block}: index {index} out of range"),
            PartitionFailure::NotDisjoint { index } => write!(f, "not disjoint: index {index} is reused"),
            PartitionFailure::ZeroCoordinate { block, coordinate, sum } => {
                write!(f, "block {block}: coordinate {coordinate} sums to {sum}")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PartitionCheck {
    Pass,
    Fail(PartitionFailure),
}

impl PartitionCheck {
    pub fn is_pass(&self) -> bool {
        matches!(self, PartitionCheck::Pass)
    }
}

/// Exact check with rational block sums.
pub fn verify_partition(inst: &Instance, p: &Partition) -> PartitionCheck {
    use PartitionCheck::Fail;
    let (q, r) = (inst.q(), inst.r());
    if p.blocks.len() != inst.blocks() {
        return Fail(PartitionFailure::BlockCount { expected: inst.blocks(), found: p.blocks.len() });
    }
    let mut seen = vec![false; q + 1];
    for (b, block) in p.blocks.iter().enumerate() {
        if block.len() != r {
            return Fail(PartitionFailure::BlockSize { block: b + 1, expected: r, found: block.len() });
        }
        for &i in block {
            if i == 0 || i > q {
                return Fail(PartitionFailure::IndexOutOfRange { block: b + 1, index: i });
            }
            if seen[i] {
                return Fail(PartitionFailure::NotDisjoint { index: i });
            }
            seen[i] = true;
        }
    }
    for (b, block) in p.blocks.iter().enumerate() {
        let sum = block_sum(inst, block);
        if let Some((j, s)) = sum.iter().enumerate().find(|(_, s)| !s.is_positive()) {
            return Fail(PartitionFailure::ZeroCoordinate {
                block: b + 1,
                coordinate: j + 1,
                sum: crate::rational::format_rational(s),
            });
        }
    }
    PartitionCheck::Pass
}

fn block_sum(inst: &Instance, block: &[usize]) -> Vec<Rational> {
    let mut sum = vec![Rational::zero(); inst.r()];
    for &i in block {
        for (s, a) in sum.iter_mut().zip(inst.row(i - 1)) {
            *s += a;
        }
    }
    sum
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OraclePartition {
    pub exists: bool,
    pub witness: Option<Partition>,
    /// Candidate blocks whose sums were evaluated.
    pub blocks_tested: usize,
}

/// Exhaustive search over every family of `⌊q/r⌋` disjoint `r`-subsets,
/// testing positivity with rational sums. Guarded to `q ≤ 12`, `r ≤ 3`.
pub fn oracle_partition(inst: &Instance) -> Result<OraclePartition> {
    let (q, r) = (inst.q(), inst.r());
    if r == 0 || r > ORACLE_MAX_R || q > ORACLE_MAX_Q {
        return Err(Error::Guard(format!(
            "need 1 <= r <= {ORACLE_MAX_R} and q <= {ORACLE_MAX_Q}, got r = {r}, q = {q}"
        )));
    }
    let m = inst.blocks();
    let mut used = vec![false; q + 1];
    let mut blocks = Vec::new();
    let mut tested = 0;
    let found = oracle_step(inst, m, q - r * m, 1, &mut used, &mut blocks, &mut tested);
    Ok(OraclePartition {
        exists: found,
        witness: found.then(|| Partition::canonical(blocks)),
        blocks_tested: tested,
    })
}

/// The smallest unused index either opens a new block or is skipped
/// (at most `skips` times). This visits each family exactly once.
fn oracle_step(
    inst: &Instance,
    m: usize,
    skips: usize,
    from: usize,
    used: &mut Vec<bool>,
    blocks: &mut Vec<Vec<usize>>,
    tested: &mut usize,
) -> bool {
    if blocks.len() == m {
        return true;
    }
    let q = inst.q();
    let Some(first) = (from..=q).find(|&i| !used[i]) else {
        return false;
    };
    used[first] = true;
    let free: Vec<usize> = (first + 1..=q).filter(|&i| !used[i]).collect();
    for others in free.into_iter().combinations(inst.r() - 1) {
        let block: Vec<usize> = std::iter::once(first).chain(others.iter().copied()).collect();
        *tested += 1;
        if !block_sum(inst, &block).iter().all(|s| s.is_positive()) {
            continue;
        }
        for &i in &others {
            used[i] = true;
        }
        blocks.push(block);
        if oracle_step(inst, m, skips, first + 1, used, blocks, tested) {
            return true;
        }
        blocks.pop();
        for &i in &others {
            used[i] = false;
        }
    }
    used[first] = false;
    skips > 0 && oracle_step(inst, m, skips - 1, first + 1, used, blocks, tested)
}

/// Block sums of a positive partition, and the thresholds they are fed to
/// with `q' = ⌊q/r⌋` in place of `q`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Regrouped {
    pub partition: Partition,
    #[serde(with = "rows_as_strings")]
    pub rows: Vec<Vec<Rational>>,
    pub q_prime: usize,
    /// `q' ≥ 2n + r`.
    pub hyperbolic_general_position: bool,
    /// Cohen-Macaulay, `n ≥ 2` and `q' ≥ 2n`.
    pub quasi_hyperbolic_cm: bool,
    /// `n ≥ 2` and `q' ≥ 2n²`.
    pub hyperbolic_2: bool,
    pub thresholds: ThresholdReport,
}

mod rows_as_strings {
    use serde::Serializer;

    use crate::rational::{format_rational, Rational};

    pub fn serialize<S: Serializer>(rows: &[Vec<Rational>], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(rows.iter().map(|row| row.iter().map(format_rational).collect::<Vec<_>>()))
    }
}

pub fn ample_regroup(inst: &Instance, cohen_macaulay: bool) -> Result<Regrouped> {
    let partition = build_partition(inst)?;
    let rows: Vec<Vec<Rational>> = partition.blocks.iter().map(|b| block_sum(inst, b)).collect();
    let (n, r, q_prime) = (inst.n(), inst.r(), partition.blocks.len());
    Ok(Regrouped {
        rows,
        q_prime,
        hyperbolic_general_position: q_prime >= 2 * n + r,
        quasi_hyperbolic_cm: cohen_macaulay && n >= 2 && q_prime >= 2 * n,
        hyperbolic_2: n >= 2 && q_prime >= 2 * n * n,
        thresholds: threshold_check(n, r, inst.q(), cohen_macaulay),
        partition,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;

    fn four_rows() -> Instance {
        Instance::from_integers(1, &[&[1, 0], &[1, 0], &[0, 1], &[1, 1]]).unwrap()
    }

    #[test]
    fn four_row_example() {
        let p = build_partition(&four_rows()).unwrap();
        assert_eq!(p.blocks, vec![vec![1, 3], vec![2, 4]]);
        assert!(verify_partition(&four_rows(), &p).is_pass());
        let g = ample_regroup(&four_rows(), false).unwrap();
        assert_eq!(g.rows, vec![vec![int(1), int(1)], vec![int(2), int(1)]]);
    }

    #[test]
    fn unit_vector_copies_give_transversals() {
        let inst = Instance::from_integers(1, &[&[0, 0, 1], &[1, 0, 0], &[0, 1, 0], &[1, 0, 0], &[0, 0, 1], &[0, 1, 0]])
            .unwrap();
        for reorder in [false, true] {
            let opts = PartitionOptions { reorder_coordinates: reorder, ..Default::default() };
            let p = build_partition_with(&inst, &opts).unwrap();
            assert!(verify_partition(&inst, &p).is_pass());
            let g = ample_regroup(&inst, false).unwrap();
            assert!(g.rows.iter().all(|row| row.iter().all(|v| *v == int(1))));
        }
    }

    #[test]
    fn single_generator_is_singletons() {
        let inst = Instance::from_integers(1, &[&[3], &[1], &[2]]).unwrap();
        let p = build_partition(&inst).unwrap();
        assert_eq!(p.blocks, vec![vec![1], vec![2], vec![3]]);
        assert_eq!(ample_regroup(&inst, false).unwrap().rows, vec![vec![int(3)], vec![int(1)], vec![int(2)]]);
    }

    #[test]
    fn trimming_drops_widest_rows() {
        let inst = Instance::from_integers(1, &[&[1, 1], &[1, 0], &[0, 1], &[1, 1], &[1, 0]]).unwrap();
        assert_eq!(trim_rows(&inst), vec![0, 1, 2, 4]);
        assert_eq!(build_partition(&inst).unwrap().blocks.len(), 2);
    }

    #[test]
    fn verifier_examples() {
        let inst = four_rows();
        let shared = Partition { blocks: vec![vec![1, 3], vec![3, 4]] };
        assert_eq!(verify_partition(&inst, &shared), PartitionCheck::Fail(PartitionFailure::NotDisjoint { index: 3 }));
        let two = Instance::from_integers(1, &[&[1, 0], &[1, 0]]).unwrap();
        assert_eq!(
            verify_partition(&two, &Partition { blocks: vec![vec![1, 2]] }),
            PartitionCheck::Fail(PartitionFailure::ZeroCoordinate { block: 1, coordinate: 2, sum: "0".into() })
        );
        assert!(matches!(
            verify_partition(&inst, &Partition { blocks: vec![vec![1, 3]] }),
            PartitionCheck::Fail(PartitionFailure::BlockCount { expected: 2, found: 1 })
        ));
        assert!(matches!(
            verify_partition(&inst, &Partition { blocks: vec![vec![1, 3], vec![2, 5]] }),
            PartitionCheck::Fail(PartitionFailure::IndexOutOfRange { block: 2, index: 5 })
        ));
    }

    #[test]
    fn oracle_examples() {
        let bad = Instance::from_integers(1, &[&[1, 0], &[1, 0], &[1, 0], &[0, 1]]).unwrap();
        assert!(!oracle_partition(&bad).unwrap().exists);
        assert!(matches!(build_partition(&bad), Err(Error::NoPartition(_))));
        let good = oracle_partition(&four_rows()).unwrap();
        assert!(good.exists);
        assert!(verify_partition(&four_rows(), &good.witness.unwrap()).is_pass());
        let short = Instance::from_integers(1, &[&[1, 1, 1], &[1, 1, 1]]).unwrap();
        let vacuous = oracle_partition(&short).unwrap();
        assert!(vacuous.exists);
        assert_eq!(vacuous.witness.unwrap().blocks, Vec::<Vec<usize>>::new());
        let wide = Instance::from_integers(1, &[&[1, 1, 1, 1]]).unwrap();
        assert!(matches!(oracle_partition(&wide), Err(Error::Guard(_))));
    }

    #[test]
    fn wide_block_without_transversal() {
        // a positive partition exists, but not one built from seeds
        let inst = Instance::from_integers(1, &[&[1, 1, 1], &[1, 0, 0], &[1, 0, 0]]).unwrap();
        assert!(oracle_partition(&inst).unwrap().exists);
        assert!(build_partition(&inst).is_err());
    }

    #[test]
    fn budget() {
        let opts = PartitionOptions { node_budget: 0, ..Default::default() };
        assert!(matches!(build_partition_with(&four_rows(), &opts), Err(Error::NoPartition(_))));
    }
}
