//! Independent recomputations shared by the acceptance and property targets.
//! Nothing here calls the library routine it is meant to check.

#![allow(dead_code)]

use cone_minimax::generators::gen_random;
use cone_minimax::rational::{int, Rational};
use cone_minimax::Instance;
use num_traits::Zero;

/// Row-minimizer counts by cross-multiplication, and whether any row tied.
pub fn oracle_counts(inst: &Instance, b: &[Rational]) -> (Vec<usize>, bool) {
    let mut counts = vec![0; inst.r()];
    let mut ties = false;
    for row in inst.rows() {
        let nonzero: Vec<usize> = (0..inst.r()).filter(|&j| !row[j].is_zero()).collect();
        // j minimizes b_j / a_j iff b_j a_l <= b_l a_j for every other l
        let winners: Vec<usize> = nonzero
            .iter()
            .copied()
            .filter(|&j| nonzero.iter().all(|&l| &b[j] * &row[l] <= &b[l] * &row[j]))
            .collect();
        ties |= winners.len() > 1;
        for j in winners {
            counts[j] += 1;
        }
    }
    (counts, ties)
}

/// `⌈q/r − (r−1)/2⌉` by integer arithmetic on `2q − r(r−1)` over `2r`.
pub fn oracle_count_bound(q: usize, r: usize) -> i64 {
    let num = 2 * q as i64 - (r as i64) * (r as i64 - 1);
    let den = 2 * r as i64;
    num.div_euclid(den) + i64::from(num.rem_euclid(den) != 0)
}

/// Rows supported in each proper subset `T` (as a bitmask), by a direct scan.
pub fn proper_subset_counts(inst: &Instance) -> Vec<(u64, usize)> {
    let r = inst.r();
    (0..(1u64 << r) - 1)
        .map(|t| {
            let count = inst
                .rows()
                .iter()
                .filter(|row| (0..r).all(|j| row[j].is_zero() || t & (1 << j) != 0))
                .count();
            (t, count)
        })
        .collect()
}

pub fn passes_support(inst: &Instance) -> bool {
    let m = inst.q() / inst.r();
    proper_subset_counts(inst).iter().all(|&(t, count)| count <= t.count_ones() as usize * m)
}

/// `max/min` over the nonzero entries.
pub fn entry_ratio(inst: &Instance) -> Rational {
    let nonzero: Vec<&Rational> = inst.rows().iter().flatten().filter(|v| !v.is_zero()).collect();
    let max = nonzero.iter().max().map_or(int(1), |v| (*v).clone());
    let min = nonzero.iter().min().map_or(int(1), |v| (*v).clone());
    max / min
}

/// Case `k` of the seeded random corpus: `r` cycles through `1..=max_r`,
/// `q` through `r..=max_q`.
pub fn corpus_instance(k: u64, max_r: usize, max_q: usize, n: usize) -> Instance {
    let r = 1 + (k as usize % max_r);
    let span = max_q - r + 1;
    let q = r + (k as usize / max_r * 7 + k as usize) % span;
    gen_random(n, r, q, 1000 + k, 4, 30).expect("corpus draw")
}
