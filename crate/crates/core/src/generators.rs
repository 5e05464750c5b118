//! Instance families: the tight unit-vector examples, the three-generator
//! pair family, and seeded random matrices for testing.

use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::{check_genericity, check_support_condition, Instance, SupportCheck};
use crate::rational::{int, ratio, Rational};
use crate::seeded::{self, STREAM_GENERATOR};

pub const APPEX_BUDGET: usize = 32;
pub const RANDOM_BUDGET: usize = 256;
/// Pair-family coefficients lie in `[1/APPEX_BOUND, APPEX_BOUND]`.
pub const APPEX_BOUND: u32 = 4;
const MAX_DENOMINATOR: u32 = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Appex,
    Conjaex,
    Conjbex,
    Random,
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "appex" => Ok(Family::Appex),
            "conjaex" => Ok(Family::Conjaex),
            "conjbex" => Ok(Family::Conjbex),
            "random" => Ok(Family::Random),
            other => Err(Error::Generator(format!("unknown family `{other}`"))),
        }
    }
}

/// Parameters for [`generate`]. Fields a family does not use are ignored.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GenSpec {
    pub family: Family,
    pub n: usize,
    /// conjaex and random.
    pub r: usize,
    /// conjbex.
    pub s: usize,
    /// random.
    pub q: usize,
    pub seed: u64,
    /// random: nonzero entries lie in `[1/bound, bound]`.
    pub bound: u32,
    /// random: chance in percent that an entry is zero.
    pub zero_percent: u32,
}

impl GenSpec {
    pub fn new(family: Family, n: usize) -> Self {
        GenSpec { family, n, r: 1, s: 1, q: 1, seed: 0, bound: 4, zero_percent: 30 }
    }
}

pub fn generate(spec: &GenSpec) -> Result<Instance> {
    match spec.family {
        Family::Conjbex => gen_conjbex(spec.n, spec.s),
        Family::Conjaex => gen_conjaex(spec.n, spec.r),
        Family::Appex => gen_appex(spec.n, spec.seed),
        Family::Random => gen_random(spec.n, spec.r, spec.q, spec.seed, spec.bound, spec.zero_percent),
    }
}

fn unit_copies(n: usize, r: usize, copies: usize) -> Result<Instance> {
    let rows = (0..r)
        .flat_map(|j| {
            (0..copies).map(move |_| (0..r).map(|l| int(i64::from(l == j))).collect::<Vec<_>>())
        })
        .collect();
    Instance::new(n, r, rows)
}

/// `2n` copies of each of `e_1, …, e_{s+1}`, grouped by coordinate.
pub fn gen_conjbex(n: usize, s: usize) -> Result<Instance> {
    if n == 0 || s == 0 {
        return Err(Error::Generator(format!("conjbex needs n, s >= 1, got n = {n}, s = {s}")));
    }
    unit_copies(n, s + 1, 2 * n)
}

/// `n − r + 2` copies of each of `e_1, …, e_r`, for `1 ≤ r ≤ n`.
pub fn gen_conjaex(n: usize, r: usize) -> Result<Instance> {
    if r == 0 || r > n {
        return Err(Error::Generator(format!("conjaex needs 1 <= r <= n, got n = {n}, r = {r}")));
    }
    unit_copies(n, r, n - r + 2)
}

/// `n + 2` rows for each coordinate pair of three generators, with the two
/// entries drawn from `[1/4, 4]`; redrawn until generic.
pub fn gen_appex(n: usize, seed: u64) -> Result<Instance> {
    if n == 0 {
        return Err(Error::Generator("appex needs n >= 1".into()));
    }
    let mut rng = seeded::rng(seed, STREAM_GENERATOR);
    for _ in 0..APPEX_BUDGET {
        let mut rows = Vec::with_capacity(3 * (n + 2));
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            for _ in 0..n + 2 {
                let mut row = vec![Rational::from_integer(0.into()); 3];
                row[i] = draw(&mut rng, APPEX_BOUND);
                row[j] = draw(&mut rng, APPEX_BOUND);
                rows.push(row);
            }
        }
        let inst = Instance::new(n, 3, rows)?;
        if check_genericity(&inst).is_pass() && check_support_condition(&inst)?.is_pass() {
            return Ok(inst);
        }
    }
    Err(Error::RetryExhausted { what: "appex draw", budget: APPEX_BUDGET })
}

/// Rejection-samples `q × r` matrices with no zero rows until the support
/// condition holds.
pub fn gen_random(n: usize, r: usize, q: usize, seed: u64, bound: u32, zero_percent: u32) -> Result<Instance> {
    if n == 0 || r == 0 || q == 0 || bound == 0 {
        return Err(Error::Generator(format!(
            "random needs positive n, r, q, bound; got n = {n}, r = {r}, q = {q}, bound = {bound}"
        )));
    }
    if zero_percent >= 100 {
        return Err(Error::Generator(format!("zero_percent must be below 100, got {zero_percent}")));
    }
    let mut rng = seeded::rng(seed, STREAM_GENERATOR);
    let mut last = None;
    for _ in 0..RANDOM_BUDGET {
        let rows = (0..q)
            .map(|_| loop {
                let row: Vec<Rational> = (0..r)
                    .map(|_| {
                        if rng.gen_range(0..100) < zero_percent {
                            int(0)
                        } else {
                            draw(&mut rng, bound)
                        }
                    })
                    .collect();
                if row.iter().any(|v| *v != int(0)) {
                    break row;
                }
            })
            .collect();
        let inst = Instance::new(n, r, rows)?;
        match check_support_condition(&inst)? {
            SupportCheck::Pass => return Ok(inst),
            SupportCheck::Fail(v) => last = Some(v),
        }
    }
    Err(Error::RejectionExhausted { budget: RANDOM_BUDGET, last: last.expect("budget is positive") })
}

/// `p/d` with `d ≤ 4` and `1/bound ≤ p/d ≤ bound`.
fn draw(rng: &mut ChaCha8Rng, bound: u32) -> Rational {
    let d = rng.gen_range(1..=MAX_DENOMINATOR);
    let lo = d.div_ceil(bound);
    let p = rng.gen_range(lo..=d * bound);
    ratio(i64::from(p), i64::from(d))
}
