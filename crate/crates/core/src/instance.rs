//! Divisor instances in generator coordinates and the combinatorial
//! hypotheses checked on them.
//!
//! Row `i` of the coefficient matrix is the vector `P_i = (a_{i,1}, …, a_{i,r})`
//! of a divisor `D_i ≡ Σ_j a_{i,j} E_j`. Geometry (nefness of the `E_j`,
//! general position of the `D_i`) is trusted input and never checked here.

use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rational::{format_rational, Rational};
use crate::seeded::{self, STREAM_PERTURB};

/// Largest `r` accepted by [`check_support_condition`] unless a different
/// cap is passed to [`check_support_condition_capped`].
pub const DEFAULT_MAX_GENERATORS: usize = 24;

/// Retry budget for the seeded perturbation.
pub const PERTURB_BUDGET: usize = 32;

/// Dimension `n` plus a `q × r` non-negative rational matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    n: usize,
    r: usize,
    rows: Vec<Vec<Rational>>,
}

impl Instance {
    /// Builds an instance, checking only the matrix shape. Use
    /// [`validate_instance`] for the content checks.
    pub fn new(n: usize, r: usize, rows: Vec<Vec<Rational>>) -> Result<Self> {
        if let Some((i, row)) = rows.iter().enumerate().find(|(_, row)| row.len() != r) {
            return Err(Error::InvalidInstance(format!(
                "row {} has {} entries, expected r = {r}",
                i + 1,
                row.len()
            )));
        }
        Ok(Instance { n, r, rows })
    }

    /// Convenience constructor from integer pairs `(num, den)`.
    pub fn from_fractions(n: usize, rows: &[&[(i64, i64)]]) -> Result<Self> {
        let r = rows.first().map_or(0, |row| row.len());
        let rows = rows
            .iter()
            .map(|row| row.iter().map(|&(p, q)| crate::rational::ratio(p, q)).collect())
            .collect();
        Instance::new(n, r, rows)
    }

    /// Convenience constructor from integer entries.
    pub fn from_integers(n: usize, rows: &[&[i64]]) -> Result<Self> {
        let r = rows.first().map_or(0, |row| row.len());
        let rows = rows
            .iter()
            .map(|row| row.iter().map(|&v| crate::rational::int(v)).collect())
            .collect();
        Instance::new(n, r, rows)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn q(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<Rational>] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &[Rational] {
        &self.rows[i]
    }

    /// `⌊q/r⌋`.
    pub fn blocks(&self) -> usize {
        self.q().checked_div(self.r).unwrap_or(0)
    }

    pub fn with_n(mut self, n: usize) -> Self {
        self.n = n;
        self
    }

    /// Same data with a subset of rows (0-based indices, in the given order).
    pub fn select_rows(&self, indices: &[usize]) -> Instance {
        Instance {
            n: self.n,
            r: self.r,
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }

    /// Bit `j` is set iff `a_{i,j} != 0`.
    pub fn support_mask(&self, i: usize) -> u64 {
        support_mask(&self.rows[i])
    }

    /// Smallest and largest nonzero entries, if any.
    pub fn nonzero_extremes(&self) -> Option<(Rational, Rational)> {
        let mut nonzero = self.rows.iter().flatten().filter(|v| !v.is_zero());
        let first = nonzero.next()?.clone();
        Some(nonzero.fold((first.clone(), first), |(lo, hi), v| {
            (if *v < lo { v.clone() } else { lo }, if *v > hi { v.clone() } else { hi })
        }))
    }

    /// `M = max a_{i,j} / a_{i',j'}` over nonzero entries (1 for an empty matrix).
    pub fn max_entry_ratio(&self) -> Rational {
        match self.nonzero_extremes() {
            Some((lo, hi)) => hi / lo,
            None => Rational::one(),
        }
    }
}

pub(crate) fn support_mask(row: &[Rational]) -> u64 {
    row.iter()
        .enumerate()
        .filter(|(_, v)| !v.is_zero())
        .fold(0u64, |mask, (j, _)| mask | (1 << j))
}

/// One problem found by [`validate_instance`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    ZeroDimension,
    NoGenerators,
    NoRows,
    ZeroRow { row: usize },
    NegativeEntry { row: usize, col: usize, value: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::ZeroDimension => write!(f, "n = 0"),
            Violation::NoGenerators => write!(f, "r = 0"),
            Violation::NoRows => write!(f, "q = 0"),
            Violation::ZeroRow { row } => write!(f, "row {row} is zero"),
            Violation::NegativeEntry { row, col, value } => {
                write!(f, "negative entry {value} at ({row}, {col})")
            }
        }
    }
}

/// Lists every violated data-model invariant (1-based positions). An empty
/// report means the instance is valid.
pub fn validate_instance(inst: &Instance) -> Vec<Violation> {
    let mut report = Vec::new();
    if inst.n == 0 {
        report.push(Violation::ZeroDimension);
    }
    if inst.r == 0 {
        report.push(Violation::NoGenerators);
    }
    if inst.rows.is_empty() {
        report.push(Violation::NoRows);
    }
    for (i, row) in inst.rows.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            if v.is_negative() {
                report.push(Violation::NegativeEntry {
                    row: i + 1,
                    col: j + 1,
                    value: format_rational(v),
                });
            }
        }
        if row.iter().all(Zero::is_zero) {
            report.push(Violation::ZeroRow { row: i + 1 });
        }
    }
    report
}

pub(crate) fn ensure_valid(inst: &Instance) -> Result<()> {
    let report = validate_instance(inst);
    if report.is_empty() {
        Ok(())
    } else {
        let msgs: Vec<String> = report.iter().map(ToString::to_string).collect();
        Err(Error::InvalidInstance(msgs.join("; ")))
    }
}

/// A proper subset `T` supporting too many rows.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SupportViolation {
    /// 1-based generator indices of `T` (empty for `T = ∅`).
    pub subset: Vec<usize>,
    pub count: usize,
    pub allowed: usize,
}

impl fmt::Display for SupportViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = self.subset.iter().map(|j| format!("e{j}")).collect();
        write!(
            f,
            "{} rows supported on {{{}}}, at most {} allowed",
            self.count,
            names.join(","),
            self.allowed
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SupportCheck {
    Pass,
    Fail(SupportViolation),
}

impl SupportCheck {
    pub fn is_pass(&self) -> bool {
        matches!(self, SupportCheck::Pass)
    }
}

/// For every proper subset `T` of the generators (including `∅`), at most
/// `#T·⌊q/r⌋` rows may be supported on `T`. On failure the violating `T`
/// that comes first in lexicographic order of sorted index lists is reported.
///
/// Cost is `O(2^r · r)`; `r` is capped at [`DEFAULT_MAX_GENERATORS`].
pub fn check_support_condition(inst: &Instance) -> Result<SupportCheck> {
    check_support_condition_capped(inst, DEFAULT_MAX_GENERATORS)
}

pub fn check_support_condition_capped(inst: &Instance, max_r: usize) -> Result<SupportCheck> {
    let r = inst.r;
    if r > max_r || r >= 63 {
        return Err(Error::TooManyGenerators { r, max: max_r.min(62) });
    }
    let full = (1u64 << r) - 1;
    // supported[mask] = #rows whose support is contained in mask
    let mut supported = vec![0usize; 1 << r];
    for i in 0..inst.q() {
        supported[inst.support_mask(i) as usize] += 1;
    }
    for bit in 0..r {
        for mask in 0..(1usize << r) {
            if mask & (1 << bit) != 0 {
                supported[mask] += supported[mask ^ (1 << bit)];
            }
        }
    }
    let per_generator = inst.blocks();
    // Preorder walk visits subsets in lexicographic order of their index lists.
    fn walk(
        mask: u64,
        start: usize,
        r: usize,
        full: u64,
        per_generator: usize,
        supported: &[usize],
    ) -> Option<u64> {
        if mask != full {
            let allowed = mask.count_ones() as usize * per_generator;
            if supported[mask as usize] > allowed {
                return Some(mask);
            }
        }
        (start..r).find_map(|j| walk(mask | (1 << j), j + 1, r, full, per_generator, supported))
    }
    Ok(match walk(0, 0, r, full, per_generator, &supported) {
        None => SupportCheck::Pass,
        Some(mask) => SupportCheck::Fail(SupportViolation {
            subset: (0..r).filter(|j| mask & (1 << j) != 0).map(|j| j + 1).collect(),
            count: supported[mask as usize],
            allowed: mask.count_ones() as usize * per_generator,
        }),
    })
}

/// Witness `(i, i', j, j')`, 1-based with `i < i'` and `j < j'`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct GenericityWitness {
    pub rows: (usize, usize),
    pub cols: (usize, usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GenericityCheck {
    Pass,
    Fail(GenericityWitness),
}

impl GenericityCheck {
    pub fn is_pass(&self) -> bool {
        matches!(self, GenericityCheck::Pass)
    }
}

/// Every 2×2 minor `a_{i,j}a_{i',j'} − a_{i,j'}a_{i',j}` must be nonzero
/// unless both of its products vanish.
pub fn check_genericity(inst: &Instance) -> GenericityCheck {
    let rows = &inst.rows;
    for i in 0..rows.len() {
        for i2 in i + 1..rows.len() {
            for j in 0..inst.r {
                for j2 in j + 1..inst.r {
                    let main = &rows[i][j] * &rows[i2][j2];
                    let cross = &rows[i][j2] * &rows[i2][j];
                    if main == cross && !(main.is_zero() && cross.is_zero()) {
                        return GenericityCheck::Fail(GenericityWitness {
                            rows: (i + 1, i2 + 1),
                            cols: (j + 1, j2 + 1),
                        });
                    }
                }
            }
        }
    }
    GenericityCheck::Pass
}

/// An instance together with the small multiplicative perturbation that
/// makes it generic: `a'_{i,j} = a_{i,j} + α_{i,j}` with
/// `α_{i,j} = κ·θ_{i,j}·a_{i,j}` and `0 < θ_{i,j} ≤ 1/2`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PerturbedInstance {
    base: Instance,
    kappa: Rational,
    seed: u64,
    alphas: Vec<Vec<Rational>>,
    perturbed: Instance,
}

impl PerturbedInstance {
    /// The zero perturbation.
    pub fn identity(base: &Instance, kappa: Rational, seed: u64) -> Self {
        let alphas = vec![vec![Rational::zero(); base.r]; base.q()];
        PerturbedInstance {
            base: base.clone(),
            kappa,
            seed,
            alphas,
            perturbed: base.clone(),
        }
    }

    pub fn base(&self) -> &Instance {
        &self.base
    }

    pub fn kappa(&self) -> &Rational {
        &self.kappa
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// `α_{i,j}`; row `i` is the coordinate vector of `B_i(κ)`.
    pub fn alphas(&self) -> &[Vec<Rational>] {
        &self.alphas
    }

    pub fn perturbed(&self) -> &Instance {
        &self.perturbed
    }

    pub fn is_identity(&self) -> bool {
        self.alphas.iter().flatten().all(Zero::is_zero)
    }
}

/// Perturbs `inst` so that [`check_genericity`] passes while keeping the zero
/// pattern. Already generic instances get the zero perturbation.
///
/// The `θ_{i,j}` are reciprocals of distinct primes in a seed-dependent
/// order; a draw that still fails genericity is replaced, up to
/// [`PERTURB_BUDGET`] times.
pub fn perturb(inst: &Instance, kappa: &Rational, seed: u64) -> Result<PerturbedInstance> {
    ensure_valid(inst)?;
    if !kappa.is_positive() || *kappa > Rational::one() {
        return Err(Error::InvalidParameter(format!(
            "kappa must lie in (0, 1], got {}",
            format_rational(kappa)
        )));
    }
    if check_genericity(inst).is_pass() {
        return Ok(PerturbedInstance::identity(inst, kappa.clone(), seed));
    }
    let (q, r) = (inst.q(), inst.r);
    let mut rng = seeded::rng(seed, STREAM_PERTURB);
    for _ in 0..PERTURB_BUDGET {
        let primes = seeded::shuffled_primes(&mut rng, q * r);
        let alphas: Vec<Vec<Rational>> = (0..q)
            .map(|i| {
                (0..r)
                    .map(|j| {
                        let theta = Rational::new(1.into(), primes[i * r + j].into());
                        kappa * theta * &inst.rows[i][j]
                    })
                    .collect()
            })
            .collect();
        let rows = inst
            .rows
            .iter()
            .zip(&alphas)
            .map(|(row, alpha)| row.iter().zip(alpha).map(|(a, da)| a + da).collect())
            .collect();
        let perturbed = Instance { n: inst.n, r, rows };
        if check_genericity(&perturbed).is_pass() {
            return Ok(PerturbedInstance {
                base: inst.clone(),
                kappa: kappa.clone(),
                seed,
                alphas,
                perturbed,
            });
        }
    }
    Err(Error::RetryExhausted {
        what: "perturbation",
        budget: PERTURB_BUDGET,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    fn five_rows() -> Instance {
        Instance::from_integers(1, &[&[1, 0], &[0, 1], &[1, 1], &[2, 1], &[1, 2]]).unwrap()
    }

    #[test]
    fn validation_reports_each_problem() {
        let ok = Instance::from_integers(1, &[&[1, 0], &[0, 1]]).unwrap();
        assert!(validate_instance(&ok).is_empty());

        let zero = Instance::from_integers(1, &[&[1, 0], &[0, 0]]).unwrap();
        assert_eq!(validate_instance(&zero), vec![Violation::ZeroRow { row: 2 }]);
        assert_eq!(Violation::ZeroRow { row: 2 }.to_string(), "row 2 is zero");

        let neg = Instance::from_fractions(1, &[&[(1, 1), (-1, 2)]]).unwrap();
        assert_eq!(
            validate_instance(&neg),
            vec![Violation::NegativeEntry { row: 1, col: 2, value: "-1/2".into() }]
        );

        let empty = Instance::new(0, 0, vec![]).unwrap();
        assert_eq!(
            validate_instance(&empty),
            vec![Violation::ZeroDimension, Violation::NoGenerators, Violation::NoRows]
        );
    }

    #[test]
    fn ragged_rows_are_rejected() {
        assert!(Instance::new(1, 2, vec![vec![int(1)]]).is_err());
    }

    // Independent check: literal enumeration of proper subsets, no zeta transform.
    fn support_brute(inst: &Instance) -> Vec<(Vec<usize>, usize, usize)> {
        let r = inst.r();
        let mut out = Vec::new();
        for mask in 0u64..(1 << r) - 1 {
            let count = (0..inst.q())
                .filter(|&i| (0..r).all(|j| mask & (1 << j) != 0 || inst.row(i)[j].is_zero()))
                .count();
            let allowed = mask.count_ones() as usize * (inst.q() / r);
            if count > allowed {
                let subset: Vec<usize> =
                    (0..r).filter(|j| mask & (1 << j) != 0).map(|j| j + 1).collect();
                out.push((subset, count, allowed));
            }
        }
        out.sort();
        out
    }

    #[test]
    fn support_condition_examples() {
        assert_eq!(check_support_condition(&five_rows()).unwrap(), SupportCheck::Pass);
        assert!(support_brute(&five_rows()).is_empty());

        let crowded = Instance::from_integers(1, &[&[1, 0], &[1, 0], &[1, 0], &[0, 1]]).unwrap();
        assert_eq!(
            check_support_condition(&crowded).unwrap(),
            SupportCheck::Fail(SupportViolation { subset: vec![1], count: 3, allowed: 2 })
        );
        assert_eq!(support_brute(&crowded)[0], (vec![1], 3, 2));

        let zero = Instance::from_integers(1, &[&[1, 1], &[0, 0]]).unwrap();
        match check_support_condition(&zero).unwrap() {
            SupportCheck::Fail(v) => {
                assert!(v.subset.is_empty());
                assert!(v.count >= 1);
                assert_eq!(v.allowed, 0);
            }
            SupportCheck::Pass => panic!("zero row must fail at the empty set"),
        }
    }

    #[test]
    fn support_condition_matches_enumeration_on_small_cases() {
        // every 0/1 pattern with r = 3 and q = 4
        let patterns: Vec<[i64; 3]> = (1..8)
            .map(|m| [(m & 1 != 0) as i64, (m & 2 != 0) as i64, (m & 4 != 0) as i64])
            .collect();
        for a in &patterns {
            for b in &patterns {
                for c in &patterns {
                    for d in &patterns {
                        let inst = Instance::from_integers(1, &[a, b, c, d]).unwrap();
                        let brute = support_brute(&inst);
                        match check_support_condition(&inst).unwrap() {
                            SupportCheck::Pass => assert!(brute.is_empty()),
                            SupportCheck::Fail(v) => {
                                assert!(brute.iter().any(|(s, _, _)| *s == v.subset));
                                assert_eq!(v.subset, brute.iter().map(|b| b.0.clone()).min().unwrap());
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn support_cap_is_enforced() {
        let inst = Instance::new(1, 5, vec![vec![int(1); 5]]).unwrap();
        assert!(matches!(
            check_support_condition_capped(&inst, 4),
            Err(Error::TooManyGenerators { r: 5, max: 4 })
        ));
    }

    #[test]
    fn genericity_examples() {
        let unit = Instance::from_integers(1, &[&[1, 0], &[0, 1]]).unwrap();
        assert!(check_genericity(&unit).is_pass());

        let prop = Instance::from_integers(1, &[&[1, 1], &[2, 2]]).unwrap();
        assert_eq!(
            check_genericity(&prop),
            GenericityCheck::Fail(GenericityWitness { rows: (1, 2), cols: (1, 2) })
        );

        let three = Instance::from_integers(1, &[&[1, 1], &[2, 1], &[1, 2]]).unwrap();
        assert!(check_genericity(&three).is_pass());
    }

    #[test]
    fn perturbation_of_generic_instance_is_identity() {
        let p = perturb(&five_rows(), &ratio(1, 100), 0).unwrap();
        assert!(p.is_identity());
        assert_eq!(p.perturbed(), &five_rows());
    }

    #[test]
    fn perturbation_restores_genericity_within_bounds() {
        let prop = Instance::from_integers(1, &[&[1, 1], &[2, 2]]).unwrap();
        let kappa = ratio(1, 10);
        for seed in 0..20 {
            let p = perturb(&prop, &kappa, seed).unwrap();
            assert!(check_genericity(p.perturbed()).is_pass());
            for (base, new) in prop.rows().iter().flatten().zip(p.perturbed().rows().iter().flatten()) {
                assert!(new >= base);
                assert!(*new <= base * (Rational::one() + &kappa));
            }
            assert_eq!(p, perturb(&prop, &kappa, seed).unwrap());
        }
    }

    #[test]
    fn perturbation_keeps_zeros() {
        let inst = Instance::from_integers(1, &[&[1, 0], &[2, 0], &[0, 3], &[1, 1], &[2, 2]]).unwrap();
        let p = perturb(&inst, &ratio(1, 2), 3).unwrap();
        for (base, new) in inst.rows().iter().flatten().zip(p.perturbed().rows().iter().flatten()) {
            assert_eq!(base.is_zero(), new.is_zero());
        }
        assert!(p.alphas()[0][1].is_zero());
        assert!(p.alphas()[0][0].is_positive());
    }

    #[test]
    fn perturbation_rejects_bad_kappa() {
        assert!(perturb(&five_rows(), &int(0), 0).is_err());
        assert!(perturb(&five_rows(), &int(2), 0).is_err());
    }

    #[test]
    fn entry_ratio_extremes() {
        assert_eq!(five_rows().max_entry_ratio(), int(2));
        assert_eq!(five_rows().nonzero_extremes(), Some((int(1), int(2))));
    }
}
