//! Certificates `(A, c, δ)` in generator coordinates.
//!
//! A certificate is a weight vector `b` (the class `A = Σ b_j E_j`),
//! constants `c_i > 0` and `δ > 0` such that, coordinatewise in the `E`
//! basis,
//!
//! * `b_j − c_i·a_{i,j} ≥ 0` for every `i, j` (so `A − c_i D_i` is nef), and
//! * `Σ_i c_i·a_{i,j} − (n+1+δ)·b_j ≥ 0` for every `j`
//!   (so `Σ c_i D_i − (n+1+δ) A` is nef).
//!
//! Construction solves the allocator on a perturbed copy of the matrix;
//! verification always runs on the caller's unperturbed matrix.

use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::allocator::{solve_perturbed, BalanceOptions, Weights};
use crate::error::{Error, Result};
use crate::instance::{check_support_condition, ensure_valid, perturb, Instance, PerturbedInstance, SupportCheck};
use crate::rational::{format_rational, int, Rational};

/// Number of times `κ` is halved before giving up.
pub const KAPPA_BUDGET: usize = 16;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    #[serde(rename = "b")]
    pub weights: Weights,
    #[serde(with = "crate::rational::serde_str::vec")]
    pub c: Vec<Rational>,
    #[serde(with = "crate::rational::serde_str")]
    pub delta: Rational,
    #[serde(with = "crate::rational::serde_str")]
    pub kappa: Rational,
    pub seed: u64,
    #[serde(skip)]
    pub perturbation: Option<PerturbedInstance>,
    #[serde(skip)]
    pub gammas: Option<GammaDiagnostics>,
}

impl Certificate {
    /// Multiplies `b` and `c` by `t > 0`; both inequality families are
    /// homogeneous of degree one in `(b, c)`.
    pub fn rescaled(&self, t: &Rational) -> Certificate {
        Certificate {
            weights: self.weights.scaled(t),
            c: self.c.iter().map(|c| c * t).collect(),
            ..self.clone()
        }
    }

    pub fn with_delta(&self, delta: Rational) -> Certificate {
        Certificate { delta, ..self.clone() }
    }
}

/// The constants read off a solved instance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Constants {
    pub c: Vec<Rational>,
    /// Exact margin `min_j (Σ_i c_i a_{i,j} − (n+1) b_j) / b_j` on the
    /// unperturbed matrix.
    pub delta_star: Rational,
    /// `δ*/2`.
    pub delta: Rational,
}

/// `c_i = min_{j : a'_{i,j} ≠ 0} b_j / a'_{i,j}` on the perturbed matrix, then
/// the margin `δ*` on the base matrix. Fails when `δ* ≤ 0`.
pub fn derive_constants(pert: &PerturbedInstance, w: &Weights) -> Result<Constants> {
    let perturbed = pert.perturbed();
    let base = pert.base();
    let b = w.values();
    let c: Vec<Rational> = perturbed
        .rows()
        .iter()
        .map(|row| {
            row.iter()
                .zip(b)
                .filter(|(a, _)| !a.is_zero())
                .map(|(a, bj)| bj / a)
                .min()
                .expect("rows are nonzero")
        })
        .collect();
    let n_plus_one = int(base.n() as i64 + 1);
    let delta_star = (0..base.r())
        .map(|j| {
            let total: Rational = base.rows().iter().zip(&c).map(|(row, ci)| ci * &row[j]).sum();
            (total - &n_plus_one * &b[j]) / &b[j]
        })
        .min()
        .expect("r >= 1");
    if !delta_star.is_positive() {
        return Err(Error::MarginNonpositive(format_rational(&delta_star)));
    }
    let delta = &delta_star / int(2);
    Ok(Constants { c, delta_star, delta })
}

/// Which of the four hyperbolicity criteria the counts `(n, r, q)` meet.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ThresholdReport {
    pub n: usize,
    pub r: usize,
    pub q: usize,
    pub cohen_macaulay: bool,
    pub quasi_hyperbolic_a: bool,
    pub hyperbolic_b: bool,
    #[serde(rename = "quasi_hyperbolic_CM")]
    pub quasi_hyperbolic_cm: bool,
    pub hyperbolic_2: bool,
    /// Smallest `q` meeting each criterion (`None` where `n < 2` rules it out).
    pub required_quasi_hyperbolic_a: usize,
    pub required_hyperbolic_b: usize,
    #[serde(rename = "required_quasi_hyperbolic_CM")]
    pub required_quasi_hyperbolic_cm: Option<usize>,
    pub required_hyperbolic_2: Option<usize>,
}

/// `r(n+1)+1` for `r ≤ 2`, `r(n+1) + (r−1)(r−2)/2` for `r ≥ 3`.
pub fn quasi_hyperbolic_threshold(n: usize, r: usize) -> usize {
    if r <= 2 {
        r * (n + 1) + 1
    } else {
        r * (n + 1) + (r - 1) * (r - 2) / 2
    }
}

pub fn threshold_check(n: usize, r: usize, q: usize, cohen_macaulay: bool) -> ThresholdReport {
    let required_a = quasi_hyperbolic_threshold(n, r);
    let required_b = 2 * n * r + r * r;
    let required_cm = (n >= 2).then_some(2 * n * r);
    let required_2 = (n >= 2).then_some(2 * n * n * r);
    ThresholdReport {
        n,
        r,
        q,
        cohen_macaulay,
        quasi_hyperbolic_a: q >= required_a,
        hyperbolic_b: q >= required_b,
        quasi_hyperbolic_cm: cohen_macaulay && required_cm.is_some_and(|t| q >= t),
        hyperbolic_2: required_2.is_some_and(|t| q >= t),
        required_quasi_hyperbolic_a: required_a,
        required_hyperbolic_b: required_b,
        required_quasi_hyperbolic_cm: required_cm,
        required_hyperbolic_2: required_2,
    }
}

/// Perturb, solve, derive constants and verify; on a nonpositive margin `κ`
/// is halved and the pipeline rerun, up to [`KAPPA_BUDGET`] times.
pub fn build_certificate(inst: &Instance, seed: u64, kappa0: &Rational) -> Result<Certificate> {
    build_certificate_with(inst, seed, kappa0, &BalanceOptions::default())
}

pub fn build_certificate_with(
    inst: &Instance,
    seed: u64,
    kappa0: &Rational,
    opts: &BalanceOptions,
) -> Result<Certificate> {
    ensure_valid(inst)?;
    if let SupportCheck::Fail(v) = check_support_condition(inst)? {
        return Err(Error::SupportCondition(v));
    }
    let (n, r, q) = (inst.n(), inst.r(), inst.q());
    let required = quasi_hyperbolic_threshold(n, r);
    if q < required {
        return Err(Error::Threshold { n, r, q, required });
    }
    let mut kappa = kappa0.clone();
    let mut last_margin = String::new();
    for _ in 0..KAPPA_BUDGET {
        let pert = perturb(inst, &kappa, seed)?;
        let solution = solve_perturbed(&pert, seed, opts)?;
        match derive_constants(&pert, &solution.weights) {
            Ok(constants) => {
                let gammas = gamma_diagnostics(&pert, &solution.weights);
                let cert = Certificate {
                    weights: solution.weights,
                    c: constants.c,
                    delta: constants.delta,
                    kappa,
                    seed,
                    perturbation: Some(pert),
                    gammas: Some(gammas),
                };
                if let CertificateCheck::Fail(w) = verify_certificate(inst, &cert) {
                    // derive_constants guarantees every inequality; reaching
                    // this is a bug rather than bad input
                    panic!("constructed certificate failed verification: {w}");
                }
                return Ok(cert);
            }
            Err(Error::MarginNonpositive(m)) => {
                last_margin = m;
                kappa /= int(2);
            }
            Err(e) => return Err(e),
        }
    }
    Err(Error::RetryExhausted {
        what: if last_margin.is_empty() { "certificate" } else { "certificate (margin stayed nonpositive)" },
        budget: KAPPA_BUDGET,
    })
}

/// The first inequality a certificate violates. Indices are 1-based.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "inequality", rename_all = "snake_case")]
pub enum CertificateWitness {
    Shape { detail: String },
    WeightNotPositive { j: usize, value: String },
    ConstantNotPositive { i: usize, value: String },
    DeltaNotPositive { value: String },
    /// `b_j − c_i a_{i,j} < 0`.
    Dominance { i: usize, j: usize, value: String },
    /// `Σ_i c_i a_{i,j} − (n+1+δ) b_j < 0`.
    Margin { j: usize, value: String },
}

impl CertificateWitness {
    /// `"i"`, `"ii"` or `"iii"`; `"shape"` for a malformed certificate.
    pub fn family(&self) -> &'static str {
        match self {
            CertificateWitness::Shape { .. } => "shape",
            CertificateWitness::WeightNotPositive { .. }
            | CertificateWitness::ConstantNotPositive { .. }
            | CertificateWitness::DeltaNotPositive { .. } => "i",
            CertificateWitness::Dominance { .. } => "ii",
            CertificateWitness::Margin { .. } => "iii",
        }
    }
}

impl fmt::Display for CertificateWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CertificateWitness::Shape { detail } => write!(f, "shape: {detail}"),
            CertificateWitness::WeightNotPositive { j, value } => write!(f, "(i) b_{j} = {value} <= 0"),
            CertificateWitness::ConstantNotPositive { i, value } => write!(f, "(i) c_{i} = {value} <= 0"),
            CertificateWitness::DeltaNotPositive { value } => write!(f, "(i) delta = {value} <= 0"),
            CertificateWitness::Dominance { i, j, value } => {
                write!(f, "(ii) b_{j} - c_{i} a_{{{i},{j}}} = {value} < 0")
            }
            CertificateWitness::Margin { j, value } => {
                write!(f, "(iii) sum_i c_i a_{{i,{j}}} - (n+1+delta) b_{j} = {value} < 0")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CertificateCheck {
    Pass,
    Fail(CertificateWitness),
}

impl CertificateCheck {
    pub fn is_pass(&self) -> bool {
        matches!(self, CertificateCheck::Pass)
    }
}

/// Exact check of both inequality families on `inst`, with `n = inst.n()`.
/// Independent of how the certificate was built.
pub fn verify_certificate(inst: &Instance, cert: &Certificate) -> CertificateCheck {
    use CertificateCheck::Fail;
    let b = cert.weights.values();
    if b.len() != inst.r() || cert.c.len() != inst.q() {
        return Fail(CertificateWitness::Shape {
            detail: format!(
                "certificate has {} weights and {} constants, instance has r = {}, q = {}",
                b.len(),
                cert.c.len(),
                inst.r(),
                inst.q()
            ),
        });
    }
    if let Some((j, v)) = b.iter().enumerate().find(|(_, v)| !v.is_positive()) {
        return Fail(CertificateWitness::WeightNotPositive { j: j + 1, value: format_rational(v) });
    }
    if let Some((i, v)) = cert.c.iter().enumerate().find(|(_, v)| !v.is_positive()) {
        return Fail(CertificateWitness::ConstantNotPositive { i: i + 1, value: format_rational(v) });
    }
    if !cert.delta.is_positive() {
        return Fail(CertificateWitness::DeltaNotPositive { value: format_rational(&cert.delta) });
    }
    for (i, (row, ci)) in inst.rows().iter().zip(&cert.c).enumerate() {
        for (j, (a, bj)) in row.iter().zip(b).enumerate() {
            let slack = bj - ci * a;
            if slack.is_negative() {
                return Fail(CertificateWitness::Dominance { i: i + 1, j: j + 1, value: format_rational(&slack) });
            }
        }
    }
    let factor = int(inst.n() as i64 + 1) + &cert.delta;
    for (j, bj) in b.iter().enumerate() {
        let total: Rational = inst.rows().iter().zip(&cert.c).map(|(row, ci)| ci * &row[j]).sum();
        let slack = total - &factor * bj;
        if slack.is_negative() {
            return Fail(CertificateWitness::Margin { j: j + 1, value: format_rational(&slack) });
        }
    }
    CertificateCheck::Pass
}

/// Entry and weight bounds `γ_1 < a' < γ_2`, `γ_3 < b < γ_4` (extremes
/// halved or doubled to make the inequalities strict) and the a-priori
/// admissible `δ` bound `γ_1γ_3 / (2γ_2γ_4)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GammaDiagnostics {
    #[serde(with = "crate::rational::serde_str")]
    pub gamma1: Rational,
    #[serde(with = "crate::rational::serde_str")]
    pub gamma2: Rational,
    #[serde(with = "crate::rational::serde_str")]
    pub gamma3: Rational,
    #[serde(with = "crate::rational::serde_str")]
    pub gamma4: Rational,
    #[serde(with = "crate::rational::serde_str")]
    pub delta_bound: Rational,
}

pub fn gamma_diagnostics(pert: &PerturbedInstance, w: &Weights) -> GammaDiagnostics {
    let two = int(2);
    let (lo, hi) = pert
        .perturbed()
        .nonzero_extremes()
        .unwrap_or((Rational::one(), Rational::one()));
    let b = w.values();
    let gamma1 = lo / &two;
    let gamma2 = hi * &two;
    let gamma3 = b.iter().min().expect("non-empty").clone() / &two;
    let gamma4 = b.iter().max().expect("non-empty").clone() * &two;
    let delta_bound = (&gamma1 * &gamma3) / (&two * &gamma2 * &gamma4);
    GammaDiagnostics { gamma1, gamma2, gamma3, gamma4, delta_bound }
}
