//! Exact-rational lexicographic-minimax weights for effective divisors
//! written in a basis of nef generators, together with the nefness
//! certificates, positive partitions and sharpness families built on them.
//!
//! Every quantity is a [`Rational`]; nothing in the crate touches floating
//! point.

pub mod allocator;
pub mod certificate;
pub mod error;
pub mod generators;
pub mod instance;
pub mod io;
pub mod partition;
pub mod rational;
mod seeded;

pub use allocator::{
    balance, count_bound, counts, in_admissible_set, initial_weights, repair_ratios, satisfies_ratio_bound,
    solve_minimax, BalanceOptions, CountVector, SolveOptions, Solution, Weights,
};
pub use certificate::{
    build_certificate, derive_constants, gamma_diagnostics, threshold_check, verify_certificate, Certificate,
    CertificateCheck, CertificateWitness, ThresholdReport,
};
pub use error::{Error, ParseError, Result};
pub use instance::{
    check_genericity, check_support_condition, perturb, validate_instance, Instance, PerturbedInstance, SupportCheck,
    SupportViolation,
};
pub use rational::Rational;
pub use partition::{
    ample_regroup, build_partition, oracle_partition, verify_partition, Partition, PartitionCheck, PartitionFailure,
};
