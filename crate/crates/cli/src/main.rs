//! `cone-minimax`: JSON in, JSON out.
//!
//! Exit status 0 means success or pass, 1 a checked failure (hypothesis or
//! verification), 2 a usage, I/O or parse error. Instance arguments default
//! to stdin, so commands compose in pipes.

use std::fs;
use std::io::{self, Read};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use cone_minimax::allocator::{count_bound, oracle_best_counts, BalanceOptions, SolveOptions};
use cone_minimax::certificate::{build_certificate_with, threshold_check, verify_certificate, CertificateCheck};
use cone_minimax::generators::{generate, Family, GenSpec};
use cone_minimax::instance::{check_genericity, check_support_condition, validate_instance, GenericityCheck, SupportCheck};
use cone_minimax::io::{certificate_to_string, instance_to_string, parse_certificate, parse_instance, partition_to_string};
use cone_minimax::partition::{ample_regroup, build_partition_with, oracle_partition, PartitionOptions};
use cone_minimax::rational::{format_rational, parse_rational, Rational};
use cone_minimax::{solve_minimax, Error, Instance, ParseError};

const MAX_ITERS_VAR: &str = "CONE_MINIMAX_MAX_ITERS";

#[derive(Parser)]
#[command(name = "cone-minimax", version, about = "Exact lexicographic-minimax weights, certificates and positive partitions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Input {
    /// Instance JSON file; `-` or omitted reads stdin.
    instance: Option<String>,
    /// Dimension n; must match the file's `n` when both are given.
    #[arg(long)]
    n: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Validate an instance and report the support condition and thresholds.
    Check {
        #[command(flatten)]
        input: Input,
        /// Treat the ambient variety as Cohen-Macaulay for the threshold report.
        #[arg(long)]
        cm: bool,
    },
    /// Compute balanced weights and their counts.
    Solve {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value = "1/100")]
        kappa: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Build a certificate (b, c, delta).
    Certify {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value = "1/100")]
        kappa: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Check a certificate against an instance.
    Verify {
        instance: String,
        certificate: String,
        #[arg(long)]
        n: Option<usize>,
    },
    /// Find a positive partition of the rows.
    Partition {
        #[command(flatten)]
        input: Input,
        /// Peel the most covered coordinate first.
        #[arg(long)]
        reorder: bool,
        /// Print block sums and the thresholds they meet instead of the blocks.
        #[arg(long)]
        regroup: bool,
        #[arg(long)]
        cm: bool,
    },
    /// Generate an instance.
    Gen {
        /// appex, conjaex, conjbex or random.
        #[arg(long)]
        family: String,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        r: usize,
        #[arg(long, default_value_t = 1)]
        s: usize,
        #[arg(long, default_value_t = 1)]
        q: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 4)]
        bound: u32,
        #[arg(long, default_value_t = 30)]
        zero_percent: u32,
    },
    /// Exhaustive oracles for small instances.
    Oracle {
        #[command(subcommand)]
        which: OracleCommand,
    },
}

#[derive(Subcommand)]
enum OracleCommand {
    /// Best sorted count vector over a rational grid of weights.
    Minimax {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value_t = 6)]
        denominator: u32,
        #[arg(long, default_value_t = 3)]
        multiple: u32,
    },
    /// Whether any positive partition exists.
    Partition {
        #[command(flatten)]
        input: Input,
    },
}

/// Everything that ends a command early.
enum Failure {
    /// Exit 2.
    Usage(String),
    /// Exit 1, with a JSON body on stdout.
    Checked(Value),
}

impl From<ParseError> for Failure {
    fn from(e: ParseError) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let usage = matches!(
            e,
            Error::InvalidParameter(_) | Error::Guard(_) | Error::Generator(_) | Error::TooManyGenerators { .. }
        );
        if usage {
            Failure::Usage(e.to_string())
        } else {
            Failure::Checked(json!({ "status": "fail", "error": error_kind(&e), "message": e.to_string() }))
        }
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::InvalidInstance(_) => "invalid_instance",
        Error::InvalidParameter(_) => "invalid_parameter",
        Error::SupportCondition(_) => "support_condition",
        Error::TooManyGenerators { .. } => "too_many_generators",
        Error::NotGeneric(..) => "not_generic",
        Error::RetryExhausted { .. } => "retry_exhausted",
        Error::NotAdmissible(_) => "not_admissible",
        Error::Stuck { .. } => "stuck",
        Error::IterationCap { .. } => "iteration_cap",
        Error::MarginNonpositive(_) => "margin_nonpositive",
        Error::Threshold { .. } => "threshold",
        Error::NoPartition(_) => "no_partition",
        Error::Guard(_) => "guard",
        Error::Generator(_) => "generator",
        Error::RejectionExhausted { .. } => "rejection_exhausted",
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(out) => {
            println!("{out}");
            ExitCode::SUCCESS
        }
        Err(Failure::Checked(body)) => {
            if let Some(msg) = body.get("message").and_then(Value::as_str) {
                eprintln!("cone-minimax: {msg}");
            }
            println!("{body}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("cone-minimax: {msg}");
            ExitCode::from(2)
        }
    }
}

fn read_text(path: Option<&str>) -> Result<String, Failure> {
    match path {
        None | Some("-") => {
            let mut text = String::new();
            io::stdin()
                .read_to_string(&mut text)
                .map_err(|e| Failure::Usage(format!("reading stdin: {e}")))?;
            Ok(text)
        }
        Some(p) => fs::read_to_string(p).map_err(|e| Failure::Usage(format!("reading {p}: {e}"))),
    }
}

/// Commands that never look at `n` fall back to `n = 1` when it is absent.
fn read_instance(input: &Input, needs_n: bool) -> Result<Instance, Failure> {
    let text = read_text(input.instance.as_deref())?;
    match parse_instance(&text, input.n) {
        Err(ParseError::MissingDimension) if !needs_n => Ok(parse_instance(&text, Some(1))?),
        other => Ok(other?),
    }
}

fn parse_kappa(text: &str) -> Result<Rational, Failure> {
    parse_rational(text).map_err(|e| Failure::Usage(format!("--kappa: {e}")))
}

fn balance_options() -> Result<BalanceOptions, Failure> {
    match std::env::var(MAX_ITERS_VAR) {
        Ok(v) => v
            .trim()
            .parse()
            .map(|cap| BalanceOptions { max_moves: Some(cap) })
            .map_err(|_| Failure::Usage(format!("{MAX_ITERS_VAR} must be a non-negative integer, got `{v}`"))),
        Err(_) => Ok(BalanceOptions::default()),
    }
}

fn strings(values: &[Rational]) -> Vec<String> {
    values.iter().map(format_rational).collect()
}

fn run(command: Command) -> Result<String, Failure> {
    match command {
        Command::Check { input, cm } => check(&read_instance(&input, true)?, cm),
        Command::Solve { input, kappa, seed } => {
            let inst = read_instance(&input, false)?;
            let opts = SolveOptions { kappa: parse_kappa(&kappa)?, balance: balance_options()? };
            let sol = solve_minimax(&inst, seed, &opts)?;
            Ok(json!({
                "weights": strings(sol.weights.values()),
                "counts": sol.counts.counts,
                "count_bound": count_bound(inst.q(), inst.r()),
                "unperturbed_counts": sol.unperturbed_counts.counts,
                "unperturbed_ties": sol.unperturbed_counts.had_ties,
                "perturbed": !sol.perturbation.is_identity(),
                "kappa": format_rational(sol.perturbation.kappa()),
                "moves": sol.moves,
                "seed": seed,
            })
            .to_string())
        }
        Command::Certify { input, kappa, seed } => {
            let inst = read_instance(&input, true)?;
            let cert = build_certificate_with(&inst, seed, &parse_kappa(&kappa)?, &balance_options()?)?;
            if let Some(g) = &cert.gammas {
                eprintln!(
                    "gamma1 = {}, gamma2 = {}, gamma3 = {}, gamma4 = {}, a-priori delta bound = {}",
                    format_rational(&g.gamma1),
                    format_rational(&g.gamma2),
                    format_rational(&g.gamma3),
                    format_rational(&g.gamma4),
                    format_rational(&g.delta_bound)
                );
            }
            Ok(certificate_to_string(&cert))
        }
        Command::Verify { instance, certificate, n } => {
            let inst = read_instance(&Input { instance: Some(instance), n }, true)?;
            let cert = parse_certificate(&read_text(Some(&certificate))?)?;
            match verify_certificate(&inst, &cert) {
                CertificateCheck::Pass => Ok(json!({ "status": "pass" }).to_string()),
                CertificateCheck::Fail(w) => {
                    eprintln!("cone-minimax: certificate rejected: {w}");
                    Err(Failure::Checked(json!({
                        "status": "fail",
                        "inequality": w.family(),
                        "witness": w,
                    })))
                }
            }
        }
        Command::Partition { input, reorder, regroup, cm } => {
            let inst = read_instance(&input, regroup)?;
            if regroup {
                return Ok(serde_json::to_string(&ample_regroup(&inst, cm)?).expect("report serializes"));
            }
            let opts = PartitionOptions { reorder_coordinates: reorder, ..Default::default() };
            Ok(partition_to_string(&build_partition_with(&inst, &opts)?))
        }
        Command::Gen { family, n, r, s, q, seed, bound, zero_percent } => {
            let family: Family = family.parse()?;
            let spec = GenSpec { family, n, r, s, q, seed, bound, zero_percent };
            Ok(instance_to_string(&generate(&spec)?))
        }
        Command::Oracle { which: OracleCommand::Minimax { input, denominator, multiple } } => {
            let inst = read_instance(&input, false)?;
            let best = oracle_best_counts(&inst, denominator, multiple)?;
            Ok(json!({
                "best_sorted": best.best_sorted,
                "witness": strings(best.witness.values()),
                "counts": best.counts,
                "grid_points": best.grid_points,
            })
            .to_string())
        }
        Command::Oracle { which: OracleCommand::Partition { input } } => {
            let inst = read_instance(&input, false)?;
            let found = oracle_partition(&inst)?;
            Ok(json!({
                "exists": found.exists,
                "blocks": found.witness.map(|p| p.blocks),
                "blocks_tested": found.blocks_tested,
            })
            .to_string())
        }
    }
}

fn check(inst: &Instance, cm: bool) -> Result<String, Failure> {
    let violations = validate_instance(inst);
    let thresholds = threshold_check(inst.n(), inst.r(), inst.q(), cm);
    let (support, generic) = if violations.is_empty() {
        let support = match check_support_condition(inst)? {
            SupportCheck::Pass => json!({ "pass": true }),
            SupportCheck::Fail(v) => json!({ "pass": false, "violation": v }),
        };
        let generic = match check_genericity(inst) {
            GenericityCheck::Pass => json!({ "pass": true }),
            GenericityCheck::Fail(w) => json!({ "pass": false, "witness": w }),
        };
        (support, generic)
    } else {
        (Value::Null, Value::Null)
    };
    let pass = violations.is_empty() && support["pass"] == json!(true);
    let body = json!({
        "status": if pass { "pass" } else { "fail" },
        "n": inst.n(),
        "r": inst.r(),
        "q": inst.q(),
        "violations": violations,
        "support": support,
        "genericity": generic,
        "thresholds": thresholds,
    });
    if pass {
        Ok(body.to_string())
    } else {
        for v in &violations {
            eprintln!("cone-minimax: {v}");
        }
        if let Some(v) = support.get("violation") {
            eprintln!("cone-minimax: support condition fails: {v}");
        }
        Err(Failure::Checked(body))
    }
}
