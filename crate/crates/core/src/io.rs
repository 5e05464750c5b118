//! JSON wire formats.
//!
//! Rationals travel as strings `"p"` or `"p/q"`; bare JSON integers are
//! accepted on input, JSON floats never are.
//!
//! ```text
//! instance     {"n": 1, "r": 2, "q": 3, "coeffs": [["1","0"],["0","1"],["1/2","3"]]}
//! certificate  {"b": [...], "c": [...], "delta": "5/8", "kappa": "1/100", "seed": 0}
//! partition    {"blocks": [[1,3],[2,4]]}
//! ```

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::allocator::Weights;
use crate::certificate::Certificate;
use crate::error::ParseError;
use crate::instance::Instance;
use crate::partition::Partition;
use crate::rational::{format_rational, from_json_value, int, Rational};

#[derive(Deserialize)]
struct InstanceDoc {
    #[serde(default)]
    n: Option<usize>,
    r: usize,
    q: usize,
    coeffs: Vec<Vec<Value>>,
}

#[derive(Deserialize)]
struct CertificateDoc {
    b: Vec<Value>,
    c: Vec<Value>,
    delta: Value,
    #[serde(default)]
    kappa: Option<Value>,
    #[serde(default)]
    seed: u64,
}

fn json_error(e: serde_json::Error) -> ParseError {
    ParseError::Json(e.to_string())
}

fn rationals(values: &[Value]) -> Result<Vec<Rational>, ParseError> {
    values.iter().map(from_json_value).collect()
}

/// Parses an instance document. `n` may come from the file, from `flag_n`,
/// or both as long as they agree.
pub fn parse_instance(text: &str, flag_n: Option<usize>) -> Result<Instance, ParseError> {
    let doc: InstanceDoc = serde_json::from_str(text).map_err(json_error)?;
    let n = match (doc.n, flag_n) {
        (Some(file), Some(flag)) if file != flag => return Err(ParseError::DimensionMismatch { file, flag }),
        (Some(n), _) | (None, Some(n)) => n,
        (None, None) => return Err(ParseError::MissingDimension),
    };
    if doc.coeffs.len() != doc.q {
        return Err(ParseError::Shape(format!("q = {} but coeffs has {} rows", doc.q, doc.coeffs.len())));
    }
    if let Some((i, row)) = doc.coeffs.iter().enumerate().find(|(_, row)| row.len() != doc.r) {
        return Err(ParseError::Shape(format!("row {} has {} entries, expected r = {}", i + 1, row.len(), doc.r)));
    }
    let rows = doc.coeffs.iter().map(|row| rationals(row)).collect::<Result<Vec<_>, _>>()?;
    Instance::new(n, doc.r, rows).map_err(|e| ParseError::Shape(e.to_string()))
}

#[derive(Serialize)]
struct InstanceOut {
    n: usize,
    r: usize,
    q: usize,
    coeffs: Vec<Vec<String>>,
}

pub fn instance_to_string(inst: &Instance) -> String {
    let doc = InstanceOut {
        n: inst.n(),
        r: inst.r(),
        q: inst.q(),
        coeffs: inst.rows().iter().map(|row| row.iter().map(format_rational).collect()).collect(),
    };
    serde_json::to_string(&doc).expect("instance serializes")
}

/// Accepts certificates with non-positive entries so that the verifier,
/// not the parser, reports them.
pub fn parse_certificate(text: &str) -> Result<Certificate, ParseError> {
    let doc: CertificateDoc = serde_json::from_str(text).map_err(json_error)?;
    if doc.b.is_empty() {
        return Err(ParseError::Shape("certificate has no weights".into()));
    }
    Ok(Certificate {
        weights: Weights::unchecked(rationals(&doc.b)?),
        c: rationals(&doc.c)?,
        delta: from_json_value(&doc.delta)?,
        kappa: doc.kappa.as_ref().map(from_json_value).transpose()?.unwrap_or_else(|| int(0)),
        seed: doc.seed,
        perturbation: None,
        gammas: None,
    })
}

pub fn certificate_to_string(cert: &Certificate) -> String {
    serde_json::to_string(cert).expect("certificate serializes")
}

pub fn parse_partition(text: &str) -> Result<Partition, ParseError> {
    serde_json::from_str(text).map_err(json_error)
}

pub fn partition_to_string(p: &Partition) -> String {
    serde_json::to_string(p).expect("partition serializes")
}
