//! The JSON form of a symbol:
//! `{"d":2,"terms":[{"e":[3,0],"c":1},{"e":[0,3],"c":1}]}`.

use pmax_core::poly::IntPolynomial;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PolyDoc {
    d: usize,
    terms: Vec<TermDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TermDoc {
    e: Vec<u32>,
    c: i64,
}

/// Parses the JSON form. Syntax and type errors carry the line and column;
/// shape errors name the offending term.
pub fn parse_polynomial(text: &str) -> Result<IntPolynomial, CliError> {
    let doc: PolyDoc = serde_json::from_str(text)
        .map_err(|e| CliError::Parse(format!("polynomial JSON: {e}")))?;
    if doc.d == 0 {
        return Err(CliError::Parse("polynomial JSON: \"d\" must be at least 1".into()));
    }
    for (i, t) in doc.terms.iter().enumerate() {
        if t.e.len() != doc.d {
            return Err(CliError::Parse(format!(
                "polynomial JSON: terms[{i}].e has {} exponents, expected d = {}",
                t.e.len(),
                doc.d
            )));
        }
    }
    Ok(IntPolynomial::from_terms(doc.d, doc.terms.into_iter().map(|t| (t.e, t.c)))?)
}

/// Canonical JSON value: terms in lexicographic exponent order, no zero
/// coefficients.
pub fn polynomial_value(p: &IntPolynomial) -> serde_json::Value {
    let doc = PolyDoc {
        d: p.dim(),
        terms: p
            .terms()
            .map(|(e, c)| TermDoc { e: e.to_vec(), c })
            .collect(),
    };
    serde_json::to_value(doc).expect("plain data")
}

pub fn serialize_polynomial(p: &IntPolynomial) -> String {
    polynomial_value(p).to_string()
}
