//! Result-file emission.
//!
//! Every real number is serialized with 17 significant digits
//! (`{:.16e}`), which round-trips `f64` exactly, and object keys are
//! emitted in a fixed order, so a solve is byte-reproducible except for
//! the `wallTimeMs` field.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;
use serde_json::value::RawValue;

use crate::problem::{CliResult, Failure};

/// A JSON number carrying all 17 significant digits of a double.
pub fn real(v: f64) -> Box<RawValue> {
    debug_assert!(v.is_finite(), "reports never contain non-finite reals");
    RawValue::from_string(format!("{v:.16e}")).expect("a formatted float is valid JSON")
}

pub fn reals(vs: &[f64]) -> Vec<Box<RawValue>> {
    vs.iter().map(|&v| real(v)).collect()
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ResultOut {
    pub kind: &'static str,
    pub point: Vec<Box<RawValue>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u: Option<Vec<Box<RawValue>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y0: Option<Vec<Box<RawValue>>>,
    pub residual: Box<RawValue>,
    pub eps: Box<RawValue>,
    pub certificate: CertificateOut,
    pub trace: TraceOut,
    pub wall_time_ms: u128,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CertificateOut {
    /// Named certified quantities; `BTreeMap` fixes the key order.
    pub bounds: BTreeMap<&'static str, Box<RawValue>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gap_estimate: Option<Box<RawValue>>,
}

#[derive(Serialize)]
pub struct TraceOut {
    /// Grid resolution of the outer (or only) search.
    pub k: u64,
    /// Resolution of the inner single-valued search, where one ran.
    #[serde(rename = "kBrouwer", skip_serializing_if = "Option::is_none")]
    pub k_brouwer: Option<u64>,
    pub deltas: Vec<Box<RawValue>>,
    pub retries: u32,
    pub seed: u64,
}

/// Report body for a solve that failed certification (exit 2).
#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ErrorOut {
    pub kind: &'static str,
    pub error: String,
    pub eps: Box<RawValue>,
    pub wall_time_ms: u128,
}

pub fn render<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("report serialization is total");
    text.push('\n');
    text
}

/// Writes a rendered report to `--out` or stdout. The JSON itself is
/// the command's product, so `--quiet` only silences the side note
/// about where it went.
pub fn emit(text: &str, out: Option<&Path>, quiet: bool) -> CliResult<()> {
    match out {
        Some(path) => {
            std::fs::write(path, text)
                .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
            if !quiet {
                println!("wrote {}", path.display());
            }
        }
        None => print!("{text}"),
    }
    Ok(())
}
