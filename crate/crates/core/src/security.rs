//! Closed-form adversary success probabilities and pattern entropy.
//!
//! * Black box: guessing the three basis angles on a grid of cell width
//!   `delta` succeeds with probability `(delta / 2pi)^3`.
//! * White box: with `x` of `n` gates protected, guessing the hidden subset
//!   succeeds with probability `1 / C(n, x)`; the min-entropy of the pattern
//!   is `log2 C(n, x)` bits.

use std::f64::consts::{LN_2, PI};

use serde::Serialize;
use statrs::function::gamma::ln_gamma;
use thiserror::Error;

use crate::obfuscate::{ObfuscatedCircuit, ObfuscationKey, ObfuscationMode};

/// Largest `n` for which binomials are evaluated in exact integer arithmetic.
pub const EXACT_BINOMIAL_MAX_N: u64 = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SecurityError {
    #[error("grid width must lie in (0, 2pi], got {0}")]
    BadDelta(f64),
    #[error("protected count {x} is outside 0..={n}")]
    SubsetOutOfRange { n: u64, x: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdversaryModel {
    BlackBox,
    WhiteBox,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SecurityReport {
    pub model: AdversaryModel,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x: Option<u64>,
    /// `C(n, x)` when it is computed exactly.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subsets: Option<u128>,
    pub success_probability: f64,
    pub min_entropy_bits: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
    pub note: String,
}

/// `(delta / 2pi)^3`.
pub fn blackbox_guess_probability(delta: f64) -> Result<f64, SecurityError> {
    if !(delta > 0.0 && delta <= 2.0 * PI) {
        return Err(SecurityError::BadDelta(delta));
    }
    Ok((delta / (2.0 * PI)).powi(3))
}

pub fn blackbox_profile(delta: f64) -> Result<SecurityReport, SecurityError> {
    let p = blackbox_guess_probability(delta)?;
    Ok(SecurityReport {
        model: AdversaryModel::BlackBox,
        delta: Some(delta),
        n: None,
        x: None,
        subsets: None,
        success_probability: p,
        min_entropy_bits: -p.log2(),
        warning: None,
        note: "guessing model: one uniform guess per angle on a grid of width delta".into(),
    })
}

/// `C(n, x)` for `n <= 64`, exactly.
pub fn binomial_exact(n: u64, x: u64) -> Option<u128> {
    if x > n || n > EXACT_BINOMIAL_MAX_N {
        return None;
    }
    let k = x.min(n - x) as u128;
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) is divisible by (i + 1) at every step
        acc = acc * (n as u128 - i) / (i + 1);
    }
    Some(acc)
}

/// `log2 C(n, x)`: exact up to `n = 64`, via log-gamma beyond.
pub fn log2_binomial(n: u64, x: u64) -> Result<f64, SecurityError> {
    if x > n {
        return Err(SecurityError::SubsetOutOfRange { n, x });
    }
    Ok(match binomial_exact(n, x) {
        Some(c) => (c as f64).log2(),
        None => {
            let (n, x) = (n as f64, x as f64);
            (ln_gamma(n + 1.0) - ln_gamma(x + 1.0) - ln_gamma(n - x + 1.0)) / LN_2
        }
    })
}

/// White-box guessing profile for `x` protected gates out of `n`.
pub fn whitebox_profile(n: u64, x: u64) -> Result<SecurityReport, SecurityError> {
    let entropy = log2_binomial(n, x)?;
    let subsets = binomial_exact(n, x);
    let success = match subsets {
        Some(c) => 1.0 / c as f64,
        None => (-entropy).exp2(),
    };
    let warning = (x == 0 || x == n).then(|| {
        format!("trivial pattern (x = {x} of n = {n}): the protected set is known, entropy 0")
    });
    Ok(SecurityReport {
        model: AdversaryModel::WhiteBox,
        delta: None,
        n: Some(n),
        x: Some(x),
        subsets,
        success_probability: success,
        min_entropy_bits: entropy.max(0.0),
        warning,
        note: "single guess of the hidden protected subset".into(),
    })
}

/// White-box profile of the pattern recorded in a key.
pub fn audit_key(key: &ObfuscationKey) -> SecurityReport {
    let n = key.original.gate_count as u64;
    let x = key.protected_count() as u64;
    let mut report = whitebox_profile(n, x).expect("x <= n for any key produced by obfuscate");
    if !matches!(key.mode, ObfuscationMode::SubsetSandwich { .. }) {
        report.warning = Some(format!(
            "{} mode conjugates every gate (x = n = {n}): the pattern has zero entropy and a \
             white-box adversary can simplify every block",
            key.mode.name()
        ));
    }
    report
}

pub fn audit_circuit(c: &ObfuscatedCircuit) -> SecurityReport {
    audit_key(&c.key)
}
