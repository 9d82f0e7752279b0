//! Standard gate table shared by the circuit IR, the QASM frontend and the
//! gate recognizer.
//!
//! Matrices follow the register convention used everywhere in this crate:
//! gate slot 0 is the least significant bit of the local matrix index. For
//! `cx` the control is slot 0 and the target slot 1; for `ccx` the controls
//! are slots 0 and 1.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4};

use num_complex::Complex64;
use thiserror::Error;

use crate::linalg::{u3_matrix, DenseMatrix, U3Params, I, ONE, ZERO};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GateError {
    #[error("unknown gate `{0}`")]
    UnknownGate(String),
    #[error("gate `{name}` takes {expected} parameter(s), got {got}")]
    ParamCount {
        name: String,
        expected: usize,
        got: usize,
    },
}

/// Parameter count and qubit arity of a supported gate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GateSignature {
    pub num_params: usize,
    pub num_qubits: usize,
}

const fn sig(num_params: usize, num_qubits: usize) -> GateSignature {
    GateSignature {
        num_params,
        num_qubits,
    }
}

/// Every name accepted by [`standard_gate_matrix`].
pub const SUPPORTED_GATES: &[&str] = &[
    "id", "x", "y", "z", "h", "s", "sdg", "t", "tdg", "rx", "ry", "rz", "p", "u1", "u2", "u3", "u",
    "cx", "cz", "cp", "cu1", "swap", "ccx", "rzz",
];

pub fn gate_signature(name: &str) -> Option<GateSignature> {
    Some(match name {
        "id" | "x" | "y" | "z" | "h" | "s" | "sdg" | "t" | "tdg" => sig(0, 1),
        "rx" | "ry" | "rz" | "p" | "u1" => sig(1, 1),
        "u2" => sig(2, 1),
        "u3" | "u" => sig(3, 1),
        "cx" | "cz" | "swap" => sig(0, 2),
        "cp" | "cu1" | "rzz" => sig(1, 2),
        "ccx" => sig(0, 3),
        _ => return None,
    })
}

pub fn standard_gate_matrix(name: &str, params: &[f64]) -> Result<DenseMatrix, GateError> {
    let signature = gate_signature(name).ok_or_else(|| GateError::UnknownGate(name.to_owned()))?;
    if params.len() != signature.num_params {
        return Err(GateError::ParamCount {
            name: name.to_owned(),
            expected: signature.num_params,
            got: params.len(),
        });
    }
    let c = |re: f64, im: f64| Complex64::new(re, im);
    let phase = |a: f64| Complex64::from_polar(1.0, a);
    let m = match name {
        "id" => DenseMatrix::identity(2),
        "x" => DenseMatrix::from_real(2, &[0.0, 1.0, 1.0, 0.0]),
        "y" => DenseMatrix::from_rows_unchecked(2, 2, vec![ZERO, -I, I, ZERO]),
        "z" => DenseMatrix::from_real(2, &[1.0, 0.0, 0.0, -1.0]),
        "h" => DenseMatrix::from_real(
            2,
            &[FRAC_1_SQRT_2, FRAC_1_SQRT_2, FRAC_1_SQRT_2, -FRAC_1_SQRT_2],
        ),
        "s" => DenseMatrix::diagonal(&[ONE, I]),
        "sdg" => DenseMatrix::diagonal(&[ONE, -I]),
        "t" => DenseMatrix::diagonal(&[ONE, phase(FRAC_PI_4)]),
        "tdg" => DenseMatrix::diagonal(&[ONE, phase(-FRAC_PI_4)]),
        "rx" => {
            let (s, co) = (params[0] / 2.0).sin_cos();
            DenseMatrix::from_rows_unchecked(
                2,
                2,
                vec![c(co, 0.0), c(0.0, -s), c(0.0, -s), c(co, 0.0)],
            )
        }
        "ry" => {
            let (s, co) = (params[0] / 2.0).sin_cos();
            DenseMatrix::from_real(2, &[co, -s, s, co])
        }
        "rz" => DenseMatrix::diagonal(&[phase(-params[0] / 2.0), phase(params[0] / 2.0)]),
        "p" | "u1" => DenseMatrix::diagonal(&[ONE, phase(params[0])]),
        "u2" => u3_matrix(U3Params::new(FRAC_PI_2, params[0], params[1])),
        "u3" | "u" => u3_matrix(U3Params::new(params[0], params[1], params[2])),
        "cx" => permutation(&[0, 3, 2, 1]),
        "cz" => DenseMatrix::diagonal(&[ONE, ONE, ONE, -ONE]),
        "cp" | "cu1" => DenseMatrix::diagonal(&[ONE, ONE, ONE, phase(params[0])]),
        "swap" => permutation(&[0, 2, 1, 3]),
        // exp(-i theta/2 Z⊗Z): phase depends on the parity of the two bits
        "rzz" => {
            let (even, odd) = (phase(-params[0] / 2.0), phase(params[0] / 2.0));
            DenseMatrix::diagonal(&[even, odd, odd, even])
        }
        "ccx" => permutation(&[0, 1, 2, 7, 4, 5, 6, 3]),
        _ => unreachable!("signature table and matrix table disagree on `{name}`"),
    };
    Ok(m)
}

/// Permutation matrix sending basis index `j` to `image[j]`.
fn permutation(image: &[usize]) -> DenseMatrix {
    let dim = image.len();
    let mut data = vec![ZERO; dim * dim];
    for (j, &i) in image.iter().enumerate() {
        data[i * dim + j] = ONE;
    }
    DenseMatrix::from_rows_unchecked(dim, dim, data)
}
