use std::f64::consts::PI;
use std::fmt::Write as _;

use thiserror::Error;

use crate::circuit::{Circuit, Instruction, Register};
use crate::linalg::{DenseMatrix, U3Params, COMPOSED_TOL};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EmitError {
    #[error("unitary block `{label}` acts on {arity} qubits; QASM 2 cannot carry it, use the JSON format")]
    MultiQubitBlock { label: String, arity: usize },
    #[error("matrix is not a 2x2 unitary (error {0:.3e})")]
    NotUnitary2x2(f64),
}

/// Below this magnitude an entry's phase carries no information.
const PHASE_FLOOR: f64 = 1e-10;

/// Splits a 2x2 unitary into `e^{i phase} * U3(theta, phi, lambda)`.
///
/// `phi` and `lambda` are returned in `[0, 2pi)`, the phase in `(-pi, pi]`.
/// When `theta` is 0 or pi only one combination of the angles is fixed by
/// the matrix; the free one is set to zero.
pub fn zyz_to_u3(m: &DenseMatrix) -> Result<(U3Params, f64), EmitError> {
    if m.shape() != (2, 2) {
        return Err(EmitError::NotUnitary2x2(f64::INFINITY));
    }
    let err = m.unitarity_error();
    if err > COMPOSED_TOL {
        return Err(EmitError::NotUnitary2x2(err));
    }
    let (a, b, c, d) = (m.get(0, 0), m.get(0, 1), m.get(1, 0), m.get(1, 1));
    // averaged magnitudes of the cos and sin entries
    let cos_half = 0.5 * (a.norm() + d.norm());
    let sin_half = 0.5 * (b.norm() + c.norm());
    let theta = 2.0 * sin_half.atan2(cos_half);

    let (alpha, phi, lambda);
    if cos_half >= sin_half {
        alpha = a.arg();
        if sin_half < PHASE_FLOOR {
            phi = 0.0;
            lambda = d.arg() - alpha;
        } else {
            phi = c.arg() - alpha;
            lambda = (-b).arg() - alpha;
        }
    } else if cos_half < PHASE_FLOOR {
        phi = 0.0;
        alpha = c.arg();
        lambda = (-b).arg() - alpha;
    } else {
        // alpha + phi = arg c, alpha + lambda = arg(-b), alpha + phi + lambda = arg d
        alpha = c.arg() + (-b).arg() - d.arg();
        phi = c.arg() - alpha;
        lambda = (-b).arg() - alpha;
    }
    Ok((
        U3Params::new(theta, wrap_positive(phi), wrap_positive(lambda)),
        wrap_symmetric(alpha),
    ))
}

fn wrap_positive(x: f64) -> f64 {
    let r = x.rem_euclid(2.0 * PI);
    if r >= 2.0 * PI {
        0.0
    } else {
        r
    }
}

fn wrap_symmetric(x: f64) -> f64 {
    let r = wrap_positive(x);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

fn reg_ref(regs: &[Register], mut flat: usize) -> String {
    for r in regs {
        if flat < r.size {
            return format!("{}[{}]", r.name, flat);
        }
        flat -= r.size;
    }
    unreachable!("validated index out of register range")
}

/// Shortest representation that parses back to the same `f64`.
fn fmt_param(x: f64) -> String {
    format!("{x:?}")
}

/// Renders a circuit as OpenQASM 2.0. Single-qubit unitary blocks become
/// `u3` statements (their global phase is dropped); wider blocks are an error.
pub fn emit_qasm2(c: &Circuit) -> Result<String, EmitError> {
    let mut out = String::from("OPENQASM 2.0;\ninclude \"qelib1.inc\";\n");
    for r in c.qregs() {
        writeln!(out, "qreg {}[{}];", r.name, r.size).unwrap();
    }
    for r in c.cregs() {
        writeln!(out, "creg {}[{}];", r.name, r.size).unwrap();
    }
    let q = |i: usize| reg_ref(c.qregs(), i);
    for instr in c.instructions() {
        match instr {
            Instruction::Gate {
                name,
                params,
                qubits,
            } => {
                out.push_str(name);
                if !params.is_empty() {
                    let ps: Vec<String> = params.iter().map(|&p| fmt_param(p)).collect();
                    write!(out, "({})", ps.join(",")).unwrap();
                }
                let qs: Vec<String> = qubits.iter().map(|&i| q(i)).collect();
                writeln!(out, " {};", qs.join(",")).unwrap();
            }
            Instruction::Unitary {
                label,
                qubits,
                matrix,
            } => {
                if qubits.len() != 1 {
                    return Err(EmitError::MultiQubitBlock {
                        label: label.clone(),
                        arity: qubits.len(),
                    });
                }
                let (p, _) = zyz_to_u3(matrix)?;
                writeln!(
                    out,
                    "u3({},{},{}) {}; // {}",
                    fmt_param(p.theta),
                    fmt_param(p.phi),
                    fmt_param(p.lambda),
                    q(qubits[0]),
                    label
                )
                .unwrap();
            }
            Instruction::Measure { qubit, clbit } => {
                writeln!(
                    out,
                    "measure {} -> {};",
                    q(*qubit),
                    reg_ref(c.cregs(), *clbit)
                )
                .unwrap();
            }
            Instruction::Reset { qubit } => writeln!(out, "reset {};", q(*qubit)).unwrap(),
            Instruction::Barrier { qubits } => {
                let qs: Vec<String> = qubits.iter().map(|&i| q(i)).collect();
                writeln!(out, "barrier {};", qs.join(",")).unwrap();
            }
        }
    }
    Ok(out)
}
