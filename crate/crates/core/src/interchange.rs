//! Native JSON document for circuits, the only lossless carrier for
//! multi-qubit opaque unitaries.
//!
//! ```text
//! {"format":"qobf-circuit","version":1,"num_qubits":n,"num_clbits":c,
//!  "instructions":[{"kind":"gate","name":"h","params":[],"qubits":[0]},
//!                  {"kind":"unitary","label":"Obf_H_0","qubits":[0],"matrix":[[[re,im],...],...]},
//!                  {"kind":"measure","qubit":0,"clbit":0},
//!                  {"kind":"reset","qubit":0},
//!                  {"kind":"barrier","qubits":[0,1]}]}
//! ```
//!
//! Matrix index bit `k` corresponds to gate slot `k`. Register names travel
//! in the optional `qregs` / `cregs` arrays.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{Circuit, CircuitError, Instruction, Register};
use crate::linalg::DenseMatrix;

pub const CIRCUIT_FORMAT: &str = "qobf-circuit";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum InterchangeError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("schema violation: {0}")]
    Schema(String),
    #[error("invalid circuit: {0}")]
    Circuit(#[from] CircuitError),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CircuitDoc {
    format: String,
    version: u32,
    num_qubits: usize,
    num_clbits: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    qregs: Option<Vec<Register>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cregs: Option<Vec<Register>>,
    instructions: Vec<InstrDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum InstrDoc {
    Gate {
        name: String,
        params: Vec<f64>,
        qubits: Vec<usize>,
    },
    Unitary {
        label: String,
        qubits: Vec<usize>,
        matrix: Vec<Vec<[f64; 2]>>,
    },
    Measure {
        qubit: usize,
        clbit: usize,
    },
    Reset {
        qubit: usize,
    },
    Barrier {
        qubits: Vec<usize>,
    },
}

pub(crate) fn matrix_to_doc(m: &DenseMatrix) -> Vec<Vec<[f64; 2]>> {
    (0..m.rows())
        .map(|r| {
            (0..m.cols())
                .map(|c| [m.get(r, c).re, m.get(r, c).im])
                .collect()
        })
        .collect()
}

pub(crate) fn matrix_from_doc(rows: &[Vec<[f64; 2]>]) -> Result<DenseMatrix, String> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(format!(
            "matrix must be square and non-empty, got {n} row(s)"
        ));
    }
    let data = rows
        .iter()
        .flatten()
        .map(|&[re, im]| Complex64::new(re, im))
        .collect();
    DenseMatrix::from_rows(n, n, data).map_err(|e| e.to_string())
}

fn instr_to_doc(instr: &Instruction) -> InstrDoc {
    match instr.clone() {
        Instruction::Gate {
            name,
            params,
            qubits,
        } => InstrDoc::Gate {
            name,
            params,
            qubits,
        },
        Instruction::Unitary {
            label,
            qubits,
            matrix,
        } => InstrDoc::Unitary {
            label,
            qubits,
            matrix: matrix_to_doc(&matrix),
        },
        Instruction::Measure { qubit, clbit } => InstrDoc::Measure { qubit, clbit },
        Instruction::Reset { qubit } => InstrDoc::Reset { qubit },
        Instruction::Barrier { qubits } => InstrDoc::Barrier { qubits },
    }
}

fn doc_to_instr(doc: InstrDoc) -> Result<Instruction, InterchangeError> {
    Ok(match doc {
        InstrDoc::Gate {
            name,
            params,
            qubits,
        } => Instruction::Gate {
            name,
            params,
            qubits,
        },
        InstrDoc::Unitary {
            label,
            qubits,
            matrix,
        } => Instruction::Unitary {
            matrix: matrix_from_doc(&matrix)
                .map_err(|e| InterchangeError::Schema(format!("block `{label}`: {e}")))?,
            label,
            qubits,
        },
        InstrDoc::Measure { qubit, clbit } => Instruction::Measure { qubit, clbit },
        InstrDoc::Reset { qubit } => Instruction::Reset { qubit },
        InstrDoc::Barrier { qubits } => Instruction::Barrier { qubits },
    })
}

/// Serializes a circuit; floats use the shortest round-trip representation.
pub fn write_json(c: &Circuit) -> String {
    let default_regs = Circuit::new(c.num_qubits(), c.num_clbits());
    let custom = c.qregs() != default_regs.qregs() || c.cregs() != default_regs.cregs();
    let doc = CircuitDoc {
        format: CIRCUIT_FORMAT.to_owned(),
        version: FORMAT_VERSION,
        num_qubits: c.num_qubits(),
        num_clbits: c.num_clbits(),
        qregs: custom.then(|| c.qregs().to_vec()),
        cregs: custom.then(|| c.cregs().to_vec()),
        instructions: c.instructions().iter().map(instr_to_doc).collect(),
    };
    serde_json::to_string(&doc).expect("circuit documents always serialize")
}

/// Parses and validates a circuit document. Embedded matrices must be
/// unitary within the composed-operator tolerance.
pub fn read_json(text: &str) -> Result<Circuit, InterchangeError> {
    let doc: CircuitDoc = serde_json::from_str(text)?;
    if doc.format != CIRCUIT_FORMAT {
        return Err(InterchangeError::Schema(format!(
            "format is `{}`, expected `{CIRCUIT_FORMAT}`",
            doc.format
        )));
    }
    if doc.version != FORMAT_VERSION {
        return Err(InterchangeError::Schema(format!(
            "unsupported version {}",
            doc.version
        )));
    }
    let mut circuit = match (doc.qregs, doc.cregs) {
        (Some(q), Some(c)) => {
            let qs: usize = q.iter().map(|r| r.size).sum();
            let cs: usize = c.iter().map(|r| r.size).sum();
            if qs != doc.num_qubits || cs != doc.num_clbits {
                return Err(InterchangeError::Schema(
                    "register sizes do not add up to num_qubits/num_clbits".into(),
                ));
            }
            Circuit::with_registers(q, c)
        }
        (None, None) => Circuit::new(doc.num_qubits, doc.num_clbits),
        _ => {
            return Err(InterchangeError::Schema(
                "`qregs` and `cregs` must appear together".into(),
            ))
        }
    };
    if doc.num_qubits == 0 {
        return Err(InterchangeError::Circuit(CircuitError::NoQubits));
    }
    for instr in doc.instructions {
        circuit.push(doc_to_instr(instr)?)?;
    }
    Ok(circuit)
}
