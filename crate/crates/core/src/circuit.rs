//! Platform-neutral circuit representation.
//!
//! Qubit `i` is bit `i` of a statevector / matrix index (qubit 0 is the least
//! significant bit). Classical registers are flattened the same way; counts
//! render classical bit `num_clbits - 1` leftmost.

use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gates::{gate_signature, standard_gate_matrix, GateError};
use crate::linalg::{matmul, DenseMatrix, LinalgError, COMPOSED_TOL, ZERO};

/// Default qubit cap for [`Circuit::to_unitary`].
pub const DEFAULT_UNITARY_CAP: usize = 10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CircuitError {
    #[error("qubit index {index} out of range for a {num_qubits}-qubit circuit")]
    QubitOutOfRange { index: usize, num_qubits: usize },
    #[error("classical bit index {index} out of range for {num_clbits} classical bit(s)")]
    ClbitOutOfRange { index: usize, num_clbits: usize },
    #[error("qubit {0} appears more than once in one instruction")]
    DuplicateQubit(usize),
    #[error("`{name}` acts on {expected} qubit(s) but was given {got}")]
    Arity {
        name: String,
        expected: usize,
        got: usize,
    },
    #[error("unitary block `{label}` is not unitary (error {error:.3e})")]
    NonUnitary { label: String, error: f64 },
    #[error("unitary block `{label}` matrix is {rows}x{cols}, expected {expected}x{expected}")]
    BlockShape {
        label: String,
        rows: usize,
        cols: usize,
        expected: usize,
    },
    #[error("circuit contains measurement or reset; strip them before building a unitary")]
    NonUnitaryInstruction,
    #[error("{num_qubits} qubits exceeds the cap of {cap}")]
    TooManyQubits { num_qubits: usize, cap: usize },
    #[error("circuit needs at least one qubit")]
    NoQubits,
    #[error(transparent)]
    Gate(#[from] GateError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Register {
    pub name: String,
    pub size: usize,
}

impl Register {
    pub fn new(name: impl Into<String>, size: usize) -> Self {
        Self {
            name: name.into(),
            size,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Instruction {
    Gate {
        name: String,
        params: Vec<f64>,
        qubits: Vec<usize>,
    },
    Unitary {
        label: String,
        qubits: Vec<usize>,
        matrix: DenseMatrix,
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

impl Instruction {
    pub fn gate(name: impl Into<String>, params: Vec<f64>, qubits: Vec<usize>) -> Self {
        Instruction::Gate {
            name: name.into(),
            params,
            qubits,
        }
    }

    pub fn unitary(label: impl Into<String>, qubits: Vec<usize>, matrix: DenseMatrix) -> Self {
        Instruction::Unitary {
            label: label.into(),
            qubits,
            matrix,
        }
    }

    pub fn qubits(&self) -> &[usize] {
        match self {
            Instruction::Gate { qubits, .. }
            | Instruction::Unitary { qubits, .. }
            | Instruction::Barrier { qubits } => qubits,
            Instruction::Measure { qubit, .. } | Instruction::Reset { qubit } => {
                std::slice::from_ref(qubit)
            }
        }
    }

    /// Standard gates and opaque unitaries; the instructions counted as `m`.
    pub fn is_gate(&self) -> bool {
        matches!(self, Instruction::Gate { .. } | Instruction::Unitary { .. })
    }

    /// Measure and reset split a circuit into unitary segments.
    pub fn is_boundary(&self) -> bool {
        matches!(
            self,
            Instruction::Measure { .. } | Instruction::Reset { .. }
        )
    }

    /// Display name: the gate name, or the block label.
    pub fn name(&self) -> &str {
        match self {
            Instruction::Gate { name, .. } => name,
            Instruction::Unitary { label, .. } => label,
            Instruction::Measure { .. } => "measure",
            Instruction::Reset { .. } => "reset",
            Instruction::Barrier { .. } => "barrier",
        }
    }

    /// Local operator of a gate-like instruction, slot 0 least significant.
    pub fn operator(&self) -> Option<Result<DenseMatrix, GateError>> {
        match self {
            Instruction::Gate { name, params, .. } => Some(standard_gate_matrix(name, params)),
            Instruction::Unitary { matrix, .. } => Some(Ok(matrix.clone())),
            _ => None,
        }
    }
}

/// Non-fatal findings from [`Circuit::validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ValidationWarning {
    /// A classical bit is written by more than one measurement; the last wins.
    ClbitOverwritten { clbit: usize, instruction: usize },
}

/// Maximal unitary instruction ranges and the measure/reset boundaries
/// between them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentView {
    pub segments: Vec<Range<usize>>,
    pub boundaries: Vec<usize>,
}

impl SegmentView {
    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    num_qubits: usize,
    num_clbits: usize,
    instructions: Vec<Instruction>,
    qregs: Vec<Register>,
    cregs: Vec<Register>,
}

impl Circuit {
    /// An empty circuit with a single quantum register `q` and, when
    /// `num_clbits > 0`, a single classical register `c`.
    pub fn new(num_qubits: usize, num_clbits: usize) -> Self {
        let cregs = if num_clbits > 0 {
            vec![Register::new("c", num_clbits)]
        } else {
            Vec::new()
        };
        Self {
            num_qubits,
            num_clbits,
            instructions: Vec::new(),
            qregs: vec![Register::new("q", num_qubits)],
            cregs,
        }
    }

    /// An empty circuit whose flat index space is the concatenation of the
    /// given registers in order.
    pub fn with_registers(qregs: Vec<Register>, cregs: Vec<Register>) -> Self {
        Self {
            num_qubits: qregs.iter().map(|r| r.size).sum(),
            num_clbits: cregs.iter().map(|r| r.size).sum(),
            instructions: Vec::new(),
            qregs,
            cregs,
        }
    }

    /// Same registers as `self`, no instructions.
    pub fn empty_like(&self) -> Self {
        Self {
            num_qubits: self.num_qubits,
            num_clbits: self.num_clbits,
            instructions: Vec::new(),
            qregs: self.qregs.clone(),
            cregs: self.cregs.clone(),
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn num_clbits(&self) -> usize {
        self.num_clbits
    }

    pub fn instructions(&self) -> &[Instruction] {
        &self.instructions
    }

    pub fn qregs(&self) -> &[Register] {
        &self.qregs
    }

    pub fn cregs(&self) -> &[Register] {
        &self.cregs
    }

    pub fn len(&self) -> usize {
        self.instructions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instructions.is_empty()
    }

    /// Appends an instruction after checking it against the register sizes.
    pub fn push(&mut self, instr: Instruction) -> Result<&mut Self, CircuitError> {
        self.check_instruction(&instr)?;
        self.instructions.push(instr);
        Ok(self)
    }

    pub fn gate(
        &mut self,
        name: &str,
        params: &[f64],
        qubits: &[usize],
    ) -> Result<&mut Self, CircuitError> {
        self.push(Instruction::gate(name, params.to_vec(), qubits.to_vec()))
    }

    pub fn h(&mut self, q: usize) -> Result<&mut Self, CircuitError> {
        self.gate("h", &[], &[q])
    }

    pub fn x(&mut self, q: usize) -> Result<&mut Self, CircuitError> {
        self.gate("x", &[], &[q])
    }

    pub fn cx(&mut self, control: usize, target: usize) -> Result<&mut Self, CircuitError> {
        self.gate("cx", &[], &[control, target])
    }

    pub fn measure(&mut self, qubit: usize, clbit: usize) -> Result<&mut Self, CircuitError> {
        self.push(Instruction::Measure { qubit, clbit })
    }

    /// Measures qubit `i` into classical bit `i` for every qubit.
    pub fn measure_all(&mut self) -> Result<&mut Self, CircuitError> {
        for q in 0..self.num_qubits {
            self.measure(q, q)?;
        }
        Ok(self)
    }

    pub fn reset(&mut self, qubit: usize) -> Result<&mut Self, CircuitError> {
        self.push(Instruction::Reset { qubit })
    }

    pub fn barrier(&mut self, qubits: &[usize]) -> Result<&mut Self, CircuitError> {
        self.push(Instruction::Barrier {
            qubits: qubits.to_vec(),
        })
    }

    /// Appends every instruction of `other`, which must have the same width.
    pub fn extend_from(&mut self, other: &Circuit) -> Result<&mut Self, CircuitError> {
        for instr in &other.instructions {
            self.push(instr.clone())?;
        }
        Ok(self)
    }

    fn check_qubit(&self, q: usize) -> Result<(), CircuitError> {
        if q >= self.num_qubits {
            return Err(CircuitError::QubitOutOfRange {
                index: q,
                num_qubits: self.num_qubits,
            });
        }
        Ok(())
    }

    fn check_instruction(&self, instr: &Instruction) -> Result<(), CircuitError> {
        let qubits = instr.qubits();
        for (i, &q) in qubits.iter().enumerate() {
            self.check_qubit(q)?;
            if qubits[..i].contains(&q) {
                return Err(CircuitError::DuplicateQubit(q));
            }
        }
        match instr {
            Instruction::Gate {
                name,
                params,
                qubits,
            } => {
                let sig =
                    gate_signature(name).ok_or_else(|| GateError::UnknownGate(name.clone()))?;
                if params.len() != sig.num_params {
                    return Err(GateError::ParamCount {
                        name: name.clone(),
                        expected: sig.num_params,
                        got: params.len(),
                    }
                    .into());
                }
                if qubits.len() != sig.num_qubits {
                    return Err(CircuitError::Arity {
                        name: name.clone(),
                        expected: sig.num_qubits,
                        got: qubits.len(),
                    });
                }
            }
            Instruction::Unitary {
                label,
                qubits,
                matrix,
            } => {
                let expected = 1usize << qubits.len();
                if qubits.is_empty() || matrix.shape() != (expected, expected) {
                    return Err(CircuitError::BlockShape {
                        label: label.clone(),
                        rows: matrix.rows(),
                        cols: matrix.cols(),
                        expected,
                    });
                }
                let error = matrix.unitarity_error();
                if error > COMPOSED_TOL {
                    return Err(CircuitError::NonUnitary {
                        label: label.clone(),
                        error,
                    });
                }
            }
            Instruction::Measure { clbit, .. } => {
                if *clbit >= self.num_clbits {
                    return Err(CircuitError::ClbitOutOfRange {
                        index: *clbit,
                        num_clbits: self.num_clbits,
                    });
                }
            }
            Instruction::Reset { .. } | Instruction::Barrier { .. } => {}
        }
        Ok(())
    }

    /// Re-checks every instruction and reports classical-bit overwrites.
    pub fn validate(&self) -> Result<Vec<ValidationWarning>, CircuitError> {
        if self.num_qubits == 0 {
            return Err(CircuitError::NoQubits);
        }
        let mut written = vec![false; self.num_clbits];
        let mut warnings = Vec::new();
        for (i, instr) in self.instructions.iter().enumerate() {
            self.check_instruction(instr)?;
            if let Instruction::Measure { clbit, .. } = instr {
                if std::mem::replace(&mut written[*clbit], true) {
                    warnings.push(ValidationWarning::ClbitOverwritten {
                        clbit: *clbit,
                        instruction: i,
                    });
                }
            }
        }
        Ok(warnings)
    }

    /// Number of standard gates and opaque unitaries (`m`).
    pub fn gate_count(&self) -> usize {
        self.instructions.iter().filter(|i| i.is_gate()).count()
    }

    pub fn count_measures(&self) -> usize {
        self.instructions
            .iter()
            .filter(|i| matches!(i, Instruction::Measure { .. }))
            .count()
    }

    pub fn count_resets(&self) -> usize {
        self.instructions
            .iter()
            .filter(|i| matches!(i, Instruction::Reset { .. }))
            .count()
    }

    /// Greedy wire-levelling depth. Measure and reset occupy a layer on their
    /// qubit; a barrier lines its wires up without adding a layer.
    pub fn depth(&self) -> usize {
        let mut level = vec![0usize; self.num_qubits];
        for instr in &self.instructions {
            let qubits = instr.qubits();
            let top = qubits.iter().map(|&q| level[q]).max().unwrap_or(0);
            let new = match instr {
                Instruction::Barrier { .. } => top,
                _ => top + 1,
            };
            for &q in qubits {
                level[q] = new;
            }
        }
        level.into_iter().max().unwrap_or(0)
    }

    /// Maximal runs of gates and barriers between measure/reset boundaries.
    /// Empty runs (adjacent boundaries) are not reported.
    pub fn segment(&self) -> SegmentView {
        let mut segments = Vec::new();
        let mut boundaries = Vec::new();
        let mut start = 0;
        for (i, instr) in self.instructions.iter().enumerate() {
            if instr.is_boundary() {
                if start < i {
                    segments.push(start..i);
                }
                boundaries.push(i);
                start = i + 1;
            }
        }
        if start < self.instructions.len() {
            segments.push(start..self.instructions.len());
        }
        SegmentView {
            segments,
            boundaries,
        }
    }

    /// Copy without any measure instructions.
    pub fn without_measurements(&self) -> Circuit {
        let mut out = self.empty_like();
        out.instructions = self
            .instructions
            .iter()
            .filter(|i| !matches!(i, Instruction::Measure { .. }))
            .cloned()
            .collect();
        out
    }

    /// Full-register operator with the default qubit cap.
    pub fn to_unitary(&self) -> Result<DenseMatrix, CircuitError> {
        self.to_unitary_with_cap(DEFAULT_UNITARY_CAP)
    }

    /// `2^n x 2^n` product of every instruction operator in time order, each
    /// lifted to the whole register by identity padding.
    pub fn to_unitary_with_cap(&self, cap: usize) -> Result<DenseMatrix, CircuitError> {
        if self.num_qubits > cap {
            return Err(CircuitError::TooManyQubits {
                num_qubits: self.num_qubits,
                cap,
            });
        }
        let mut acc = DenseMatrix::identity(1 << self.num_qubits);
        for instr in &self.instructions {
            match instr {
                Instruction::Barrier { .. } => {}
                Instruction::Measure { .. } | Instruction::Reset { .. } => {
                    return Err(CircuitError::NonUnitaryInstruction)
                }
                gate => {
                    let local = gate.operator().expect("gate-like")?;
                    let lifted = lift(&local, gate.qubits(), self.num_qubits);
                    acc = matmul(&lifted, &acc)?;
                }
            }
        }
        Ok(acc)
    }
}

/// Embeds a local operator acting on `qubits` (slot 0 least significant)
/// into an `n`-qubit register as an explicit `2^n x 2^n` matrix.
pub fn lift(local: &DenseMatrix, qubits: &[usize], num_qubits: usize) -> DenseMatrix {
    let dim = 1usize << num_qubits;
    let mask: usize = qubits.iter().map(|&q| 1usize << q).sum();
    let local_index = |full: usize| -> usize {
        qubits
            .iter()
            .enumerate()
            .map(|(slot, &q)| ((full >> q) & 1) << slot)
            .sum()
    };
    let mut data = vec![ZERO; dim * dim];
    for row in 0..dim {
        let lr = local_index(row);
        for col in 0..dim {
            if row & !mask == col & !mask {
                data[row * dim + col] = local.get(lr, local_index(col));
            }
        }
    }
    DenseMatrix::from_rows(dim, dim, data).expect("finite entries")
}
