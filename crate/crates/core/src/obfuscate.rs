//! Randomized U3 basis conjugation.
//!
//! Three modes are provided:
//!
//! * [`ObfuscationMode::Global`]: one basis `U` per unitary segment. The
//!   segment opens with `U†` on every wire (`Basis`), each gate `G` becomes
//!   the block `(⊗U†)·G·(⊗U)`, and the segment closes with `U` (`InvBasis`).
//! * [`ObfuscationMode::Chained`]: every wire carries its own current basis
//!   `A_w`, refreshed at each gate. A gate on wires `S` becomes
//!   `(⊗A'_w)·G·(⊗A_w)†` and the bases telescope away.
//! * [`ObfuscationMode::SubsetSandwich`]: a hidden subset of gates is
//!   rewritten as `A`, `A·G·A†`, `A†` with the basis gates left visible.
//!
//! Measure and reset split the circuit into segments that are processed with
//! fresh samples. Barriers pass through.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng as _;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{Circuit, CircuitError, Instruction};
use crate::exec::{rng_from_seed, Rng};
use crate::gates::{standard_gate_matrix, GateError};
use crate::linalg::{
    equal_up_to_global_phase, kron_slots, matmul, u3_matrix, DenseMatrix, LinalgError, U3Params,
    COMPOSED_TOL,
};

pub const KEY_FORMAT: &str = "qobf-key";
pub const KEY_VERSION: u32 = 1;
pub const BASIS_LABEL: &str = "Basis";
pub const INV_BASIS_LABEL: &str = "InvBasis";
pub const BLOCK_PREFIX: &str = "Obf_";
/// Tolerance used when matching a matrix against the standard gate set.
pub const RECOGNIZE_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum ObfuscateError {
    #[error("subset size {x} exceeds the gate count {m}")]
    SubsetTooLarge { x: usize, m: usize },
    #[error("instruction `{0}` is not an obfuscated block")]
    NotABlock(String),
    #[error("block `{0}` is not described by this key")]
    UnknownLabel(String),
    #[error("key does not match the block: {0}")]
    KeyMismatch(String),
    #[error("matrix is not unitary (error {0:.3e})")]
    NotUnitary(f64),
    #[error("invalid key document: {0}")]
    KeyFormat(String),
    #[error(transparent)]
    KeyJson(#[from] serde_json::Error),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Gate(#[from] GateError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObfuscationMode {
    Global,
    Chained,
    /// Protect `x` gates chosen uniformly at random.
    SubsetSandwich {
        x: usize,
    },
}

impl ObfuscationMode {
    pub fn name(&self) -> &'static str {
        match self {
            ObfuscationMode::Global => "global",
            ObfuscationMode::Chained => "chained",
            ObfuscationMode::SubsetSandwich { .. } => "subset",
        }
    }

    pub fn subset_size(&self) -> Option<usize> {
        match self {
            ObfuscationMode::SubsetSandwich { x } => Some(*x),
            _ => None,
        }
    }
}

impl fmt::Display for ObfuscationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ObfuscationMode::SubsetSandwich { x } => write!(f, "subset(x={x})"),
            other => f.write_str(other.name()),
        }
    }
}

impl FromStr for ObfuscationMode {
    type Err = String;

    /// Accepts `global`, `chained`, `subset` (x = 0) and `subset:<x>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "global" => Ok(ObfuscationMode::Global),
            "chained" => Ok(ObfuscationMode::Chained),
            "subset" => Ok(ObfuscationMode::SubsetSandwich { x: 0 }),
            _ => match s.strip_prefix("subset:").map(str::parse) {
                Some(Ok(x)) => Ok(ObfuscationMode::SubsetSandwich { x }),
                _ => Err(format!(
                    "unknown mode `{s}` (expected global, chained or subset)"
                )),
            },
        }
    }
}

/// One sampled basis, located in the original circuit. Gate indices count
/// gate-like instructions of the original circuit from 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KeyRecord {
    /// Global mode: the basis of one segment, shared by every wire and by
    /// gates `first_gate..end_gate`.
    Segment {
        segment: usize,
        first_gate: usize,
        end_gate: usize,
        params: U3Params,
    },
    /// Chained mode: basis of `wire` at the start of a segment.
    WireInit {
        segment: usize,
        wire: usize,
        params: U3Params,
    },
    /// Chained mode: basis of `wire` right after gate `gate`.
    WireUpdate {
        segment: usize,
        gate: usize,
        wire: usize,
        params: U3Params,
    },
    /// Subset mode: the sandwich basis of a protected gate.
    Protected { gate: usize, params: U3Params },
}

/// Everything needed to rebuild the inserted operators and to undo blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct ObfuscationKey {
    pub seed: u64,
    pub mode: ObfuscationMode,
    pub original: OriginalShape,
    /// Protected gate indices, ascending (subset mode only).
    pub protected: Vec<usize>,
    pub records: Vec<KeyRecord>,
}

/// Structure of the circuit the key was made for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OriginalShape {
    pub num_qubits: usize,
    pub gate_count: usize,
    pub depth: usize,
    pub segments: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct KeyDoc {
    format: String,
    version: u32,
    seed: u64,
    mode: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    subset_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    protected: Option<Vec<usize>>,
    original: OriginalShape,
    records: Vec<KeyRecord>,
}

impl ObfuscationKey {
    pub fn to_json(&self) -> String {
        let subset = self.mode.subset_size();
        let doc = KeyDoc {
            format: KEY_FORMAT.into(),
            version: KEY_VERSION,
            seed: self.seed,
            mode: self.mode.name().into(),
            subset_size: subset,
            protected: subset.map(|_| self.protected.clone()),
            original: self.original,
            records: self.records.clone(),
        };
        serde_json::to_string_pretty(&doc).expect("keys always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, ObfuscateError> {
        let doc: KeyDoc = serde_json::from_str(text)?;
        if doc.format != KEY_FORMAT || doc.version != KEY_VERSION {
            return Err(ObfuscateError::KeyFormat(format!(
                "expected {KEY_FORMAT} version {KEY_VERSION}, found {} version {}",
                doc.format, doc.version
            )));
        }
        let mode = match (doc.mode.as_str(), doc.subset_size) {
            ("global", None) => ObfuscationMode::Global,
            ("chained", None) => ObfuscationMode::Chained,
            ("subset", Some(x)) => ObfuscationMode::SubsetSandwich { x },
            (m, _) => {
                return Err(ObfuscateError::KeyFormat(format!(
                    "mode `{m}` is unknown or inconsistent with `subset_size`"
                )))
            }
        };
        let protected = doc.protected.unwrap_or_default();
        if mode.subset_size().is_some_and(|x| x != protected.len()) {
            return Err(ObfuscateError::KeyFormat(
                "`protected` length differs from `subset_size`".into(),
            ));
        }
        Ok(Self {
            seed: doc.seed,
            mode,
            original: doc.original,
            protected,
            records: doc.records,
        })
    }

    /// Number of protected gates `x` (every gate outside subset mode).
    pub fn protected_count(&self) -> usize {
        match self.mode {
            ObfuscationMode::SubsetSandwich { x } => x,
            _ => self.original.gate_count,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObfuscatedCircuit {
    pub circuit: Circuit,
    pub key: ObfuscationKey,
}

impl ObfuscatedCircuit {
    /// The conjugated gate blocks, in order.
    pub fn blocks(&self) -> impl Iterator<Item = &Instruction> {
        self.circuit.instructions().iter().filter(|i| is_block(i))
    }
}

pub fn is_block(instr: &Instruction) -> bool {
    matches!(instr, Instruction::Unitary { label, .. } if label.starts_with(BLOCK_PREFIX))
}

/// `Obf_<NAME>_<index>` with the original name upper-cased.
pub fn block_label(name: &str, gate_index: usize) -> String {
    format!("{BLOCK_PREFIX}{}_{gate_index}", name.to_uppercase())
}

fn parse_block_label(label: &str) -> Option<usize> {
    let rest = label.strip_prefix(BLOCK_PREFIX)?;
    rest.rsplit_once('_')?.1.parse().ok()
}

/// Draws `theta` in `[0, pi)` and `phi`, `lambda` in `[0, 2pi)` uniformly.
pub fn sample_basis(rng: &mut Rng) -> U3Params {
    let theta = rng.random::<f64>() * PI;
    let phi = rng.random::<f64>() * 2.0 * PI;
    let lambda = rng.random::<f64>() * 2.0 * PI;
    U3Params::new(theta, phi, lambda)
}

/// `L·g·R` with `L`, `R` the slot-ordered Kronecker products of the bases.
pub fn conjugate_gate(
    g: &DenseMatrix,
    left: &[DenseMatrix],
    right: &[DenseMatrix],
) -> Result<DenseMatrix, LinalgError> {
    let k = left.len();
    let dim = 1usize << k;
    if right.len() != k || g.shape() != (dim, dim) {
        return Err(LinalgError::DimensionMismatch {
            op: "conjugate_gate",
            lhs: g.shape(),
            rhs: (1 << right.len(), 1 << k),
        });
    }
    for b in left.iter().chain(right) {
        if b.shape() != (2, 2) {
            return Err(LinalgError::DimensionMismatch {
                op: "conjugate_gate basis",
                lhs: b.shape(),
                rhs: (2, 2),
            });
        }
    }
    matmul(&matmul(&kron_slots(left)?, g)?, &kron_slots(right)?)
}

/// Rewrites `c` under `mode`, drawing every basis from a generator seeded
/// with `seed`.
pub fn obfuscate(
    c: &Circuit,
    mode: ObfuscationMode,
    seed: u64,
) -> Result<ObfuscatedCircuit, ObfuscateError> {
    let mut rng = rng_from_seed(seed);
    match mode {
        ObfuscationMode::SubsetSandwich { x } => subset_sandwich(c, x, seed, &mut rng),
        _ => segmented(c, mode, seed, &mut || sample_basis(&mut rng)),
    }
}

/// Global mode with a caller-chosen basis used for every segment. The key
/// records `seed = 0`.
pub fn obfuscate_global_with_params(
    c: &Circuit,
    params: U3Params,
) -> Result<ObfuscatedCircuit, ObfuscateError> {
    segmented(c, ObfuscationMode::Global, 0, &mut || params)
}

fn shape_of(c: &Circuit) -> OriginalShape {
    OriginalShape {
        num_qubits: c.num_qubits(),
        gate_count: c.gate_count(),
        depth: c.depth(),
        segments: c.segment().len().max(1),
    }
}

fn gate_operator(instr: &Instruction) -> Result<DenseMatrix, ObfuscateError> {
    Ok(instr.operator().expect("gate-like instruction")?)
}

fn segmented(
    c: &Circuit,
    mode: ObfuscationMode,
    seed: u64,
    sample: &mut dyn FnMut() -> U3Params,
) -> Result<ObfuscatedCircuit, ObfuscateError> {
    let n = c.num_qubits();
    let view = c.segment();
    let segments = if view.is_empty() {
        std::iter::once(0..0).collect()
    } else {
        view.segments
    };
    let instrs = c.instructions();
    let mut out = c.empty_like();
    let mut records = Vec::new();
    let mut next = 0;
    let mut gate_index = 0;

    for (s, range) in segments.iter().enumerate() {
        for instr in &instrs[next..range.start] {
            out.push(instr.clone())?;
        }
        next = range.end;
        let first_gate = gate_index;
        match mode {
            ObfuscationMode::Global => {
                let p = sample();
                let u = u3_matrix(p);
                let u_dag = u3_matrix(p.inverse());
                for w in 0..n {
                    out.push(Instruction::unitary(BASIS_LABEL, vec![w], u_dag.clone()))?;
                }
                for instr in &instrs[range.clone()] {
                    if !instr.is_gate() {
                        out.push(instr.clone())?;
                        continue;
                    }
                    let k = instr.qubits().len();
                    let block = conjugate_gate(
                        &gate_operator(instr)?,
                        &vec![u_dag.clone(); k],
                        &vec![u.clone(); k],
                    )?;
                    out.push(Instruction::unitary(
                        block_label(instr.name(), gate_index),
                        instr.qubits().to_vec(),
                        block,
                    ))?;
                    gate_index += 1;
                }
                for w in 0..n {
                    out.push(Instruction::unitary(INV_BASIS_LABEL, vec![w], u.clone()))?;
                }
                records.push(KeyRecord::Segment {
                    segment: s,
                    first_gate,
                    end_gate: gate_index,
                    params: p,
                });
            }
            ObfuscationMode::Chained => {
                let mut basis = Vec::with_capacity(n);
                for w in 0..n {
                    let p = sample();
                    records.push(KeyRecord::WireInit {
                        segment: s,
                        wire: w,
                        params: p,
                    });
                    out.push(Instruction::unitary(BASIS_LABEL, vec![w], u3_matrix(p)))?;
                    basis.push(p);
                }
                for instr in &instrs[range.clone()] {
                    if !instr.is_gate() {
                        out.push(instr.clone())?;
                        continue;
                    }
                    let mut left = Vec::new();
                    let mut right = Vec::new();
                    for &w in instr.qubits() {
                        let fresh = sample();
                        records.push(KeyRecord::WireUpdate {
                            segment: s,
                            gate: gate_index,
                            wire: w,
                            params: fresh,
                        });
                        left.push(u3_matrix(fresh));
                        right.push(u3_matrix(basis[w].inverse()));
                        basis[w] = fresh;
                    }
                    let block = conjugate_gate(&gate_operator(instr)?, &left, &right)?;
                    out.push(Instruction::unitary(
                        block_label(instr.name(), gate_index),
                        instr.qubits().to_vec(),
                        block,
                    ))?;
                    gate_index += 1;
                }
                for (w, p) in basis.iter().enumerate() {
                    out.push(Instruction::unitary(
                        INV_BASIS_LABEL,
                        vec![w],
                        u3_matrix(p.inverse()),
                    ))?;
                }
            }
            ObfuscationMode::SubsetSandwich { .. } => unreachable!("handled separately"),
        }
    }
    for instr in &instrs[next..] {
        out.push(instr.clone())?;
    }
    Ok(ObfuscatedCircuit {
        circuit: out,
        key: ObfuscationKey {
            seed,
            mode,
            original: shape_of(c),
            protected: Vec::new(),
            records,
        },
    })
}

fn subset_sandwich(
    c: &Circuit,
    x: usize,
    seed: u64,
    rng: &mut Rng,
) -> Result<ObfuscatedCircuit, ObfuscateError> {
    let m = c.gate_count();
    if x > m {
        return Err(ObfuscateError::SubsetTooLarge { x, m });
    }
    let mut protected = rand::seq::index::sample(rng, m, x).into_vec();
    protected.sort_unstable();
    let params: Vec<U3Params> = protected.iter().map(|_| sample_basis(rng)).collect();

    let mut out = c.empty_like();
    let mut records = Vec::with_capacity(x);
    let mut gate_index = 0;
    let mut cursor = 0;
    for instr in c.instructions() {
        if !instr.is_gate() {
            out.push(instr.clone())?;
            continue;
        }
        if protected.get(cursor) == Some(&gate_index) {
            let p = params[cursor];
            let qubits = instr.qubits().to_vec();
            let k = qubits.len();
            let a = u3_matrix(p);
            let a_dag = u3_matrix(p.inverse());
            for &w in &qubits {
                out.push(Instruction::gate(
                    "u3",
                    vec![p.theta, p.phi, p.lambda],
                    vec![w],
                ))?;
            }
            let block = conjugate_gate(&gate_operator(instr)?, &vec![a; k], &vec![a_dag; k])?;
            out.push(Instruction::unitary(
                block_label(instr.name(), gate_index),
                qubits.clone(),
                block,
            ))?;
            let inv = p.inverse();
            for &w in &qubits {
                out.push(Instruction::gate(
                    "u3",
                    vec![inv.theta, inv.phi, inv.lambda],
                    vec![w],
                ))?;
            }
            records.push(KeyRecord::Protected {
                gate: gate_index,
                params: p,
            });
            cursor += 1;
        } else {
            out.push(instr.clone())?;
        }
        gate_index += 1;
    }
    Ok(ObfuscatedCircuit {
        circuit: out,
        key: ObfuscationKey {
            seed,
            mode: ObfuscationMode::SubsetSandwich { x },
            original: shape_of(c),
            protected,
            records,
        },
    })
}

/// Undoes the conjugation of one block using the recorded bases. The result
/// equals the original gate operator exactly up to rounding.
pub fn deobfuscate_block(
    block: &Instruction,
    key: &ObfuscationKey,
) -> Result<DenseMatrix, ObfuscateError> {
    let Instruction::Unitary {
        label,
        qubits,
        matrix,
    } = block
    else {
        return Err(ObfuscateError::NotABlock(block.name().to_owned()));
    };
    let gate = parse_block_label(label).ok_or_else(|| ObfuscateError::NotABlock(label.clone()))?;
    if gate >= key.original.gate_count {
        return Err(ObfuscateError::UnknownLabel(label.clone()));
    }
    let k = qubits.len();
    match key.mode {
        ObfuscationMode::Global => {
            let p = key
                .records
                .iter()
                .find_map(|r| match r {
                    KeyRecord::Segment {
                        first_gate,
                        end_gate,
                        params,
                        ..
                    } if (*first_gate..*end_gate).contains(&gate) => Some(*params),
                    _ => None,
                })
                .ok_or_else(|| ObfuscateError::UnknownLabel(label.clone()))?;
            let u = u3_matrix(p);
            let u_dag = u3_matrix(p.inverse());
            Ok(conjugate_gate(matrix, &vec![u; k], &vec![u_dag; k])?)
        }
        ObfuscationMode::Chained => {
            let mut after = Vec::with_capacity(k);
            let mut before = Vec::with_capacity(k);
            for &w in qubits {
                let (seg, new) = key
                    .records
                    .iter()
                    .find_map(|r| match r {
                        KeyRecord::WireUpdate {
                            segment,
                            gate: g,
                            wire,
                            params,
                        } if *g == gate && *wire == w => Some((*segment, *params)),
                        _ => None,
                    })
                    .ok_or_else(|| {
                        ObfuscateError::KeyMismatch(format!(
                            "no basis update for `{label}` on wire {w}"
                        ))
                    })?;
                let old = key
                    .records
                    .iter()
                    .filter_map(|r| match r {
                        KeyRecord::WireInit {
                            segment,
                            wire,
                            params,
                        } if *segment == seg && *wire == w => Some(*params),
                        KeyRecord::WireUpdate {
                            segment,
                            gate: g,
                            wire,
                            params,
                        } if *segment == seg && *wire == w && *g < gate => Some(*params),
                        _ => None,
                    })
                    .next_back()
                    .ok_or_else(|| {
                        ObfuscateError::KeyMismatch(format!("no prior basis for wire {w}"))
                    })?;
                after.push(u3_matrix(new.inverse()));
                before.push(u3_matrix(old));
            }
            Ok(conjugate_gate(matrix, &after, &before)?)
        }
        ObfuscationMode::SubsetSandwich { .. } => {
            let p = key
                .records
                .iter()
                .find_map(|r| match r {
                    KeyRecord::Protected { gate: g, params } if *g == gate => Some(*params),
                    _ => None,
                })
                .ok_or_else(|| ObfuscateError::UnknownLabel(label.clone()))?;
            let a = u3_matrix(p);
            let a_dag = u3_matrix(p.inverse());
            Ok(conjugate_gate(matrix, &vec![a_dag; k], &vec![a; k])?)
        }
    }
}

/// A standard gate matching a matrix up to global phase.
#[derive(Debug, Clone, PartialEq)]
pub struct GateMatch {
    pub name: &'static str,
    pub params: Vec<f64>,
}

const FIXED_1Q: &[&str] = &["id", "x", "y", "z", "h", "s", "sdg", "t", "tdg"];
const FIXED_2Q: &[&str] = &["cx", "cz", "swap"];

fn matches(m: &DenseMatrix, name: &str, params: &[f64]) -> bool {
    let g = standard_gate_matrix(name, params).expect("table gate");
    equal_up_to_global_phase(m, &g, RECOGNIZE_TOL).unwrap_or(false)
}

fn is_diagonal(m: &DenseMatrix) -> bool {
    (0..m.rows()).all(|r| (0..m.cols()).all(|c| r == c || m.get(r, c).norm() <= RECOGNIZE_TOL))
}

fn rel_phase(a: Complex64, b: Complex64) -> f64 {
    (b / a).arg()
}

/// Probes whether `m` is recognizable as a named gate from the standard set,
/// up to global phase. Fixed gates are tried first, then the rotation
/// families `p`, `rx`, `ry` (one qubit) and `rzz`, `cp` (two qubits). The
/// general `u3` family is never reported since it covers every 2x2 unitary.
pub fn recognize_gate(m: &DenseMatrix) -> Result<Option<GateMatch>, ObfuscateError> {
    let err = m.unitarity_error();
    if !m.is_square() || err > COMPOSED_TOL {
        return Err(ObfuscateError::NotUnitary(err));
    }
    let found =
        |name: &'static str, params: Vec<f64>| -> Result<Option<GateMatch>, ObfuscateError> {
            Ok(Some(GateMatch { name, params }))
        };
    match m.qubit_arity() {
        Some(1) => {
            for &name in FIXED_1Q {
                if matches(m, name, &[]) {
                    return found(name, vec![]);
                }
            }
            if is_diagonal(m) {
                let lambda = rel_phase(m.get(0, 0), m.get(1, 1));
                if matches(m, "p", &[lambda]) {
                    return found("p", vec![lambda]);
                }
            }
            let theta = 2.0 * m.get(1, 0).norm().atan2(m.get(0, 0).norm());
            for name in ["rx", "ry"] {
                for t in [theta, -theta] {
                    if matches(m, name, &[t]) {
                        return found(name, vec![t]);
                    }
                }
            }
            Ok(None)
        }
        Some(2) => {
            for &name in FIXED_2Q {
                if matches(m, name, &[]) {
                    return found(name, vec![]);
                }
            }
            // cx with the control on slot 1
            let flipped = standard_gate_matrix("cx", &[])?;
            let swap = standard_gate_matrix("swap", &[])?;
            let reversed = matmul(&matmul(&swap, &flipped)?, &swap)?;
            if equal_up_to_global_phase(m, &reversed, RECOGNIZE_TOL)? {
                return found("cx", vec![]);
            }
            if is_diagonal(m) {
                let d0 = m.get(0, 0);
                let theta = rel_phase(d0, m.get(1, 1));
                if matches(m, "rzz", &[theta]) {
                    return found("rzz", vec![theta]);
                }
                let lambda = rel_phase(d0, m.get(3, 3));
                if matches(m, "cp", &[lambda]) {
                    return found("cp", vec![lambda]);
                }
            }
            Ok(None)
        }
        Some(3) if matches(m, "ccx", &[]) => found("ccx", vec![]),
        _ => Ok(None),
    }
}
