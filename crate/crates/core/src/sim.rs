//! Noise-free statevector simulation with shot sampling.
//!
//! Circuits whose measurements are all terminal (no reset, nothing but
//! measures and barriers after the first measure) are sampled directly from
//! the exact outcome distribution. Anything else is run shot by shot with
//! Born-rule collapse. Shots are processed in fixed chunks with derived
//! seeds, so results depend only on the master seed.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng as _;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{Circuit, CircuitError, Instruction};
use crate::exec::{derive_seed, map_indexed, rng_from_seed, Execution, Rng};
use crate::gates::GateError;
use crate::linalg::{DenseMatrix, ZERO};

pub const DEFAULT_MAX_QUBITS: usize = 14;
pub const DEFAULT_MAX_BRANCHES: usize = 1 << 12;
/// Environment variable overriding [`DEFAULT_MAX_QUBITS`].
pub const MAX_QUBITS_ENV: &str = "QOBF_MAX_QUBITS";
/// Shots per independently seeded work unit.
pub const SHOT_CHUNK: u64 = 256;
/// Outcomes below this probability are skipped when sampling.
const SAMPLE_PRUNE: f64 = 1e-12;
/// Branches below this weight are dropped by the exact branching path.
const BRANCH_PRUNE: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error(
        "{num_qubits} qubits exceeds the simulator cap of {cap} (set {MAX_QUBITS_ENV} to raise it)"
    )]
    TooManyQubits { num_qubits: usize, cap: usize },
    #[error("{0} classical bits exceed the supported maximum of 64")]
    TooManyClbits(usize),
    #[error("exact evaluation needs more than {cap} measurement branches")]
    BranchCap { cap: usize },
    #[error("shots must be at least 1")]
    ZeroShots,
    #[error("operator of dimension {dim} does not fit {arity} qubit(s)")]
    Dimension { dim: usize, arity: usize },
    #[error("qubit {0} is out of range or repeated")]
    BadQubit(usize),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Gate(#[from] GateError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimConfig {
    pub max_qubits: usize,
    pub max_branches: usize,
    pub execution: Execution,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            max_qubits: DEFAULT_MAX_QUBITS,
            max_branches: DEFAULT_MAX_BRANCHES,
            execution: Execution::Sequential,
        }
    }
}

impl SimConfig {
    /// Default configuration with the qubit cap taken from
    /// `QOBF_MAX_QUBITS` when it holds a positive integer.
    pub fn from_env() -> Self {
        let mut cfg = Self::default();
        if let Some(cap) = std::env::var(MAX_QUBITS_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .filter(|&v| v > 0)
        {
            cfg.max_qubits = cap;
        }
        cfg
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }
}

/// Amplitudes of an `n`-qubit register; index bit `i` is qubit `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Statevector {
    num_qubits: usize,
    amps: Vec<Complex64>,
}

impl Statevector {
    /// `|0...0>`.
    pub fn new(num_qubits: usize) -> Self {
        let mut amps = vec![ZERO; 1 << num_qubits];
        amps[0] = Complex64::new(1.0, 0.0);
        Self { num_qubits, amps }
    }

    /// Wraps raw amplitudes; the length must be a power of two.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Option<Self> {
        let n = amps.len();
        (n.is_power_of_two()).then(|| Self {
            num_qubits: n.trailing_zeros() as usize,
            amps,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Applies `m` to `qubits` (slot 0 least significant).
    pub fn apply_unitary(&mut self, m: &DenseMatrix, qubits: &[usize]) -> Result<(), SimError> {
        let k = qubits.len();
        if k == 0 || m.shape() != (1 << k, 1 << k) {
            return Err(SimError::Dimension {
                dim: m.rows(),
                arity: k,
            });
        }
        for (i, &q) in qubits.iter().enumerate() {
            if q >= self.num_qubits || qubits[..i].contains(&q) {
                return Err(SimError::BadQubit(q));
            }
        }
        apply_kernel(&mut self.amps, m, qubits);
        Ok(())
    }

    /// Probability that measuring `qubit` yields 1.
    pub fn prob_one(&self, qubit: usize) -> f64 {
        let bit = 1usize << qubit;
        self.amps
            .iter()
            .enumerate()
            .filter(|(i, _)| i & bit != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    /// Projects `qubit` onto `outcome` and renormalizes; `p` is the
    /// probability of that outcome.
    fn collapse(&mut self, qubit: usize, outcome: bool, p: f64) {
        let bit = 1usize << qubit;
        let scale = 1.0 / p.sqrt();
        for (i, a) in self.amps.iter_mut().enumerate() {
            if (i & bit != 0) == outcome {
                *a *= scale;
            } else {
                *a = ZERO;
            }
        }
    }

    /// Moves the amplitude of a qubit known to be `|1>` onto `|0>`.
    fn flip_to_zero(&mut self, qubit: usize) {
        let bit = 1usize << qubit;
        for i in 0..self.amps.len() {
            if i & bit != 0 {
                self.amps[i ^ bit] = self.amps[i];
                self.amps[i] = ZERO;
            }
        }
    }
}

fn apply_kernel(amps: &mut [Complex64], m: &DenseMatrix, qubits: &[usize]) {
    let dim = 1usize << qubits.len();
    let offsets: Vec<usize> = (0..dim)
        .map(|j| {
            qubits
                .iter()
                .enumerate()
                .map(|(slot, &q)| ((j >> slot) & 1) << q)
                .sum()
        })
        .collect();
    let mask = offsets[dim - 1];
    let data = m.data();
    let mut buf = vec![ZERO; dim];
    for base in 0..amps.len() {
        if base & mask != 0 {
            continue;
        }
        for (b, &off) in buf.iter_mut().zip(&offsets) {
            *b = amps[base + off];
        }
        for (r, &off) in offsets.iter().enumerate() {
            let row = &data[r * dim..(r + 1) * dim];
            amps[base + off] = row.iter().zip(&buf).map(|(x, y)| x * y).sum();
        }
    }
}

/// Measurement histogram keyed by bit strings with classical bit 0 rightmost.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Counts {
    pub shots: u64,
    pub counts: BTreeMap<String, u64>,
}

impl Counts {
    pub fn get(&self, key: &str) -> u64 {
        self.counts.get(key).copied().unwrap_or(0)
    }

    /// Sum of all entries; equals `shots` for simulator output.
    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    /// Outcomes by decreasing count, ties broken by bit string.
    pub fn ranked(&self) -> Vec<(&str, u64)> {
        let mut v: Vec<(&str, u64)> = self.counts.iter().map(|(k, &c)| (k.as_str(), c)).collect();
        v.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        v
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("counts always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// `bitstring,count` lines with a header, in bit-string order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bitstring,count\n");
        for (k, c) in &self.counts {
            out.push_str(&format!("{k},{c}\n"));
        }
        out
    }
}

/// Exact outcome distribution keyed like [`Counts`].
pub type Distribution = BTreeMap<String, f64>;

pub fn bitstring(value: u64, width: usize) -> String {
    (0..width)
        .rev()
        .map(|b| if value >> b & 1 == 1 { '1' } else { '0' })
        .collect()
}

enum Op {
    Apply(DenseMatrix, Vec<usize>),
    Measure(usize, usize),
    Reset(usize),
}

struct Compiled {
    num_qubits: usize,
    num_clbits: usize,
    ops: Vec<Op>,
    /// Index of the first measure when every measurement is terminal.
    terminal_from: Option<usize>,
}

fn compile(c: &Circuit, cfg: &SimConfig) -> Result<Compiled, SimError> {
    if c.num_qubits() > cfg.max_qubits {
        return Err(SimError::TooManyQubits {
            num_qubits: c.num_qubits(),
            cap: cfg.max_qubits,
        });
    }
    if c.num_clbits() > 64 {
        return Err(SimError::TooManyClbits(c.num_clbits()));
    }
    let mut ops = Vec::with_capacity(c.len());
    for instr in c.instructions() {
        match instr {
            Instruction::Barrier { .. } => {}
            Instruction::Measure { qubit, clbit } => ops.push(Op::Measure(*qubit, *clbit)),
            Instruction::Reset { qubit } => ops.push(Op::Reset(*qubit)),
            gate => ops.push(Op::Apply(
                gate.operator().expect("gate-like")?,
                gate.qubits().to_vec(),
            )),
        }
    }
    let first_measure = ops.iter().position(|o| matches!(o, Op::Measure(..)));
    let terminal = !ops.iter().any(|o| matches!(o, Op::Reset(_)))
        && first_measure.is_none_or(|f| ops[f..].iter().all(|o| matches!(o, Op::Measure(..))));
    Ok(Compiled {
        num_qubits: c.num_qubits(),
        num_clbits: c.num_clbits(),
        terminal_from: terminal.then(|| first_measure.unwrap_or(ops.len())),
        ops,
    })
}

impl Compiled {
    /// Runs gates up to the first non-gate op; returns the state and the
    /// index of that op.
    fn prefix_state(&self) -> (Statevector, usize) {
        let mut sv = Statevector::new(self.num_qubits);
        let mut i = 0;
        while let Some(Op::Apply(m, q)) = self.ops.get(i) {
            apply_kernel(&mut sv.amps, m, q);
            i += 1;
        }
        (sv, i)
    }

    /// Exact distribution over classical values for terminal measurements,
    /// in increasing value order.
    fn terminal_distribution(&self, from: usize) -> Vec<(u64, f64)> {
        let (sv, _) = self.prefix_state();
        // clbit <- qubit, last writer wins
        let mut source: Vec<Option<usize>> = vec![None; self.num_clbits];
        for op in &self.ops[from..] {
            if let Op::Measure(q, c) = op {
                source[*c] = Some(*q);
            }
        }
        let mut acc: BTreeMap<u64, f64> = BTreeMap::new();
        for (idx, a) in sv.amps.iter().enumerate() {
            let p = a.norm_sqr();
            if p == 0.0 {
                continue;
            }
            let value = source
                .iter()
                .enumerate()
                .filter_map(|(c, q)| q.map(|q| (((idx >> q) & 1) as u64) << c))
                .sum();
            *acc.entry(value).or_insert(0.0) += p;
        }
        acc.into_iter().collect()
    }

    fn branching_distribution(&self, max_branches: usize) -> Result<Vec<(u64, f64)>, SimError> {
        let (sv, start) = self.prefix_state();
        let mut branches = vec![(1.0f64, sv, 0u64)];
        for op in &self.ops[start..] {
            match op {
                Op::Apply(m, q) => {
                    for (_, sv, _) in &mut branches {
                        apply_kernel(&mut sv.amps, m, q);
                    }
                }
                Op::Measure(q, _) | Op::Reset(q) => {
                    let mut next = Vec::with_capacity(branches.len() * 2);
                    for (w, sv, bits) in branches {
                        let p1 = sv.prob_one(*q).clamp(0.0, 1.0);
                        for (outcome, p) in [(false, 1.0 - p1), (true, p1)] {
                            if w * p <= BRANCH_PRUNE {
                                continue;
                            }
                            let mut s = sv.clone();
                            s.collapse(*q, outcome, p);
                            let mut b = bits;
                            match op {
                                Op::Measure(_, c) => {
                                    b = (b & !(1 << c)) | ((outcome as u64) << c);
                                }
                                _ if outcome => s.flip_to_zero(*q),
                                _ => {}
                            }
                            next.push((w * p, s, b));
                        }
                    }
                    if next.len() > max_branches {
                        return Err(SimError::BranchCap { cap: max_branches });
                    }
                    branches = next;
                }
            }
        }
        let mut acc: BTreeMap<u64, f64> = BTreeMap::new();
        for (w, _, bits) in branches {
            *acc.entry(bits).or_insert(0.0) += w;
        }
        Ok(acc.into_iter().collect())
    }

    fn distribution(&self, cfg: &SimConfig) -> Result<Vec<(u64, f64)>, SimError> {
        match self.terminal_from {
            Some(from) => Ok(self.terminal_distribution(from)),
            None => self.branching_distribution(cfg.max_branches),
        }
    }

    fn trajectory(&self, start: &Statevector, from: usize, rng: &mut Rng) -> u64 {
        let mut sv = start.clone();
        let mut bits = 0u64;
        for op in &self.ops[from..] {
            match op {
                Op::Apply(m, q) => apply_kernel(&mut sv.amps, m, q),
                Op::Measure(q, _) | Op::Reset(q) => {
                    let p1 = sv.prob_one(*q).clamp(0.0, 1.0);
                    let outcome = rng.random::<f64>() < p1;
                    let p = if outcome { p1 } else { 1.0 - p1 };
                    sv.collapse(*q, outcome, p);
                    match op {
                        Op::Measure(_, c) => bits = (bits & !(1 << c)) | ((outcome as u64) << c),
                        _ if outcome => sv.flip_to_zero(*q),
                        _ => {}
                    }
                }
            }
        }
        bits
    }
}

/// Exact outcome distribution with the default configuration.
pub fn probabilities(c: &Circuit) -> Result<Distribution, SimError> {
    probabilities_with(c, &SimConfig::default())
}

/// Exact outcome distribution. Mid-circuit measure and reset are handled by
/// enumerating branches, at most `cfg.max_branches` at a time.
pub fn probabilities_with(c: &Circuit, cfg: &SimConfig) -> Result<Distribution, SimError> {
    let compiled = compile(c, cfg)?;
    Ok(compiled
        .distribution(cfg)?
        .into_iter()
        .map(|(v, p)| (bitstring(v, compiled.num_clbits), p))
        .collect())
}

/// Final state of a circuit, ignoring measurements. Resets are not allowed.
pub fn statevector(c: &Circuit) -> Result<Statevector, SimError> {
    if c.count_resets() > 0 {
        return Err(CircuitError::NonUnitaryInstruction.into());
    }
    let compiled = compile(&c.without_measurements(), &SimConfig::default())?;
    Ok(compiled.prefix_state().0)
}

/// Samples `shots` outcomes with the default configuration.
pub fn run(c: &Circuit, shots: u64, seed: u64) -> Result<Counts, SimError> {
    run_with(c, shots, seed, &SimConfig::default())
}

/// Samples `shots` outcomes. Equal seeds give identical counts under both
/// execution strategies.
pub fn run_with(c: &Circuit, shots: u64, seed: u64, cfg: &SimConfig) -> Result<Counts, SimError> {
    if shots == 0 {
        return Err(SimError::ZeroShots);
    }
    let compiled = compile(c, cfg)?;
    let chunks = shots.div_ceil(SHOT_CHUNK) as usize;
    let chunk_len = |i: usize| SHOT_CHUNK.min(shots - i as u64 * SHOT_CHUNK);

    let tallies: Vec<Vec<(u64, u64)>> = match compiled.terminal_from {
        Some(from) => {
            let dist: Vec<(u64, f64)> = compiled
                .terminal_distribution(from)
                .into_iter()
                .filter(|&(_, p)| p >= SAMPLE_PRUNE)
                .collect();
            let mut cdf = Vec::with_capacity(dist.len());
            let mut total = 0.0;
            for &(_, p) in &dist {
                total += p;
                cdf.push(total);
            }
            map_indexed(cfg.execution, chunks, |i| {
                let mut rng = rng_from_seed(derive_seed(seed, i as u64));
                let mut hits = vec![0u64; dist.len()];
                for _ in 0..chunk_len(i) {
                    let r = rng.random::<f64>() * total;
                    let k = cdf.partition_point(|&c| c <= r).min(dist.len() - 1);
                    hits[k] += 1;
                }
                dist.iter()
                    .zip(hits)
                    .filter(|&(_, h)| h > 0)
                    .map(|(&(v, _), h)| (v, h))
                    .collect()
            })
        }
        None => {
            let (start, from) = compiled.prefix_state();
            map_indexed(cfg.execution, chunks, |i| {
                let mut rng = rng_from_seed(derive_seed(seed, i as u64));
                let mut acc: BTreeMap<u64, u64> = BTreeMap::new();
                for _ in 0..chunk_len(i) {
                    *acc.entry(compiled.trajectory(&start, from, &mut rng))
                        .or_insert(0) += 1;
                }
                acc.into_iter().collect()
            })
        }
    };

    let mut merged: BTreeMap<u64, u64> = BTreeMap::new();
    for (v, h) in tallies.into_iter().flatten() {
        *merged.entry(v).or_insert(0) += h;
    }
    Ok(Counts {
        shots,
        counts: merged
            .into_iter()
            .map(|(v, h)| (bitstring(v, compiled.num_clbits), h))
            .collect(),
    })
}
