//! Textbook benchmark circuits.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::circuit::{Circuit, CircuitError};

use super::BenchError;

/// Edges of the default 5-node MaxCut instance.
pub const QAOA_EDGES: &[(usize, usize)] = &[(0, 1), (1, 2), (1, 3), (3, 4), (2, 4)];
pub const QAOA_GAMMA: f64 = 0.865;
pub const QAOA_BETA: f64 = 0.457;
pub const VQE_ANGLES: &[f64] = &[0.31, 1.17, 2.03, 0.72, 1.48, 0.44, 2.61, 0.95];

#[derive(Debug, Clone, PartialEq)]
pub enum Generator {
    Bell,
    Ghz {
        k: usize,
    },
    /// CCX on `|110>` (qubits 0 and 1 set).
    Toffoli,
    Bv {
        secret: String,
    },
    Dj {
        n: usize,
        balanced: bool,
    },
    Grover3 {
        marked: String,
    },
    PhaseKickback,
    Qft {
        k: usize,
    },
    Simon {
        secret: String,
    },
    QaoaMaxcut {
        edges: Vec<(usize, usize)>,
        gamma: f64,
        beta: f64,
        /// Emit one `rzz` per edge instead of `cx rz cx`.
        fused_rzz: bool,
    },
    VqeAnsatz {
        k: usize,
        angles: Vec<f64>,
    },
    ShorMod15Order,
    /// Measure and reset in the middle, giving three unitary segments.
    MidCircuit,
}

impl Generator {
    pub fn qaoa_default() -> Self {
        Generator::QaoaMaxcut {
            edges: QAOA_EDGES.to_vec(),
            gamma: QAOA_GAMMA,
            beta: QAOA_BETA,
            fused_rzz: false,
        }
    }

    pub fn vqe_default() -> Self {
        Generator::VqeAnsatz {
            k: 4,
            angles: VQE_ANGLES.to_vec(),
        }
    }

    /// Short display name used in tables.
    pub fn label(&self) -> String {
        match self {
            Generator::Bell => "Bell".into(),
            Generator::Ghz { k } => format!("GHZ({k})"),
            Generator::Toffoli => "Toffoli".into(),
            Generator::Bv { secret } => format!("BV({secret})"),
            Generator::Dj { balanced, .. } => {
                format!("DJ({})", if *balanced { "balanced" } else { "constant" })
            }
            Generator::Grover3 { marked } => format!("Grover ({marked})"),
            Generator::PhaseKickback => "Phase Kickback".into(),
            Generator::Qft { .. } => "QFT".into(),
            Generator::Simon { .. } => "Simon".into(),
            Generator::QaoaMaxcut { .. } => "QAOA".into(),
            Generator::VqeAnsatz { .. } => "VQE".into(),
            Generator::ShorMod15Order => "Shor".into(),
            Generator::MidCircuit => "Mid-circuit".into(),
        }
    }

    /// Single outcome every shot must produce, when there is one.
    pub fn expected_outcome(&self) -> Option<String> {
        match self {
            Generator::Toffoli => Some("111".into()),
            Generator::Bv { secret } => Some(secret.clone()),
            Generator::Dj { n, balanced } => Some(if *balanced { "1" } else { "0" }.repeat(*n)),
            Generator::PhaseKickback => Some("1111".into()),
            _ => None,
        }
    }

    /// Outcomes expected to carry the highest probability.
    pub fn expected_top(&self) -> Option<Vec<String>> {
        match self {
            Generator::Bell => Some(vec!["00".into(), "11".into()]),
            Generator::Grover3 { marked } => Some(vec![marked.clone()]),
            Generator::QaoaMaxcut { edges, .. } if edges.as_slice() == QAOA_EDGES => {
                Some(vec!["01001".into(), "10110".into()])
            }
            Generator::ShorMod15Order => Some(
                ["000", "010", "100", "110"]
                    .iter()
                    .map(|s| s.to_string())
                    .collect(),
            ),
            _ => self.expected_outcome().map(|o| vec![o]),
        }
    }

    pub fn generate(&self) -> Result<Circuit, BenchError> {
        let c = match self {
            Generator::Bell => ghz(2)?,
            Generator::Ghz { k } => {
                if *k < 2 {
                    return Err(BenchError::BadParam(format!("ghz needs k >= 2, got {k}")));
                }
                ghz(*k)?
            }
            Generator::Toffoli => toffoli()?,
            Generator::Bv { secret } => bv(&bits(secret)?)?,
            Generator::Dj { n, balanced } => {
                if *n == 0 {
                    return Err(BenchError::BadParam("dj needs at least one input".into()));
                }
                dj(*n, *balanced)?
            }
            Generator::Grover3 { marked } => {
                let m = bits(marked)?;
                if m.len() != 3 {
                    return Err(BenchError::BadParam(format!(
                        "grover3 marks a 3-bit string, got `{marked}`"
                    )));
                }
                grover3(&m)?
            }
            Generator::PhaseKickback => phase_kickback()?,
            Generator::Qft { k } => {
                if *k == 0 {
                    return Err(BenchError::BadParam("qft needs k >= 1".into()));
                }
                qft(*k)?
            }
            Generator::Simon { secret } => {
                let s = bits(secret)?;
                if !s.contains(&true) {
                    return Err(BenchError::BadParam("simon secret must be non-zero".into()));
                }
                simon(&s)?
            }
            Generator::QaoaMaxcut {
                edges,
                gamma,
                beta,
                fused_rzz,
            } => {
                if edges.is_empty() || edges.iter().any(|(a, b)| a == b) {
                    return Err(BenchError::BadParam(
                        "qaoa needs a non-empty simple edge list".into(),
                    ));
                }
                qaoa(edges, *gamma, *beta, *fused_rzz)?
            }
            Generator::VqeAnsatz { k, angles } => {
                if *k == 0 || angles.len() != 2 * k {
                    return Err(BenchError::BadParam(format!(
                        "vqe with k = {k} needs {} angles, got {}",
                        2 * k,
                        angles.len()
                    )));
                }
                vqe(*k, angles)?
            }
            Generator::ShorMod15Order => shor_mod15()?,
            Generator::MidCircuit => midcircuit()?,
        };
        Ok(c)
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Generator::Bell => f.write_str("bell"),
            Generator::Ghz { k } => write!(f, "ghz:{k}"),
            Generator::Toffoli => f.write_str("toffoli"),
            Generator::Bv { secret } => write!(f, "bv:{secret}"),
            Generator::Dj { n, balanced } => {
                write!(
                    f,
                    "dj:{n}:{}",
                    if *balanced { "balanced" } else { "constant" }
                )
            }
            Generator::Grover3 { marked } => write!(f, "grover3:{marked}"),
            Generator::PhaseKickback => f.write_str("phase_kickback"),
            Generator::Qft { k } => write!(f, "qft:{k}"),
            Generator::Simon { secret } => write!(f, "simon:{secret}"),
            Generator::QaoaMaxcut { .. } => f.write_str("qaoa_maxcut"),
            Generator::VqeAnsatz { k, .. } => write!(f, "vqe_ansatz:{k}"),
            Generator::ShorMod15Order => f.write_str("shor_mod15_order"),
            Generator::MidCircuit => f.write_str("midcircuit"),
        }
    }
}

impl FromStr for Generator {
    type Err = BenchError;

    /// `name[:arg[:arg]]`, e.g. `ghz:5`, `bv:1011`, `dj:3:constant`,
    /// `qaoa_maxcut:fused`. Omitted arguments take the defaults.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut parts = s.split(':');
        let name = parts.next().unwrap_or_default();
        let args: Vec<&str> = parts.collect();
        let arg = |i: usize| args.get(i).copied();
        let num = |i: usize, default: usize| -> Result<usize, BenchError> {
            arg(i).map_or(Ok(default), |a| {
                a.parse()
                    .map_err(|_| BenchError::BadParam(format!("`{a}` is not a count")))
            })
        };
        let g = match name {
            "bell" => Generator::Bell,
            "ghz" => Generator::Ghz { k: num(0, 3)? },
            "toffoli" => Generator::Toffoli,
            "bv" => Generator::Bv {
                secret: arg(0).unwrap_or("1011").into(),
            },
            "dj" => Generator::Dj {
                n: num(0, 3)?,
                balanced: match arg(1).unwrap_or("balanced") {
                    "balanced" => true,
                    "constant" => false,
                    other => return Err(BenchError::BadParam(format!("dj oracle `{other}`"))),
                },
            },
            "grover3" | "grover" => Generator::Grover3 {
                marked: arg(0).unwrap_or("101").into(),
            },
            "phase_kickback" => Generator::PhaseKickback,
            "qft" => Generator::Qft { k: num(0, 4)? },
            "simon" => Generator::Simon {
                secret: arg(0).unwrap_or("110").into(),
            },
            "qaoa_maxcut" | "qaoa" => {
                let mut g = Generator::qaoa_default();
                if let Generator::QaoaMaxcut { fused_rzz, .. } = &mut g {
                    *fused_rzz = arg(0) == Some("fused");
                }
                g
            }
            "vqe_ansatz" | "vqe" => match arg(0) {
                None => Generator::vqe_default(),
                Some(_) => {
                    let k = num(0, 4)?;
                    Generator::VqeAnsatz {
                        k,
                        angles: (0..2 * k)
                            .map(|i| VQE_ANGLES[i % VQE_ANGLES.len()])
                            .collect(),
                    }
                }
            },
            "shor_mod15_order" | "shor" => Generator::ShorMod15Order,
            "midcircuit" => Generator::MidCircuit,
            _ => return Err(BenchError::UnknownBenchmark(s.to_owned())),
        };
        Ok(g)
    }
}

/// `generate` for a textual benchmark name such as `bv:1011`.
pub fn generate(name: &str) -> Result<Circuit, BenchError> {
    name.parse::<Generator>()?.generate()
}

/// The ten circuits of the evaluation table, in table order.
pub fn standard_suite() -> Vec<Generator> {
    vec![
        Generator::Bv {
            secret: "1011".into(),
        },
        Generator::Dj {
            n: 3,
            balanced: true,
        },
        Generator::Grover3 {
            marked: "101".into(),
        },
        Generator::PhaseKickback,
        Generator::qaoa_default(),
        Generator::Qft { k: 4 },
        Generator::ShorMod15Order,
        Generator::Simon {
            secret: "110".into(),
        },
        Generator::Toffoli,
        Generator::vqe_default(),
    ]
}

/// Bit string to per-qubit flags, rightmost character = qubit 0.
fn bits(s: &str) -> Result<Vec<bool>, BenchError> {
    if s.is_empty() || !s.chars().all(|c| c == '0' || c == '1') {
        return Err(BenchError::BadParam(format!("`{s}` is not a bit string")));
    }
    Ok(s.chars().rev().map(|c| c == '1').collect())
}

type R = Result<Circuit, CircuitError>;

fn ghz(k: usize) -> R {
    let mut c = Circuit::new(k, k);
    c.h(0)?;
    for q in 1..k {
        c.cx(q - 1, q)?;
    }
    c.measure_all()?;
    Ok(c)
}

fn toffoli() -> R {
    let mut c = Circuit::new(3, 3);
    c.x(0)?.x(1)?.gate("ccx", &[], &[0, 1, 2])?.measure_all()?;
    Ok(c)
}

fn bv(secret: &[bool]) -> R {
    let n = secret.len();
    let mut c = Circuit::new(n + 1, n);
    c.x(n)?;
    for q in 0..=n {
        c.h(q)?;
    }
    for (q, &b) in secret.iter().enumerate() {
        if b {
            c.cx(q, n)?;
        }
    }
    for q in 0..n {
        c.h(q)?;
    }
    for q in 0..n {
        c.measure(q, q)?;
    }
    Ok(c)
}

fn dj(n: usize, balanced: bool) -> R {
    let mut c = Circuit::new(n + 1, n);
    c.x(n)?;
    for q in 0..=n {
        c.h(q)?;
    }
    if balanced {
        // parity oracle
        for q in 0..n {
            c.cx(q, n)?;
        }
    }
    for q in 0..n {
        c.h(q)?;
    }
    for q in 0..n {
        c.measure(q, q)?;
    }
    Ok(c)
}

fn ccz(c: &mut Circuit, a: usize, b: usize, t: usize) -> Result<(), CircuitError> {
    c.h(t)?.gate("ccx", &[], &[a, b, t])?.h(t)?;
    Ok(())
}

fn grover3(marked: &[bool]) -> R {
    let mut c = Circuit::new(3, 3);
    for q in 0..3 {
        c.h(q)?;
    }
    for _ in 0..2 {
        for (q, &b) in marked.iter().enumerate() {
            if !b {
                c.x(q)?;
            }
        }
        ccz(&mut c, 0, 1, 2)?;
        for (q, &b) in marked.iter().enumerate() {
            if !b {
                c.x(q)?;
            }
        }
        for q in 0..3 {
            c.h(q)?.x(q)?;
        }
        ccz(&mut c, 0, 1, 2)?;
        for q in 0..3 {
            c.x(q)?.h(q)?;
        }
    }
    c.measure_all()?;
    Ok(c)
}

fn phase_kickback() -> R {
    let mut c = Circuit::new(4, 4);
    c.x(3)?.h(3)?;
    for q in 0..3 {
        c.h(q)?;
    }
    for q in 0..3 {
        c.cx(q, 3)?;
    }
    for q in 0..4 {
        c.h(q)?;
    }
    c.measure_all()?;
    Ok(c)
}

fn qft(k: usize) -> R {
    let mut c = Circuit::new(k, k);
    // a basis state input spreads uniformly over all outcomes
    for q in (0..k).step_by(2) {
        c.x(q)?;
    }
    for j in (0..k).rev() {
        c.h(j)?;
        for m in (0..j).rev() {
            c.gate("cp", &[PI / (1u64 << (j - m)) as f64], &[m, j])?;
        }
    }
    c.measure_all()?;
    Ok(c)
}

fn simon(secret: &[bool]) -> R {
    let n = secret.len();
    let mut c = Circuit::new(2 * n, n);
    for q in 0..n {
        c.h(q)?;
    }
    for q in 0..n {
        c.cx(q, n + q)?;
    }
    let pivot = secret.iter().position(|&b| b).expect("non-zero secret");
    for (q, &b) in secret.iter().enumerate() {
        if b {
            c.cx(pivot, n + q)?;
        }
    }
    for q in 0..n {
        c.h(q)?;
    }
    for q in 0..n {
        c.measure(q, q)?;
    }
    Ok(c)
}

fn qaoa(edges: &[(usize, usize)], gamma: f64, beta: f64, fused: bool) -> R {
    let n = edges.iter().map(|&(a, b)| a.max(b)).max().unwrap_or(0) + 1;
    let mut c = Circuit::new(n, n);
    for q in 0..n {
        c.h(q)?;
    }
    // cost unitary exp(-i gamma C) with C = sum (1 - Z_a Z_b) / 2,
    // which is rzz(-gamma) per edge up to global phase
    for &(a, b) in edges {
        if fused {
            c.gate("rzz", &[-gamma], &[a, b])?;
        } else {
            c.cx(a, b)?.gate("rz", &[-gamma], &[b])?.cx(a, b)?;
        }
    }
    for q in 0..n {
        c.gate("rx", &[2.0 * beta], &[q])?;
    }
    // node 0 is the leftmost character of the outcome string
    for q in 0..n {
        c.measure(q, n - 1 - q)?;
    }
    Ok(c)
}

fn vqe(k: usize, angles: &[f64]) -> R {
    let mut c = Circuit::new(k, k);
    let (first, second) = angles.split_at(k);
    for (q, &a) in first.iter().enumerate() {
        c.gate("ry", &[a], &[q])?;
    }
    for q in 1..k {
        c.cx(q - 1, q)?;
    }
    for (q, &a) in second.iter().enumerate() {
        c.gate("ry", &[a], &[q])?;
    }
    c.measure_all()?;
    Ok(c)
}

fn cswap(c: &mut Circuit, ctrl: usize, a: usize, b: usize) -> Result<(), CircuitError> {
    c.cx(b, a)?.gate("ccx", &[], &[ctrl, a, b])?.cx(b, a)?;
    Ok(())
}

fn swap3(c: &mut Circuit, a: usize, b: usize) -> Result<(), CircuitError> {
    c.cx(a, b)?.cx(b, a)?.cx(a, b)?;
    Ok(())
}

/// Order finding for `a = 7`, `N = 15`: three counting qubits (0..3) and a
/// four-qubit work register (3..7) holding `|1>`.
fn shor_mod15() -> R {
    let mut c = Circuit::new(7, 3);
    let work = [3, 4, 5, 6];
    c.x(work[0])?;
    for q in 0..3 {
        c.h(q)?;
    }
    for ctrl in 0..3 {
        for _ in 0..1 << ctrl {
            // controlled multiplication by 7 mod 15
            cswap(&mut c, ctrl, work[2], work[3])?;
            cswap(&mut c, ctrl, work[1], work[2])?;
            cswap(&mut c, ctrl, work[0], work[1])?;
            for &w in &work {
                c.cx(ctrl, w)?;
            }
        }
    }
    // inverse QFT on the counting register
    swap3(&mut c, 0, 2)?;
    for j in 0..3 {
        for m in 0..j {
            c.gate("cp", &[-PI / (1u64 << (j - m)) as f64], &[m, j])?;
        }
        c.h(j)?;
    }
    for q in 0..3 {
        c.measure(q, q)?;
    }
    Ok(c)
}

fn midcircuit() -> R {
    let mut c = Circuit::new(3, 3);
    c.gate("ry", &[0.8], &[0])?.h(1)?.cx(1, 2)?.cx(0, 1)?.h(0)?;
    c.measure(0, 0)?.measure(1, 1)?;
    c.gate("ry", &[0.3], &[2])?.cx(2, 0)?;
    c.reset(1)?;
    c.h(1)?.cx(1, 2)?.measure(2, 2)?;
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{probabilities, run};

    fn top(c: &Circuit, k: usize) -> Vec<String> {
        let p = probabilities(c).unwrap();
        let mut v: Vec<(String, f64)> = p.into_iter().collect();
        v.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        let mut out: Vec<String> = v.into_iter().take(k).map(|(s, _)| s).collect();
        out.sort();
        out
    }

    #[test]
    fn deterministic_benchmarks() {
        for g in [
            "bv:1011",
            "dj:3:balanced",
            "phase_kickback",
            "toffoli",
            "bv:110101",
        ] {
            let g: Generator = g.parse().unwrap();
            let c = g.generate().unwrap();
            let want = g.expected_outcome().unwrap();
            assert_eq!(run(&c, 1024, 17).unwrap().get(&want), 1024, "{g}");
        }
        let c = generate("dj:4:constant").unwrap();
        assert_eq!(run(&c, 64, 0).unwrap().get("0000"), 64);
    }

    #[test]
    fn qaoa_peaks_at_the_optimal_cuts() {
        assert_eq!(top(&generate("qaoa").unwrap(), 2), ["01001", "10110"]);
        let fused = generate("qaoa:fused").unwrap();
        let p1 = probabilities(&fused).unwrap();
        let p2 = probabilities(&generate("qaoa").unwrap()).unwrap();
        for (k, v) in &p1 {
            assert!((v - p2[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn optimal_cuts_cut_every_edge_possible() {
        let cut = |s: &str| {
            let node = |i: usize| s.as_bytes()[i];
            QAOA_EDGES
                .iter()
                .filter(|&&(a, b)| node(a) != node(b))
                .count()
        };
        assert_eq!(cut("01001"), 5);
        assert_eq!(cut("10110"), 5);
    }

    #[test]
    fn grover_amplifies_the_marked_state() {
        let p = probabilities(&generate("grover3:101").unwrap()).unwrap();
        assert!((p["101"] - 0.9453125).abs() < 1e-9);
        assert_eq!(top(&generate("grover3:011").unwrap(), 1), ["011"]);
    }

    #[test]
    fn qft_and_simon_distributions() {
        let p = probabilities(&generate("qft:4").unwrap()).unwrap();
        assert_eq!(p.len(), 16);
        assert!(p.values().all(|v| (v - 1.0 / 16.0).abs() < 1e-12));

        let p = probabilities(&generate("simon:110").unwrap()).unwrap();
        assert_eq!(p.len(), 4);
        for (y, v) in &p {
            assert!((v - 0.25).abs() < 1e-12);
            // y . s = 0 mod 2 with s = 110
            let dot = y
                .chars()
                .zip("110".chars())
                .filter(|&(a, b)| a == '1' && b == '1')
                .count();
            assert_eq!(dot % 2, 0, "{y}");
        }
    }

    #[test]
    fn shor_finds_period_four() {
        let p = probabilities(&generate("shor").unwrap()).unwrap();
        let keys: Vec<&str> = p
            .iter()
            .filter(|(_, &v)| v > 1e-9)
            .map(|(k, _)| k.as_str())
            .collect();
        assert_eq!(keys, ["000", "010", "100", "110"]);
        assert!(p
            .values()
            .filter(|&&v| v > 1e-9)
            .all(|v| (v - 0.25).abs() < 1e-9));
    }

    #[test]
    fn bell_ghz_vqe_midcircuit() {
        assert_eq!(top(&generate("bell").unwrap(), 2), ["00", "11"]);
        let p = probabilities(&generate("ghz:4").unwrap()).unwrap();
        assert_eq!(p.len(), 2);
        let v = generate("vqe").unwrap();
        assert_eq!(v.num_qubits(), 4);
        let total: f64 = probabilities(&v).unwrap().values().sum();
        assert!((total - 1.0).abs() < 1e-10);
        let m = generate("midcircuit").unwrap();
        assert_eq!(m.segment().len(), 3);
    }

    #[test]
    fn suite_circuits_are_single_segment_without_swap_or_id() {
        for g in standard_suite() {
            let c = g.generate().unwrap();
            assert!(c
                .instructions()
                .iter()
                .all(|i| i.name() != "swap" && i.name() != "id"));
            assert_eq!(c.segment().len(), 1, "{g}");
        }
    }

    #[test]
    fn parameter_errors() {
        assert!(matches!(
            generate("nope"),
            Err(BenchError::UnknownBenchmark(_))
        ));
        assert!(matches!(generate("bv:10a1"), Err(BenchError::BadParam(_))));
        assert!(matches!(generate("ghz:1"), Err(BenchError::BadParam(_))));
        assert!(matches!(
            generate("simon:000"),
            Err(BenchError::BadParam(_))
        ));
        assert!(matches!(
            generate("grover3:10"),
            Err(BenchError::BadParam(_))
        ));
        assert!(matches!(
            generate("dj:3:weird"),
            Err(BenchError::BadParam(_))
        ));
        let bad_vqe = Generator::VqeAnsatz {
            k: 2,
            angles: vec![0.1],
        };
        assert!(bad_vqe.generate().is_err());
    }

    #[test]
    fn names_round_trip() {
        for g in standard_suite() {
            let again: Generator = g.to_string().parse().unwrap();
            assert_eq!(again.generate().unwrap(), g.generate().unwrap());
        }
    }
}
