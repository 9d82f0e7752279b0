//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero when any criterion fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::Rng as _;

use qobf_core::bench::{
    qaoa_case_study, run_suite, standard_specs, BenchmarkSpec, Generator, SuiteOptions,
};
use qobf_core::circuit::{Circuit, Instruction};
use qobf_core::exec::rng_from_seed;
use qobf_core::gates::{gate_signature, SUPPORTED_GATES};
use qobf_core::interchange::{read_json, write_json};
use qobf_core::linalg::{adjoint, equal_up_to_global_phase, U3Params, COMPOSED_TOL};
use qobf_core::metrics::overhead;
use qobf_core::obfuscate::{
    is_block, obfuscate, obfuscate_global_with_params, recognize_gate, ObfuscationMode,
};
use qobf_core::qasm::{emit_qasm2, parse, zyz_to_u3};
use qobf_core::security::{blackbox_guess_probability, whitebox_profile};
use qobf_core::sim::{probabilities, SimConfig};

const SHOTS: u64 = 1024;
const RUNS: usize = 100;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn all_modes(m: usize) -> [ObfuscationMode; 3] {
    [
        ObfuscationMode::Global,
        ObfuscationMode::Chained,
        ObfuscationMode::SubsetSandwich { x: m / 2 },
    ]
}

fn random_params(rng: &mut impl rand::Rng) -> U3Params {
    U3Params::new(
        rng.random_range(0.0..PI),
        rng.random_range(0.0..2.0 * PI),
        rng.random_range(0.0..2.0 * PI),
    )
}

fn inverse_identity() -> Outcome {
    let start = Instant::now();
    let mut rng = rng_from_seed(1);
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let p = random_params(&mut rng);
        let d = p
            .inverse()
            .matrix()
            .max_abs_diff(&adjoint(&p.matrix()))
            .unwrap();
        worst = worst.max(d);
    }
    let t = start.elapsed();
    outcome(
        worst < 1e-12 && t < Duration::from_secs(1),
        format!("max error {worst:.2e}, {:.3} s", t.as_secs_f64()),
    )
}

fn random_circuit(rng: &mut impl rand::Rng) -> Circuit {
    let n = rng.random_range(1..=4);
    let mut c = Circuit::new(n, n);
    let gates: Vec<&str> = SUPPORTED_GATES
        .iter()
        .copied()
        .filter(|g| gate_signature(g).unwrap().num_qubits <= n)
        .collect();
    let len = rng.random_range(1..=20);
    for _ in 0..len {
        // occasional mid-circuit measurement splits the circuit into segments
        if rng.random_bool(0.1) {
            let q = rng.random_range(0..n);
            c.measure(q, q).unwrap();
            continue;
        }
        if rng.random_bool(0.05) {
            c.barrier(&(0..n).collect::<Vec<_>>()).unwrap();
        }
        let name = gates[rng.random_range(0..gates.len())];
        let sig = gate_signature(name).unwrap();
        let params: Vec<f64> = (0..sig.num_params)
            .map(|_| rng.random_range(-PI..PI))
            .collect();
        let mut qubits: Vec<usize> = (0..n).collect();
        for i in 0..sig.num_qubits {
            let j = rng.random_range(i..n);
            qubits.swap(i, j);
        }
        qubits.truncate(sig.num_qubits);
        c.gate(name, &params, &qubits).unwrap();
    }
    c.measure_all().unwrap();
    c
}

fn equivalence_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = rng_from_seed(2);
    let (mut checked, mut failures) = (0, 0);
    for _ in 0..200 {
        let c = random_circuit(&mut rng);
        let reference = c.without_measurements().to_unitary().unwrap();
        for mode in all_modes(c.gate_count()) {
            for seed in 0..3 {
                let obf = obfuscate(&c, mode, seed).unwrap();
                let u = obf.circuit.without_measurements().to_unitary().unwrap();
                checked += 1;
                if !equal_up_to_global_phase(&u, &reference, COMPOSED_TOL).unwrap() {
                    failures += 1;
                }
            }
        }
    }
    let t = start.elapsed();
    outcome(
        failures == 0 && t < Duration::from_secs(30),
        format!(
            "{failures} failures in {checked} checks, {:.2} s",
            t.as_secs_f64()
        ),
    )
}

fn suite_for(mode: ObfuscationMode, seed: u64) -> SuiteOptions {
    SuiteOptions {
        modes: vec![mode],
        shots: SHOTS,
        runs: RUNS,
        seed,
        jobs: 1,
        sim: SimConfig::default(),
    }
}

fn deterministic_rows() -> Outcome {
    let specs: Vec<BenchmarkSpec> = standard_specs()
        .into_iter()
        .filter(|s| s.expected_outcome.is_some())
        .collect();
    let mut bad = Vec::new();
    for spec in &specs {
        let m = spec.circuit().unwrap().gate_count();
        for mode in all_modes(m) {
            let opts = SuiteOptions {
                runs: 1,
                ..suite_for(mode, 3)
            };
            let row = &run_suite(std::slice::from_ref(spec), &opts).unwrap()[0];
            let r = &row.report;
            if format!("{:.2}", r.semantic_accuracy_percent) != "100.00"
                || format!("{:.4}", r.tvd) != "0.0000"
            {
                bad.push(format!("{} [{mode}]", spec.name));
            }
        }
    }
    outcome(
        bad.is_empty(),
        format!("{} rows x 3 modes; mismatches: {:?}", specs.len(), bad),
    )
}

fn top2(d: impl IntoIterator<Item = (String, f64)>) -> Vec<String> {
    let mut v: Vec<(String, f64)> = d.into_iter().collect();
    v.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut t: Vec<String> = v.into_iter().take(2).map(|(s, _)| s).collect();
    t.sort();
    t
}

fn qaoa_walkthrough() -> Outcome {
    let cs = qaoa_case_study(SHOTS, RUNS, 2024, &SimConfig::default()).unwrap();
    let want = vec!["01001".to_string(), "10110".to_string()];
    let exact_orig = top2(probabilities(&cs.original).unwrap());
    let exact_obf = top2(probabilities(&cs.obfuscated.circuit).unwrap());
    let sampled =
        |c: &qobf_core::sim::Counts| top2(c.counts.iter().map(|(k, &v)| (k.clone(), v as f64)));
    let tops_ok = exact_orig == want
        && exact_obf == want
        && sampled(&cs.original_counts) == want
        && sampled(&cs.obfuscated_counts) == want;
    let r = &cs.report;
    outcome(
        tops_ok
            && r.semantic_accuracy_percent >= 90.0
            && r.tvd <= 0.12
            && cs.max_probability_gap < 1e-9,
        format!(
            "top-2 {:?}, accuracy {:.2}%, TVD {:.4}, exact gap {:.1e}, seed 2024",
            exact_obf, r.semantic_accuracy_percent, r.tvd, cs.max_probability_gap
        ),
    )
}

fn stochastic_rows() -> Outcome {
    let bands: [(Generator, f64, Option<f64>); 3] = [
        (
            Generator::Grover3 {
                marked: "101".into(),
            },
            95.0,
            Some(0.06),
        ),
        (Generator::Qft { k: 4 }, 90.0, None),
        (
            Generator::Simon {
                secret: "110".into(),
            },
            90.0,
            None,
        ),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (g, acc_floor, tvd_cap) in bands {
        let spec = BenchmarkSpec::new(g);
        for mode in all_modes(spec.circuit().unwrap().gate_count()) {
            let row = &run_suite(std::slice::from_ref(&spec), &suite_for(mode, 7)).unwrap()[0];
            let r = &row.report;
            let ok =
                r.semantic_accuracy_percent >= acc_floor && tvd_cap.is_none_or(|cap| r.tvd <= cap);
            pass &= ok;
            parts.push(format!(
                "{} [{mode}] {:.2}%/{:.4}{}",
                spec.name,
                r.semantic_accuracy_percent,
                r.tvd,
                if ok { "" } else { " (out of band)" }
            ));
        }
    }
    outcome(pass, format!("seed 7; {}", parts.join(", ")))
}

fn overhead_formulas() -> Outcome {
    let mut bad = Vec::new();
    let mut checked = 0;
    for spec in standard_specs() {
        let c = spec.circuit().unwrap();
        let (m, n) = (c.gate_count(), c.num_qubits());
        for mode in [ObfuscationMode::Global, ObfuscationMode::Chained] {
            for seed in 0..5 {
                let obf = obfuscate(&c, mode, seed).unwrap();
                let r = overhead(&c, &obf.circuit).unwrap();
                checked += 1;
                let ok = r.measured_count == Some(m + 2 * n)
                    && r.reconstructed_pre_fusion == Some(3 * m + 2 * n)
                    && r.depth_delta == Some(2)
                    && r.consistent;
                if !ok {
                    bad.push(format!("{} [{mode}] seed {seed}", spec.name));
                }
            }
        }
    }
    outcome(
        bad.is_empty(),
        format!("{checked} checks; mismatches: {bad:?}"),
    )
}

fn security_formulas() -> Outcome {
    let mut pass = true;
    for n in 0..=20u32 {
        let mut counts = vec![0u64; n as usize + 1];
        for mask in 0u32..(1 << n) {
            counts[mask.count_ones() as usize] += 1;
        }
        for (x, &count) in counts.iter().enumerate() {
            let r = whitebox_profile(n as u64, x as u64).unwrap();
            pass &= r.subsets == Some(count as u128)
                && r.success_probability == 1.0 / count as f64
                && r.min_entropy_bits == (count as f64).log2();
        }
    }
    let p = blackbox_guess_probability(2.0 * PI / 100.0).unwrap();
    let rel = (p - 1e-6).abs() / 1e-6;
    pass &= rel < 1e-15;
    for n in 1..=30u64 {
        let peak = whitebox_profile(n, n / 2).unwrap().min_entropy_bits;
        pass &= (0..=n).all(|x| whitebox_profile(n, x).unwrap().min_entropy_bits <= peak);
    }
    outcome(
        pass,
        format!("enumeration n <= 20 exact, black-box rel. error {rel:.1e}"),
    )
}

fn compiler_resistance() -> Outcome {
    let mut recognized = 0;
    let mut blocks = 0;
    let mut rng = rng_from_seed(8);
    let circuits: Vec<Circuit> = standard_specs()
        .iter()
        .map(|s| s.circuit().unwrap())
        .collect();
    for _ in 0..100 {
        let key = random_params(&mut rng);
        for c in &circuits {
            let obf = obfuscate_global_with_params(c, key).unwrap();
            for b in obf.blocks() {
                blocks += 1;
                if recognize_gate(&b.operator().unwrap().unwrap())
                    .unwrap()
                    .is_some()
                {
                    recognized += 1;
                }
            }
        }
    }
    // degenerate control: with the identity basis each block is its gate
    let mut control_misses = 0;
    for c in &circuits {
        let obf = obfuscate_global_with_params(c, U3Params::IDENTITY).unwrap();
        let originals = c.instructions().iter().filter(|i| i.is_gate());
        for (orig, block) in
            originals.zip(obf.circuit.instructions().iter().filter(|i| is_block(i)))
        {
            let found = recognize_gate(&block.operator().unwrap().unwrap()).unwrap();
            let ok = match (found, orig) {
                (Some(g), Instruction::Gate { name, .. }) => {
                    g.name == name || (name == "rz" && g.name == "p")
                }
                _ => false,
            };
            if !ok {
                control_misses += 1;
            }
        }
    }
    outcome(
        recognized == 0 && control_misses == 0,
        format!("{recognized} of {blocks} random-key blocks recognized; identity-key misses {control_misses}"),
    )
}

fn timing_overhead() -> Outcome {
    let opts = SuiteOptions {
        runs: 20,
        ..suite_for(ObfuscationMode::Global, 9)
    };
    let rows = run_suite(&standard_specs(), &opts).unwrap();
    let orig: f64 = rows.iter().map(|r| r.report.original_runtime_seconds).sum();
    let obf: f64 = rows
        .iter()
        .map(|r| r.report.obfuscated_runtime_seconds)
        .sum();
    let ratio = obf / orig;
    outcome(
        ratio <= 2.0,
        format!("suite mean time original {orig:.6} s, obfuscated {obf:.6} s, ratio {ratio:.3}"),
    )
}

fn round_trips() -> Outcome {
    let mut problems = Vec::new();
    for spec in standard_specs() {
        let c = spec.circuit().unwrap();
        let once = parse(&emit_qasm2(&c).unwrap()).unwrap();
        let twice = parse(&emit_qasm2(&once).unwrap()).unwrap();
        if once != twice || once != c {
            problems.push(format!("qasm {}", spec.name));
        }
        for mode in all_modes(c.gate_count()) {
            let obf = obfuscate(&c, mode, 4).unwrap().circuit;
            if read_json(&write_json(&obf)).unwrap() != obf {
                problems.push(format!("json {} [{mode}]", spec.name));
            }
        }
    }
    let mut rng = rng_from_seed(10);
    let mut worst = 0.0f64;
    for i in 0..10_000 {
        let mut p = random_params(&mut rng);
        match i % 4 {
            0 => p.theta = rng.random_range(-1e-7..1e-7),
            1 => p.theta = PI + rng.random_range(-1e-7..1e-7),
            _ => {}
        }
        let phase = rng.random_range(-PI..PI);
        let m = p
            .matrix()
            .scale(num_complex::Complex64::from_polar(1.0, phase));
        let (q, g) = zyz_to_u3(&m).unwrap();
        let back = q.matrix().scale(num_complex::Complex64::from_polar(1.0, g));
        worst = worst.max(back.max_abs_diff(&m).unwrap());
    }
    let pass = problems.is_empty() && worst < 1e-9;
    outcome(
        pass,
        format!("zyz worst {worst:.2e}; problems: {problems:?}"),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("inverse identity", inverse_identity),
        ("equivalence oracle", equivalence_oracle),
        ("deterministic rows", deterministic_rows),
        ("QAOA case study", qaoa_walkthrough),
        ("stochastic rows", stochastic_rows),
        ("overhead formulas", overhead_formulas),
        ("security formulas", security_formulas),
        ("compiler resistance", compiler_resistance),
        ("execution-time overhead", timing_overhead),
        ("round-trips", round_trips),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {:>2} {tag}  {name}: {}", i + 1, o.detail);
        failed += usize::from(!o.pass);
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
