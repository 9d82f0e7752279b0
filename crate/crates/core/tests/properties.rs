use std::f64::consts::PI;

use proptest::prelude::*;

use qobf_core::bench::standard_suite;
use qobf_core::circuit::{Circuit, Instruction};
use qobf_core::exec::Execution;
use qobf_core::gates::{gate_signature, standard_gate_matrix, SUPPORTED_GATES};
use qobf_core::interchange::{read_json, write_json};
use qobf_core::linalg::{equal_up_to_global_phase, COMPOSED_TOL};
use qobf_core::metrics::{overhead, semantic_accuracy, tvd};
use qobf_core::obfuscate::{
    deobfuscate_block, obfuscate, ObfuscationKey, ObfuscationMode, BASIS_LABEL,
};
use qobf_core::sim::{probabilities, run, run_with, SimConfig};

#[derive(Debug, Clone)]
enum Step {
    Gate(usize, Vec<f64>, Vec<usize>),
    Measure(usize),
    Reset(usize),
}

fn step(n: usize) -> impl Strategy<Value = Step> {
    let gates: Vec<usize> = (0..SUPPORTED_GATES.len())
        .filter(|&g| gate_signature(SUPPORTED_GATES[g]).unwrap().num_qubits <= n)
        .collect();
    let gate = (
        proptest::sample::select(gates),
        proptest::collection::vec(-PI..PI, 3),
        Just((0..n).collect::<Vec<usize>>()).prop_shuffle(),
    )
        .prop_map(|(g, p, q)| Step::Gate(g, p, q));
    prop_oneof![
        8 => gate,
        1 => (0..n).prop_map(Step::Measure),
        1 => (0..n).prop_map(Step::Reset),
    ]
}

fn build(n: usize, steps: &[Step], with_resets: bool) -> Circuit {
    let mut c = Circuit::new(n, n);
    for s in steps {
        match s {
            Step::Gate(g, p, q) => {
                let name = SUPPORTED_GATES[*g];
                let sig = gate_signature(name).unwrap();
                c.gate(name, &p[..sig.num_params], &q[..sig.num_qubits])
                    .unwrap();
            }
            Step::Measure(q) => {
                c.measure(*q, *q).unwrap();
            }
            Step::Reset(q) if with_resets => {
                c.reset(*q).unwrap();
            }
            Step::Reset(_) => {}
        }
    }
    c.measure_all().unwrap();
    c
}

fn circuit(with_resets: bool) -> impl Strategy<Value = Circuit> {
    (1usize..=4)
        .prop_flat_map(|n| (Just(n), proptest::collection::vec(step(n), 0..16)))
        .prop_map(move |(n, steps)| build(n, &steps, with_resets))
}

fn mode() -> impl Strategy<Value = ObfuscationMode> {
    prop_oneof![
        Just(ObfuscationMode::Global),
        Just(ObfuscationMode::Chained),
        (0usize..8).prop_map(|x| ObfuscationMode::SubsetSandwich { x }),
    ]
}

fn clamp_subset(mode: ObfuscationMode, c: &Circuit) -> ObfuscationMode {
    match mode {
        ObfuscationMode::SubsetSandwich { x } => ObfuscationMode::SubsetSandwich {
            x: x.min(c.gate_count()),
        },
        m => m,
    }
}

fn max_gap(a: &Circuit, b: &Circuit) -> f64 {
    let (p, q) = (probabilities(a).unwrap(), probabilities(b).unwrap());
    p.keys()
        .chain(q.keys())
        .map(|k| (p.get(k).unwrap_or(&0.0) - q.get(k).unwrap_or(&0.0)).abs())
        .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn obfuscation_preserves_the_output_distribution(
        c in circuit(true), mode in mode(), seed in any::<u64>()
    ) {
        let mode = clamp_subset(mode, &c);
        let obf = obfuscate(&c, mode, seed).unwrap();
        prop_assert!(max_gap(&c, &obf.circuit) < 1e-9);
    }

    #[test]
    fn obfuscation_preserves_the_unitary(
        c in circuit(false), mode in mode(), seed in any::<u64>()
    ) {
        let mode = clamp_subset(mode, &c);
        let obf = obfuscate(&c, mode, seed).unwrap();
        let a = c.without_measurements().to_unitary().unwrap();
        let b = obf.circuit.without_measurements().to_unitary().unwrap();
        prop_assert!(equal_up_to_global_phase(&a, &b, COMPOSED_TOL).unwrap());
    }

    #[test]
    fn blocks_decode_to_their_gates(c in circuit(true), mode in mode(), seed in any::<u64>()) {
        let mode = clamp_subset(mode, &c);
        let obf = obfuscate(&c, mode, seed).unwrap();
        let originals: Vec<&Instruction> = c.instructions().iter().filter(|i| i.is_gate()).collect();
        for block in obf.blocks() {
            let g = deobfuscate_block(block, &obf.key).unwrap();
            let idx: usize = block.name().rsplit('_').next().unwrap().parse().unwrap();
            let Instruction::Gate { name, params, .. } = originals[idx] else { unreachable!() };
            let want = standard_gate_matrix(name, params).unwrap();
            prop_assert!(g.max_abs_diff(&want).unwrap() < COMPOSED_TOL);
        }
    }

    #[test]
    fn segmented_modes_match_the_overhead_projection(
        c in circuit(true), chained in any::<bool>(), seed in any::<u64>()
    ) {
        let mode = if chained { ObfuscationMode::Chained } else { ObfuscationMode::Global };
        let obf = obfuscate(&c, mode, seed).unwrap();
        let r = overhead(&c, &obf.circuit).unwrap();
        prop_assert!(r.consistent);
        let labelled = obf.circuit.instructions().iter().filter(|i| i.name() == BASIS_LABEL).count();
        prop_assert_eq!(labelled, c.num_qubits() * r.segments);
    }

    #[test]
    fn artifacts_round_trip(c in circuit(true), mode in mode(), seed in any::<u64>()) {
        let mode = clamp_subset(mode, &c);
        let obf = obfuscate(&c, mode, seed).unwrap();
        prop_assert_eq!(read_json(&write_json(&obf.circuit)).unwrap(), obf.circuit.clone());
        prop_assert_eq!(ObfuscationKey::from_json(&obf.key.to_json()).unwrap(), obf.key.clone());
        let again = obfuscate(&c, mode, seed).unwrap();
        prop_assert_eq!(write_json(&again.circuit), write_json(&obf.circuit));
    }

    #[test]
    fn sampling_is_seeded_and_complete(c in circuit(true), seed in any::<u64>(), shots in 1u64..600) {
        let a = run(&c, shots, seed).unwrap();
        prop_assert_eq!(a.total(), shots);
        prop_assert_eq!(&run(&c, shots, seed).unwrap(), &a);
        let par = SimConfig::default().with_execution(Execution::Parallel);
        prop_assert_eq!(&run_with(&c, shots, seed, &par).unwrap(), &a);
        let support = probabilities(&c).unwrap();
        for k in a.counts.keys() {
            prop_assert!(support.get(k).copied().unwrap_or(0.0) > 0.0, "{k} outside support");
        }
    }

    #[test]
    fn metric_ranges(c in circuit(true), s1 in any::<u64>(), s2 in any::<u64>()) {
        let a = run(&c, 256, s1).unwrap();
        let b = run(&c, 256, s2).unwrap();
        let acc = semantic_accuracy(&a, &b).unwrap();
        let d = tvd(&a, &b).unwrap();
        prop_assert!((0.0..=100.0).contains(&acc));
        prop_assert!((0.0..=1.0).contains(&d));
        prop_assert!((acc - 100.0 * (1.0 - d)).abs() < 1e-9);
        prop_assert_eq!(d, tvd(&b, &a).unwrap());
        prop_assert_eq!(semantic_accuracy(&a, &a).unwrap(), 100.0);
    }
}

#[test]
fn every_benchmark_is_equivalent_under_every_mode() {
    for g in standard_suite() {
        let c = g.generate().unwrap();
        c.validate().unwrap();
        for mode in [
            ObfuscationMode::Global,
            ObfuscationMode::Chained,
            ObfuscationMode::SubsetSandwich {
                x: c.gate_count() / 3,
            },
        ] {
            for seed in 0..4 {
                let obf = obfuscate(&c, mode, seed).unwrap();
                assert!(max_gap(&c, &obf.circuit) < 1e-9, "{g} {mode} {seed}");
            }
        }
    }
}
