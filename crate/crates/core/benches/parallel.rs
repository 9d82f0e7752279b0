use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use qobf_core::bench::{generate, run_standard_suite, SuiteOptions};
use qobf_core::exec::Execution;
use qobf_core::obfuscate::{obfuscate, ObfuscationMode};
use qobf_core::sim::{run_with, SimConfig};

const PATHS: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn sampling(c: &mut Criterion) {
    let mut group = c.benchmark_group("run_with");
    for name in ["qaoa", "shor", "midcircuit"] {
        let circuit = generate(name).unwrap();
        let obf = obfuscate(&circuit, ObfuscationMode::Chained, 3)
            .unwrap()
            .circuit;
        for (label, exec) in PATHS {
            let cfg = SimConfig::default().with_execution(exec);
            group.bench_with_input(BenchmarkId::new(label, name), &obf, |b, c| {
                b.iter(|| run_with(c, 8192, 1, &cfg).unwrap())
            });
        }
    }
    group.finish();
}

fn suite(c: &mut Criterion) {
    let mut group = c.benchmark_group("standard_suite");
    group.sample_size(10);
    for (label, jobs) in [("sequential", 1), ("parallel", 4)] {
        let opts = SuiteOptions {
            modes: vec![ObfuscationMode::Global, ObfuscationMode::Chained],
            runs: 3,
            jobs,
            ..SuiteOptions::default()
        };
        group.bench_function(label, |b| b.iter(|| run_standard_suite(&opts).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, sampling, suite);
criterion_main!(benches);
