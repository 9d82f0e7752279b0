//! Benchmark circuits, the evaluation table run and the QAOA case study.

mod generators;

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::circuit::{Circuit, CircuitError};
use crate::exec::{derive_seed, map_indexed, with_jobs, Execution};
use crate::interchange::write_json;
use crate::linalg::U3Params;
use crate::metrics::{render_table, timed_compare, ComparisonReport, MetricsError};
use crate::obfuscate::{
    obfuscate, obfuscate_global_with_params, ObfuscateError, ObfuscatedCircuit, ObfuscationKey,
    ObfuscationMode,
};
use crate::sim::{probabilities_with, run_with, Counts, SimConfig, SimError};

pub use generators::{
    generate, standard_suite, Generator, QAOA_BETA, QAOA_EDGES, QAOA_GAMMA, VQE_ANGLES,
};

/// Basis used by the case study in place of a sampled one.
pub const CASE_STUDY_KEY: U3Params = U3Params {
    theta: 2.86,
    phi: 2.33,
    lambda: 0.762,
};
pub const DEFAULT_SHOTS: u64 = 1024;
pub const DEFAULT_RUNS: usize = 100;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("unknown benchmark `{0}`")]
    UnknownBenchmark(String),
    #[error("invalid benchmark parameter: {0}")]
    BadParam(String),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Obfuscate(#[from] ObfuscateError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// A named benchmark with the outcomes it is known to produce.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkSpec {
    pub name: String,
    pub generator: Generator,
    pub expected_outcome: Option<String>,
    pub expected_top: Option<Vec<String>>,
}

impl BenchmarkSpec {
    pub fn new(generator: Generator) -> Self {
        Self {
            name: generator.label(),
            expected_outcome: generator.expected_outcome(),
            expected_top: generator.expected_top(),
            generator,
        }
    }

    pub fn circuit(&self) -> Result<Circuit, BenchError> {
        self.generator.generate()
    }

    /// Shor and VQE stand in for constructions that are not pinned down;
    /// they are checked by equivalence only.
    pub fn is_representative(&self) -> bool {
        matches!(
            self.generator,
            Generator::ShorMod15Order | Generator::VqeAnsatz { .. }
        )
    }
}

pub fn standard_specs() -> Vec<BenchmarkSpec> {
    standard_suite()
        .into_iter()
        .map(BenchmarkSpec::new)
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteRow {
    pub circuit: String,
    pub mode: String,
    /// Largest per-outcome gap between the exact output distributions.
    pub max_probability_gap: f64,
    pub report: ComparisonReport,
}

#[derive(Debug, Clone)]
pub struct SuiteOptions {
    pub modes: Vec<ObfuscationMode>,
    pub shots: u64,
    pub runs: usize,
    pub seed: u64,
    /// Number of rows evaluated concurrently; 1 keeps timings undisturbed.
    pub jobs: usize,
    pub sim: SimConfig,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            modes: vec![ObfuscationMode::Global],
            shots: DEFAULT_SHOTS,
            runs: DEFAULT_RUNS,
            seed: 0,
            jobs: 1,
            sim: SimConfig::default(),
        }
    }
}

/// Largest `|p(x) - q(x)|` over the union of supports.
pub fn max_probability_gap(a: &Circuit, b: &Circuit, cfg: &SimConfig) -> Result<f64, SimError> {
    let (p, q) = (probabilities_with(a, cfg)?, probabilities_with(b, cfg)?);
    let gap = p
        .keys()
        .chain(q.keys())
        .map(|k| (p.get(k).unwrap_or(&0.0) - q.get(k).unwrap_or(&0.0)).abs())
        .fold(0.0, f64::max);
    Ok(gap)
}

fn suite_row(
    spec: &BenchmarkSpec,
    mode: ObfuscationMode,
    index: usize,
    opts: &SuiteOptions,
) -> Result<SuiteRow, BenchError> {
    let original = spec.circuit()?;
    let obf = obfuscate(&original, mode, derive_seed(opts.seed, 2 * index as u64))?;
    let cmp_seed = derive_seed(opts.seed, 2 * index as u64 + 1);
    let report = timed_compare(
        &original,
        &obf.circuit,
        opts.shots,
        opts.runs,
        cmp_seed,
        &opts.sim,
    )?;
    Ok(SuiteRow {
        circuit: spec.name.clone(),
        mode: mode.to_string(),
        max_probability_gap: max_probability_gap(&original, &obf.circuit, &opts.sim)?,
        report,
    })
}

/// Obfuscates and compares every benchmark under every mode. Row `i`
/// (benchmark-major) derives its seeds from `(seed, 2i)` and `(seed, 2i + 1)`,
/// so the result does not depend on `jobs`.
pub fn run_suite(
    specs: &[BenchmarkSpec],
    opts: &SuiteOptions,
) -> Result<Vec<SuiteRow>, BenchError> {
    let modes = &opts.modes;
    let total = specs.len() * modes.len();
    let exec = Execution::from_jobs(opts.jobs);
    let rows = with_jobs(opts.jobs, || {
        map_indexed(exec, total, |i| {
            suite_row(&specs[i / modes.len()], modes[i % modes.len()], i, opts)
        })
    });
    rows.into_iter().collect()
}

pub fn run_standard_suite(opts: &SuiteOptions) -> Result<Vec<SuiteRow>, BenchError> {
    run_suite(&standard_specs(), opts)
}

/// Text table of the rows; the mode is appended to the circuit name when more than one
/// mode is present.
pub fn render_suite(rows: &[SuiteRow]) -> String {
    let multi = rows.iter().any(|r| r.mode != rows[0].mode);
    let labelled: Vec<(String, ComparisonReport)> = rows
        .iter()
        .map(|r| {
            let label = if multi {
                format!("{} [{}]", r.circuit, r.mode)
            } else {
                r.circuit.clone()
            };
            (label, r.report.clone())
        })
        .collect();
    render_table(&labelled)
}

/// Outputs of the fixed-key QAOA walkthrough.
#[derive(Debug, Clone)]
pub struct CaseStudy {
    pub original: Circuit,
    pub obfuscated: ObfuscatedCircuit,
    pub report: ComparisonReport,
    /// One sample histogram per circuit, for plotting.
    pub original_counts: Counts,
    pub obfuscated_counts: Counts,
    pub max_probability_gap: f64,
}

impl CaseStudy {
    pub fn key(&self) -> &ObfuscationKey {
        &self.obfuscated.key
    }

    /// Writes `obfuscated.json`, `key.json`, `original_counts.csv`,
    /// `obfuscated_counts.csv` and `report.json` under `dir`.
    pub fn write_artifacts(&self, dir: &Path) -> Result<Vec<PathBuf>, BenchError> {
        let io = |path: &Path, e| BenchError::Io {
            path: path.to_owned(),
            source: e,
        };
        fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
        let report = serde_json::to_string_pretty(&self.report).expect("report serializes");
        let files = [
            ("obfuscated.json", write_json(&self.obfuscated.circuit)),
            ("key.json", self.obfuscated.key.to_json()),
            ("original_counts.csv", self.original_counts.to_csv()),
            ("obfuscated_counts.csv", self.obfuscated_counts.to_csv()),
            ("report.json", report),
        ];
        let mut written = Vec::new();
        for (name, body) in files {
            let path = dir.join(name);
            fs::write(&path, body).map_err(|e| io(&path, e))?;
            written.push(path);
        }
        Ok(written)
    }
}

/// Global-mode obfuscation of the default QAOA circuit under
/// [`CASE_STUDY_KEY`], compared over `runs` runs of `shots` shots.
pub fn qaoa_case_study(
    shots: u64,
    runs: usize,
    seed: u64,
    cfg: &SimConfig,
) -> Result<CaseStudy, BenchError> {
    let original = Generator::qaoa_default().generate()?;
    let obfuscated = obfuscate_global_with_params(&original, CASE_STUDY_KEY)?;
    let report = timed_compare(&original, &obfuscated.circuit, shots, runs, seed, cfg)?;
    let original_counts = run_with(&original, shots, derive_seed(seed, 0), cfg)?;
    let obfuscated_counts = run_with(&obfuscated.circuit, shots, derive_seed(seed, 1), cfg)?;
    let max_probability_gap = max_probability_gap(&original, &obfuscated.circuit, cfg)?;
    Ok(CaseStudy {
        original,
        obfuscated,
        report,
        original_counts,
        obfuscated_counts,
        max_probability_gap,
    })
}
