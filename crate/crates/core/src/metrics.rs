//! Output-similarity metrics, structural overhead and timed comparisons.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::time::{Duration, Instant};

use serde::Serialize;
use thiserror::Error;

use crate::circuit::{Circuit, Instruction};
use crate::exec::derive_seed;
use crate::obfuscate::{is_block, ObfuscationKey, BASIS_LABEL, INV_BASIS_LABEL};
use crate::sim::{run_with, Counts, SimConfig, SimError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("original counts are empty")]
    EmptyOriginal,
    #[error("counts with zero shots cannot be compared")]
    ZeroShots,
    #[error("circuits act on different register sizes ({0} vs {1} qubits)")]
    QubitMismatch(usize, usize),
    #[error("runs must be at least 1")]
    ZeroRuns,
    #[error(transparent)]
    Sim(#[from] SimError),
}

fn keys<'a>(a: &'a Counts, b: &'a Counts) -> BTreeSet<&'a str> {
    a.counts
        .keys()
        .chain(b.counts.keys())
        .map(String::as_str)
        .collect()
}

/// Overlapping probability mass as a percentage of the original counts:
/// `100 * sum_x min(orig[x], obf[x]) / sum_x orig[x]`.
pub fn semantic_accuracy(original: &Counts, obfuscated: &Counts) -> Result<f64, MetricsError> {
    let total = original.total();
    if total == 0 {
        return Err(MetricsError::EmptyOriginal);
    }
    let overlap: u64 = keys(original, obfuscated)
        .into_iter()
        .map(|k| original.get(k).min(obfuscated.get(k)))
        .sum();
    Ok(100.0 * overlap as f64 / total as f64)
}

/// Total variation distance. With equal totals this is
/// `sum |obf - orig| / (2 * shots)`; otherwise both histograms are
/// normalized first and the flag in [`tvd_with_flag`] is set.
pub fn tvd(original: &Counts, obfuscated: &Counts) -> Result<f64, MetricsError> {
    tvd_with_flag(original, obfuscated).map(|(v, _)| v)
}

/// TVD plus whether the shot totals differed and were normalized.
pub fn tvd_with_flag(original: &Counts, obfuscated: &Counts) -> Result<(f64, bool), MetricsError> {
    let (ta, tb) = (original.total(), obfuscated.total());
    if ta == 0 || tb == 0 {
        return Err(MetricsError::ZeroShots);
    }
    let ks = keys(original, obfuscated);
    if ta == tb {
        let diff: u64 = ks
            .into_iter()
            .map(|k| original.get(k).abs_diff(obfuscated.get(k)))
            .sum();
        return Ok((diff as f64 / (2 * ta) as f64, false));
    }
    let (ta, tb) = (ta as f64, tb as f64);
    let diff: f64 = ks
        .into_iter()
        .map(|k| (original.get(k) as f64 / ta - obfuscated.get(k) as f64 / tb).abs())
        .sum();
    Ok((0.5 * diff, true))
}

/// Gate-count and depth accounting for a Global or Chained rewrite.
///
/// With `s` unitary segments the predictions are `m + 2ns` gates after
/// fusion and `3m + 2ns` before it (for `s = 1`: `m + 2n` and `3m + 2n`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OverheadReport {
    pub m: usize,
    pub n: usize,
    pub segments: usize,
    pub pre_fusion_count: usize,
    pub final_count: usize,
    pub depth_original: usize,
    /// Measured values; absent for a projection.
    pub measured_count: Option<usize>,
    pub reconstructed_pre_fusion: Option<usize>,
    pub depth_obfuscated: Option<usize>,
    pub depth_delta: Option<isize>,
    /// False when a measured count disagrees with its prediction.
    pub consistent: bool,
}

/// Predicted overhead for obfuscating `c`, without running the obfuscator.
pub fn project_overhead(c: &Circuit) -> OverheadReport {
    projection(c.gate_count(), c.num_qubits(), c.segment().len(), c.depth())
}

fn projection(m: usize, n: usize, segments: usize, depth: usize) -> OverheadReport {
    let s = segments.max(1);
    OverheadReport {
        m,
        n,
        segments: s,
        pre_fusion_count: 3 * m + 2 * n * s,
        final_count: m + 2 * n * s,
        depth_original: depth,
        measured_count: None,
        reconstructed_pre_fusion: None,
        depth_obfuscated: None,
        depth_delta: None,
        consistent: true,
    }
}

/// Compares the predictions with the structure of an actual rewrite. The
/// pre-fusion count is rebuilt as three instructions per block plus the
/// boundary layers.
pub fn overhead(original: &Circuit, obfuscated: &Circuit) -> Result<OverheadReport, MetricsError> {
    if original.num_qubits() != obfuscated.num_qubits() {
        return Err(MetricsError::QubitMismatch(
            original.num_qubits(),
            obfuscated.num_qubits(),
        ));
    }
    Ok(measure_against(project_overhead(original), obfuscated))
}

/// Like [`overhead`], with the original shape taken from a key.
pub fn overhead_from_key(
    key: &ObfuscationKey,
    obfuscated: &Circuit,
) -> Result<OverheadReport, MetricsError> {
    let o = &key.original;
    if o.num_qubits != obfuscated.num_qubits() {
        return Err(MetricsError::QubitMismatch(
            o.num_qubits,
            obfuscated.num_qubits(),
        ));
    }
    let report = projection(o.gate_count, o.num_qubits, o.segments, o.depth);
    Ok(measure_against(report, obfuscated))
}

fn measure_against(mut report: OverheadReport, obfuscated: &Circuit) -> OverheadReport {
    let blocks = obfuscated
        .instructions()
        .iter()
        .filter(|i| is_block(i))
        .count();
    let boundary = obfuscated
        .instructions()
        .iter()
        .filter(|i| {
            matches!(i, Instruction::Unitary { label, .. } if label == BASIS_LABEL || label == INV_BASIS_LABEL)
        })
        .count();
    let measured = obfuscated.gate_count();
    let rebuilt = 3 * blocks + boundary;
    let depth = obfuscated.depth();
    report.measured_count = Some(measured);
    report.reconstructed_pre_fusion = Some(rebuilt);
    report.depth_obfuscated = Some(depth);
    report.depth_delta = Some(depth as isize - report.depth_original as isize);
    report.consistent = measured == report.final_count && rebuilt == report.pre_fusion_count;
    report
}

/// Averages over repeated, independently seeded executions of both circuits.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub semantic_accuracy_percent: f64,
    pub tvd: f64,
    /// Mean wall-clock simulate time per run.
    pub original_runtime_seconds: f64,
    pub obfuscated_runtime_seconds: f64,
    pub original_runtime_min_seconds: f64,
    pub obfuscated_runtime_min_seconds: f64,
    pub shots: u64,
    pub runs: usize,
    pub seed: u64,
    /// Set when some run compared histograms with different totals.
    pub tvd_normalized: bool,
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

/// Runs both circuits `runs` times and averages accuracy, TVD and simulate
/// time. Run `r` uses seeds derived from `(seed, 2r)` and `(seed, 2r + 1)`,
/// so the two histograms are independent samples.
pub fn timed_compare(
    original: &Circuit,
    obfuscated: &Circuit,
    shots: u64,
    runs: usize,
    seed: u64,
    cfg: &SimConfig,
) -> Result<ComparisonReport, MetricsError> {
    if runs == 0 {
        return Err(MetricsError::ZeroRuns);
    }
    let (mut acc, mut dist) = (0.0, 0.0);
    let (mut t_orig, mut t_obf) = (Duration::ZERO, Duration::ZERO);
    let (mut min_orig, mut min_obf) = (Duration::MAX, Duration::MAX);
    let mut normalized = false;
    for r in 0..runs as u64 {
        let (a, da) = timed(|| run_with(original, shots, derive_seed(seed, 2 * r), cfg));
        let (b, db) = timed(|| run_with(obfuscated, shots, derive_seed(seed, 2 * r + 1), cfg));
        let (a, b) = (a?, b?);
        acc += semantic_accuracy(&a, &b)?;
        let (d, flag) = tvd_with_flag(&a, &b)?;
        dist += d;
        normalized |= flag;
        t_orig += da;
        t_obf += db;
        min_orig = min_orig.min(da);
        min_obf = min_obf.min(db);
    }
    let k = runs as f64;
    Ok(ComparisonReport {
        semantic_accuracy_percent: acc / k,
        tvd: dist / k,
        original_runtime_seconds: t_orig.as_secs_f64() / k,
        obfuscated_runtime_seconds: t_obf.as_secs_f64() / k,
        original_runtime_min_seconds: min_orig.as_secs_f64(),
        obfuscated_runtime_min_seconds: min_obf.as_secs_f64(),
        shots,
        runs,
        seed,
        tvd_normalized: normalized,
    })
}

/// Aligned text table with one row per `(label, report)`.
pub fn render_table(rows: &[(String, ComparisonReport)]) -> String {
    let header = [
        "Circuit",
        "Original Time (s)",
        "Obfuscated Time (s)",
        "Semantic Accuracy (%)",
        "TVD",
    ];
    let body: Vec<[String; 5]> = rows
        .iter()
        .map(|(label, r)| {
            [
                label.clone(),
                format!("{:.6}", r.original_runtime_seconds),
                format!("{:.6}", r.obfuscated_runtime_seconds),
                format!("{:.2}", r.semantic_accuracy_percent),
                format!("{:.4}", r.tvd),
            ]
        })
        .collect();
    let mut widths = header.map(str::len);
    for row in &body {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = String::new();
    let line = |out: &mut String, cells: [&str; 5]| {
        let mut parts = Vec::with_capacity(5);
        for (i, (cell, w)) in cells.iter().zip(widths).enumerate() {
            parts.push(if i == 0 {
                format!("{cell:<w$}")
            } else {
                format!("{cell:>w$}")
            });
        }
        writeln!(out, "{}", parts.join("  ").trim_end()).unwrap();
    };
    line(&mut out, header);
    let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
    writeln!(out, "{}", rule.join("  ")).unwrap();
    for row in &body {
        line(&mut out, [&row[0], &row[1], &row[2], &row[3], &row[4]]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::obfuscate::{obfuscate, ObfuscationMode};
    use std::collections::BTreeMap;

    fn counts(pairs: &[(&str, u64)]) -> Counts {
        let counts: BTreeMap<String, u64> = pairs.iter().map(|&(k, v)| (k.to_owned(), v)).collect();
        Counts {
            shots: counts.values().sum(),
            counts,
        }
    }

    #[test]
    fn accuracy_examples() {
        let a = counts(&[("0", 600), ("1", 424)]);
        let b = counts(&[("0", 550), ("1", 474)]);
        assert_eq!(semantic_accuracy(&a, &a).unwrap(), 100.0);
        let expected = (550.0 + 424.0) / 1024.0 * 100.0;
        assert!((semantic_accuracy(&a, &b).unwrap() - expected).abs() < 1e-12);
        assert!((expected - 95.12).abs() < 0.01);
        assert_eq!(
            semantic_accuracy(&Counts::default(), &a),
            Err(MetricsError::EmptyOriginal)
        );
    }

    #[test]
    fn tvd_examples() {
        let a = counts(&[("0", 600), ("1", 424)]);
        let b = counts(&[("0", 550), ("1", 474)]);
        assert_eq!(tvd(&a, &a).unwrap(), 0.0);
        assert!((tvd(&a, &b).unwrap() - 100.0 / 2048.0).abs() < 1e-15);
        let c = counts(&[("00", 10)]);
        let d = counts(&[("11", 10)]);
        assert_eq!(tvd(&c, &d).unwrap(), 1.0);
        assert_eq!(tvd(&Counts::default(), &c), Err(MetricsError::ZeroShots));
    }

    #[test]
    fn unequal_totals_are_normalized() {
        let a = counts(&[("0", 50), ("1", 50)]);
        let b = counts(&[("0", 300), ("1", 100)]);
        let (v, flag) = tvd_with_flag(&a, &b).unwrap();
        assert!(flag);
        assert!((v - 0.25).abs() < 1e-15);
    }

    #[test]
    fn accuracy_and_tvd_agree_on_equal_shots() {
        let a = counts(&[("00", 300), ("01", 200), ("10", 24), ("11", 500)]);
        let b = counts(&[("00", 280), ("01", 260), ("11", 484)]);
        let acc = semantic_accuracy(&a, &b).unwrap();
        let d = tvd(&a, &b).unwrap();
        assert!((acc - 100.0 * (1.0 - d)).abs() < 1e-12);
    }

    #[test]
    fn overhead_examples() {
        let mut c = Circuit::new(5, 0);
        for i in 0..10 {
            c.h(i % 5).unwrap();
        }
        let p = project_overhead(&c);
        assert_eq!((p.pre_fusion_count, p.final_count), (40, 20));

        let empty = Circuit::new(3, 0);
        let o = obfuscate(&empty, ObfuscationMode::Global, 0).unwrap();
        let r = overhead(&empty, &o.circuit).unwrap();
        assert_eq!((r.final_count, r.depth_delta), (6, Some(2)));
        assert!(r.consistent);

        let mut bell = Circuit::new(2, 2);
        bell.h(0).unwrap().cx(0, 1).unwrap().measure_all().unwrap();
        let o = obfuscate(&bell, ObfuscationMode::Global, 0).unwrap();
        let r = overhead(&bell, &o.circuit).unwrap();
        assert_eq!((r.final_count, r.measured_count), (6, Some(6)));
        assert_eq!(r.reconstructed_pre_fusion, Some(3 * 2 + 2 * 2));
        assert!(r.consistent);

        assert!(overhead(&bell, &Circuit::new(3, 0)).is_err());
        let from_key = overhead_from_key(&o.key, &o.circuit).unwrap();
        assert_eq!(from_key, overhead(&bell, &o.circuit).unwrap());
    }

    #[test]
    fn mismatched_structure_is_flagged() {
        let mut c = Circuit::new(2, 0);
        c.h(0).unwrap().h(1).unwrap();
        let o = obfuscate(&c, ObfuscationMode::SubsetSandwich { x: 1 }, 0).unwrap();
        assert!(!overhead(&c, &o.circuit).unwrap().consistent);
    }

    #[test]
    fn timed_compare_deterministic_pair() {
        let mut c = Circuit::new(2, 2);
        c.x(0).unwrap().cx(0, 1).unwrap().measure_all().unwrap();
        let o = obfuscate(&c, ObfuscationMode::Chained, 3).unwrap();
        let r = timed_compare(&c, &o.circuit, 1024, 5, 1, &SimConfig::default()).unwrap();
        assert_eq!(r.semantic_accuracy_percent, 100.0);
        assert_eq!(r.tvd, 0.0);
        assert_eq!((r.shots, r.runs), (1024, 5));
        assert!(r.original_runtime_min_seconds <= r.original_runtime_seconds);
        assert_eq!(
            timed_compare(&c, &c, 10, 0, 0, &SimConfig::default()),
            Err(MetricsError::ZeroRuns)
        );
    }

    #[test]
    fn same_circuit_different_seeds_fluctuates() {
        let mut c = Circuit::new(1, 1);
        c.h(0).unwrap().measure(0, 0).unwrap();
        let r = timed_compare(&c, &c, 1024, 10, 5, &SimConfig::default()).unwrap();
        assert!(r.semantic_accuracy_percent < 100.0);
        assert!(r.tvd > 0.0);
    }

    #[test]
    fn table_rendering() {
        let report = ComparisonReport {
            semantic_accuracy_percent: 93.3,
            tvd: 0.084,
            original_runtime_seconds: 0.0012,
            obfuscated_runtime_seconds: 0.0015,
            original_runtime_min_seconds: 0.001,
            obfuscated_runtime_min_seconds: 0.0014,
            shots: 1024,
            runs: 100,
            seed: 0,
            tvd_normalized: false,
        };
        let text = render_table(&[("QAOA".into(), report)]);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].starts_with("Circuit"));
        assert!(lines[2].contains("93.30") && lines[2].contains("0.0840"));
        assert_eq!(lines[0].len(), lines[2].len());
    }
}
