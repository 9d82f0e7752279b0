use std::path::Path;

use serde_json::{json, Value};

use qobf_core::bench::{
    self, qaoa_case_study, render_suite, run_standard_suite, Generator, SuiteOptions,
};
use qobf_core::circuit::{Circuit, Instruction};
use qobf_core::exec::{with_jobs, Execution};
use qobf_core::interchange::write_json;
use qobf_core::metrics::{
    overhead, overhead_from_key, project_overhead, render_table, timed_compare, OverheadReport,
};
use qobf_core::obfuscate::{
    is_block, obfuscate as obfuscate_circuit, ObfuscationKey, ObfuscationMode, BASIS_LABEL,
};
use qobf_core::qasm::emit_qasm2;
use qobf_core::security::{audit_key, whitebox_profile, SecurityReport};
use qobf_core::sim::{probabilities_with, run_with, SimConfig, SimError};

use crate::error::{CliResult, Failure, EXIT_THRESHOLD, EXIT_VALIDATION};
use crate::io::{default_key_path, label_of, load_circuit, load_key, write_text};
use crate::{AnalyzeArgs, BenchArgs, CompareArgs, ModeArg, ObfuscateArgs, SimulateArgs};

fn print_json(v: &Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("JSON value"));
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable report")
}

fn resolve_mode(a: &ObfuscateArgs, c: &Circuit) -> CliResult<ObfuscationMode> {
    match (a.mode, a.subset_size) {
        (ModeArg::Global, None) => Ok(ObfuscationMode::Global),
        (ModeArg::Chained, None) => Ok(ObfuscationMode::Chained),
        (ModeArg::Subset, x) => Ok(ObfuscationMode::SubsetSandwich {
            x: x.unwrap_or(c.gate_count() / 2),
        }),
        (_, Some(_)) => Err(Failure::usage("--subset-size requires --mode subset")),
    }
}

fn overhead_lines(r: &OverheadReport) -> Vec<String> {
    let mut lines = vec![format!(
        "original: m = {} gates on n = {} qubits, {} segment(s), depth {}",
        r.m, r.n, r.segments, r.depth_original
    )];
    match (
        r.measured_count,
        r.reconstructed_pre_fusion,
        r.depth_obfuscated,
    ) {
        (Some(measured), Some(rebuilt), Some(depth)) => {
            lines.push(format!(
                "final gate count: {measured} (predicted m + 2ns = {})",
                r.final_count
            ));
            lines.push(format!(
                "pre-fusion gate count: {rebuilt} (predicted 3m + 2ns = {})",
                r.pre_fusion_count
            ));
            lines.push(format!(
                "depth: {depth} ({:+})",
                r.depth_delta.unwrap_or_default()
            ));
            if !r.consistent {
                lines.push("warning: measured structure differs from the prediction".into());
            }
        }
        _ => {
            lines.push(format!(
                "projected: {} gates after fusion, {} before",
                r.final_count, r.pre_fusion_count
            ));
        }
    }
    lines
}

fn security_lines(r: &SecurityReport) -> Vec<String> {
    let mut lines = Vec::new();
    if let (Some(n), Some(x)) = (r.n, r.x) {
        lines.push(format!("protected pattern: x = {x} of n = {n} gates"));
    }
    lines.push(format!(
        "guess probability: {:.6e}, min-entropy: {:.4} bits",
        r.success_probability, r.min_entropy_bits
    ));
    if let Some(w) = &r.warning {
        lines.push(format!("warning: {w}"));
    }
    lines
}

pub fn obfuscate(a: &ObfuscateArgs) -> CliResult<()> {
    let c = load_circuit(&a.input)?;
    let mode = resolve_mode(a, &c)?;
    let obf = obfuscate_circuit(&c, mode, a.seed)?;
    let key_path = a
        .key_out
        .clone()
        .unwrap_or_else(|| default_key_path(&a.out));
    write_text(&a.out, &write_json(&obf.circuit))?;
    write_text(&key_path, &obf.key.to_json())?;

    let report = match mode {
        ObfuscationMode::SubsetSandwich { .. } => None,
        _ => Some(overhead(&c, &obf.circuit)?),
    };
    if a.json {
        print_json(&json!({
            "mode": mode.name(),
            "seed": a.seed,
            "circuit": a.out,
            "key": key_path,
            "gate_count": obf.circuit.gate_count(),
            "protected": obf.key.protected,
            "overhead": report.as_ref().map(to_value),
        }));
        return Ok(());
    }
    println!("mode: {mode}, seed {}", a.seed);
    match &report {
        Some(r) => overhead_lines(r).iter().for_each(|l| println!("{l}")),
        None => println!(
            "protected {} of {} gates; obfuscated gate count {}",
            obf.key.protected_count(),
            c.gate_count(),
            obf.circuit.gate_count()
        ),
    }
    println!("wrote {} and {}", a.out.display(), key_path.display());
    Ok(())
}

pub fn simulate(a: &SimulateArgs, cfg: SimConfig) -> CliResult<()> {
    let c = load_circuit(&a.input)?;
    let cfg = cfg.with_execution(Execution::from_jobs(a.jobs));
    if a.exact {
        let dist = with_jobs(a.jobs, || probabilities_with(&c, &cfg))?;
        if a.json {
            print_json(&to_value(&dist));
        } else {
            for (k, p) in &dist {
                println!("{k} {p:.10}");
            }
        }
        return Ok(());
    }
    let counts = with_jobs(a.jobs, || run_with(&c, a.shots, a.seed, &cfg))?;
    if let Some(out) = &a.out {
        let body = match out.extension().and_then(|e| e.to_str()) {
            Some("csv") => counts.to_csv(),
            _ => counts.to_json(),
        };
        write_text(out, &body)?;
    }
    if a.json {
        println!("{}", counts.to_json());
    } else {
        for (k, n) in counts.ranked() {
            println!("{k} {n}");
        }
    }
    Ok(())
}

pub fn compare(a: &CompareArgs, cfg: SimConfig) -> CliResult<()> {
    let original = load_circuit(&a.input)?;
    let obfuscated = load_circuit(&a.obfuscated)?;
    if original.num_qubits() != obfuscated.num_qubits()
        || original.num_clbits() != obfuscated.num_clbits()
    {
        return Err(Failure::new(
            EXIT_VALIDATION,
            format!(
                "register mismatch: {} qubits / {} clbits vs {} / {}",
                original.num_qubits(),
                original.num_clbits(),
                obfuscated.num_qubits(),
                obfuscated.num_clbits()
            ),
        ));
    }
    let cfg = cfg.with_execution(Execution::from_jobs(a.jobs));
    let report = with_jobs(a.jobs, || {
        timed_compare(&original, &obfuscated, a.shots, a.runs, a.seed, &cfg)
    })?;
    let gap = match bench::max_probability_gap(&original, &obfuscated, &cfg) {
        Ok(g) => Some(g),
        Err(SimError::BranchCap { .. }) => None,
        Err(e) => return Err(e.into()),
    };
    let pass = report.semantic_accuracy_percent >= a.floor;
    if a.json {
        let mut v = to_value(&report);
        v["max_probability_gap"] = json!(gap);
        v["floor"] = json!(a.floor);
        v["pass"] = json!(pass);
        print_json(&v);
    } else {
        print!("{}", render_table(&[(label_of(&a.input), report.clone())]));
        match gap {
            Some(g) => println!("max exact probability gap: {g:.3e}"),
            None => println!("max exact probability gap: not computed (branch cap)"),
        }
        println!(
            "accuracy floor {:.2}%: {}",
            a.floor,
            if pass { "met" } else { "NOT met" }
        );
    }
    if pass {
        Ok(())
    } else {
        Err(Failure::new(
            EXIT_THRESHOLD,
            format!(
                "semantic accuracy {:.2}% is below the floor of {:.2}%",
                report.semantic_accuracy_percent, a.floor
            ),
        ))
    }
}

/// What can be said about an obfuscated circuit without its key.
fn keyless_security(c: &Circuit) -> Option<SecurityReport> {
    let blocks = c.instructions().iter().filter(|i| is_block(i)).count() as u64;
    let segmented = c
        .instructions()
        .iter()
        .any(|i| matches!(i, Instruction::Unitary { label, .. } if label == BASIS_LABEL));
    // basis layers mean every gate was conjugated: x = n
    segmented.then(|| {
        let mut r = whitebox_profile(blocks, blocks).expect("x = n");
        r.warning = Some(format!(
            "every gate is conjugated (x = n = {blocks}): the pattern has zero entropy"
        ));
        r
    })
}

fn subset_is_maximal(key: &ObfuscationKey) -> bool {
    let m = key.original.gate_count;
    let x = key.protected_count();
    x == m / 2 || x == m.div_ceil(2)
}

pub fn analyze(a: &AnalyzeArgs) -> CliResult<()> {
    let c = load_circuit(&a.input)?;
    let key = a.key.as_deref().map(load_key).transpose()?;
    let obfuscated = c.instructions().iter().any(is_block);

    let (kind, overhead_report, security, maximal) = match (&key, obfuscated) {
        (Some(k), _) => {
            let ov = match k.mode {
                ObfuscationMode::SubsetSandwich { .. } => None,
                _ => Some(overhead_from_key(k, &c)?),
            };
            let max = matches!(k.mode, ObfuscationMode::SubsetSandwich { .. })
                .then(|| subset_is_maximal(k));
            ("obfuscated", ov, Some(audit_key(k)), max)
        }
        (None, true) => ("obfuscated", None, keyless_security(&c), None),
        (None, false) => ("original", Some(project_overhead(&c)), None, None),
    };

    if a.json {
        print_json(&json!({
            "input": kind,
            "mode": key.as_ref().map(|k| k.mode.name()),
            "gate_count": c.gate_count(),
            "overhead": overhead_report.as_ref().map(to_value),
            "security": security.as_ref().map(to_value),
            "entropy_maximal": maximal,
        }));
        return Ok(());
    }
    println!(
        "input: {kind} circuit, {} qubits, {} gates, depth {}",
        c.num_qubits(),
        c.gate_count(),
        c.depth()
    );
    if let Some(k) = &key {
        println!("key: {} mode, seed {}", k.mode, k.seed);
    }
    if let Some(r) = &overhead_report {
        overhead_lines(r).iter().for_each(|l| println!("{l}"));
    }
    match &security {
        Some(r) => security_lines(r).iter().for_each(|l| println!("{l}")),
        None if obfuscated => println!("pattern size unknown without the key"),
        None => {}
    }
    if let Some(max) = maximal {
        println!(
            "entropy is {} for this gate count",
            if max {
                "maximal"
            } else {
                "below the maximum (x = m/2)"
            }
        );
    }
    Ok(())
}

fn parse_modes(raw: &[String]) -> CliResult<Vec<ObfuscationMode>> {
    raw.iter()
        .map(|m| m.trim().parse::<ObfuscationMode>().map_err(Failure::usage))
        .collect()
}

fn emit(name: &str, out: Option<&Path>) -> CliResult<()> {
    let circuit = name.parse::<Generator>()?.generate()?;
    let qasm = emit_qasm2(&circuit).map_err(|e| Failure::new(EXIT_VALIDATION, e.to_string()))?;
    match out {
        Some(path) => write_text(path, &qasm),
        None => {
            print!("{qasm}");
            Ok(())
        }
    }
}

pub fn bench(a: &BenchArgs, cfg: SimConfig) -> CliResult<()> {
    if let Some(name) = &a.emit {
        return emit(name, a.out.as_deref());
    }
    if a.case_study {
        let cs = qaoa_case_study(a.shots, a.runs, a.seed, &cfg)?;
        let written = match &a.out {
            Some(dir) => cs.write_artifacts(dir)?,
            None => Vec::new(),
        };
        let top = |c: &qobf_core::sim::Counts| -> Vec<String> {
            c.ranked()
                .iter()
                .take(2)
                .map(|(s, _)| s.to_string())
                .collect()
        };
        if a.json {
            let mut v = to_value(&cs.report);
            v["key"] = to_value(&bench::CASE_STUDY_KEY);
            v["max_probability_gap"] = json!(cs.max_probability_gap);
            v["top_original"] = json!(top(&cs.original_counts));
            v["top_obfuscated"] = json!(top(&cs.obfuscated_counts));
            v["artifacts"] = json!(written);
            print_json(&v);
        } else {
            let k = bench::CASE_STUDY_KEY;
            let inv = k.inverse();
            println!(
                "key U3({}, {}, {}), inverse U3({}, {}, {})",
                k.theta, k.phi, k.lambda, inv.theta, inv.phi, inv.lambda
            );
            print!("{}", render_table(&[("QAOA".into(), cs.report.clone())]));
            println!(
                "top outcomes: original {:?}, obfuscated {:?}",
                top(&cs.original_counts),
                top(&cs.obfuscated_counts)
            );
            println!("max exact probability gap: {:.3e}", cs.max_probability_gap);
            for p in &written {
                println!("wrote {}", p.display());
            }
        }
        return Ok(());
    }

    let opts = SuiteOptions {
        modes: parse_modes(&a.mode)?,
        shots: a.shots,
        runs: a.runs,
        seed: a.seed,
        jobs: a.jobs.max(1),
        sim: cfg,
    };
    let rows = run_standard_suite(&opts)?;
    let table = render_suite(&rows);
    if let Some(dir) = &a.out {
        let rows_json = serde_json::to_string_pretty(&rows).expect("rows serialize");
        write_text(&dir.join("suite.json"), &rows_json)?;
        write_text(&dir.join("suite.txt"), &table)?;
    }
    if a.json {
        print_json(&to_value(&rows));
    } else {
        print!("{table}");
    }
    Ok(())
}
