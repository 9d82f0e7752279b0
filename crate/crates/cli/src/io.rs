use std::fs;
use std::path::{Path, PathBuf};

use qobf_core::circuit::Circuit;
use qobf_core::interchange::read_json;
use qobf_core::obfuscate::ObfuscationKey;
use qobf_core::qasm::parse;

use crate::error::{CliResult, Failure};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Qasm,
    Json,
}

/// Extension first; otherwise a leading `{` means JSON.
pub fn detect_format(path: &Path, text: &str) -> Format {
    match path.extension().and_then(|e| e.to_str()) {
        Some("qasm") => Format::Qasm,
        Some("json") => Format::Json,
        _ if text.trim_start().starts_with('{') => Format::Json,
        _ => Format::Qasm,
    }
}

pub fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| Failure::io(path, e))
}

pub fn load_circuit(path: &Path) -> CliResult<Circuit> {
    let text = read_text(path)?;
    let parsed = match detect_format(path, &text) {
        Format::Qasm => parse(&text).map_err(Failure::from),
        Format::Json => read_json(&text).map_err(Failure::from),
    };
    parsed.map_err(|f| f.at(path))
}

pub fn load_key(path: &Path) -> CliResult<ObfuscationKey> {
    ObfuscationKey::from_json(&read_text(path)?).map_err(|e| Failure::from(e).at(path))
}

pub fn write_text(path: &Path, body: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Failure::io(dir, e))?;
    }
    fs::write(path, body).map_err(|e| Failure::io(path, e))
}

/// `out.json` -> `out.key.json`.
pub fn default_key_path(out: &Path) -> PathBuf {
    let stem = out
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("circuit");
    out.with_file_name(format!("{stem}.key.json"))
}

pub fn label_of(path: &Path) -> String {
    path.file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("circuit")
        .to_owned()
}
