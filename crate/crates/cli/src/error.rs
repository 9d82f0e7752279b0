//! Process exit codes and the conversions that pick them.

use std::fmt;
use std::path::Path;

use qobf_core::bench::BenchError;
use qobf_core::interchange::InterchangeError;
use qobf_core::metrics::MetricsError;
use qobf_core::obfuscate::ObfuscateError;
use qobf_core::qasm::{ParseError, ParseErrorKind};
use qobf_core::sim::SimError;

pub const EXIT_IO: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_PARSE: u8 = 3;
pub const EXIT_UNKNOWN_VERSION: u8 = 4;
pub const EXIT_VALIDATION: u8 = 5;
pub const EXIT_SIM_CAP: u8 = 6;
pub const EXIT_THRESHOLD: u8 = 7;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self::new(EXIT_USAGE, message)
    }

    pub fn io(path: &Path, err: std::io::Error) -> Self {
        Self::new(EXIT_IO, format!("{}: {err}", path.display()))
    }

    /// Prefixes the message with the file it concerns.
    pub fn at(mut self, path: &Path) -> Self {
        self.message = format!("{}: {}", path.display(), self.message);
        self
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

pub type CliResult<T> = Result<T, Failure>;

impl From<ParseError> for Failure {
    fn from(e: ParseError) -> Self {
        let code = match e.kind {
            ParseErrorKind::UnknownVersion => EXIT_UNKNOWN_VERSION,
            _ => EXIT_PARSE,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<InterchangeError> for Failure {
    fn from(e: InterchangeError) -> Self {
        let code = match e {
            InterchangeError::Circuit(_) => EXIT_VALIDATION,
            _ => EXIT_PARSE,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        let code = match e {
            SimError::TooManyQubits { .. }
            | SimError::TooManyClbits(_)
            | SimError::BranchCap { .. } => EXIT_SIM_CAP,
            SimError::ZeroShots => EXIT_USAGE,
            _ => EXIT_VALIDATION,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<ObfuscateError> for Failure {
    fn from(e: ObfuscateError) -> Self {
        let code = match e {
            ObfuscateError::SubsetTooLarge { .. } => EXIT_USAGE,
            ObfuscateError::KeyFormat(_) | ObfuscateError::KeyJson(_) => EXIT_PARSE,
            _ => EXIT_VALIDATION,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<MetricsError> for Failure {
    fn from(e: MetricsError) -> Self {
        match e {
            MetricsError::Sim(s) => s.into(),
            MetricsError::ZeroRuns => Failure::usage(e.to_string()),
            other => Failure::new(EXIT_VALIDATION, other.to_string()),
        }
    }
}

impl From<BenchError> for Failure {
    fn from(e: BenchError) -> Self {
        match e {
            BenchError::UnknownBenchmark(_) | BenchError::BadParam(_) => {
                Failure::usage(e.to_string())
            }
            BenchError::Io { path, source } => Failure::io(&path, source),
            BenchError::Sim(s) => s.into(),
            BenchError::Metrics(m) => m.into(),
            BenchError::Obfuscate(o) => o.into(),
            BenchError::Circuit(c) => Failure::new(EXIT_VALIDATION, c.to_string()),
        }
    }
}
