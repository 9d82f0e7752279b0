pub mod bench;
pub mod circuit;
pub mod exec;
pub mod gates;
pub mod interchange;
pub mod linalg;
pub mod metrics;
pub mod obfuscate;
pub mod qasm;
pub mod security;
pub mod sim;
