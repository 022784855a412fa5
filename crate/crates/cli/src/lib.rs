//! Library side of the `sld` command: configuration, tables and figure presets.

pub mod config;
pub mod figures;
pub mod run;

/// Failures mapped onto exit codes: 2 for input problems, 3 for numerics.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerics(sld_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerics(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Numerics(e) => write!(f, "numerical failure: {e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<sld_core::Error> for CliError {
    fn from(e: sld_core::Error) -> Self {
        if e.is_config() {
            CliError::Config(e.to_string())
        } else {
            CliError::Numerics(e)
        }
    }
}

/// Size the global thread pool from SLD_THREADS, if set.
pub fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("SLD_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("SLD_THREADS must be a positive integer, got '{v}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))
}
