use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// Bad or inconsistent input: wrong dimensions, odd N_u, unknown names.
    #[error("configuration error: {0}")]
    Config(String),

    /// Parameter outside the domain where an operation is defined.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("singularity: {what}{}", at_delta(.delta))]
    Singularity { what: String, delta: Option<Complex64> },

    #[error("pole: {0}")]
    Pole(String),

    /// Cell failed the reciprocal-pair (palindromic / unit determinant) check.
    #[error("degenerate transfer matrix: {what} (residual {residual:.3e})")]
    Degeneracy { what: String, residual: f64 },

    #[error("branch unwinding ambiguous at delta = {delta:e}; refine the grid")]
    Unwrap { delta: f64 },

    /// Another error raised while evaluating one grid point.
    #[error("{source} at delta = {delta:e}")]
    At { delta: f64, source: Box<Error> },
}

impl Error {
    /// Errors the user fixes by changing input, as opposed to numerical failures.
    pub fn is_config(&self) -> bool {
        match self {
            Error::At { source, .. } => source.is_config(),
            e => matches!(e, Error::Config(_) | Error::Domain(_)),
        }
    }

    /// The real grid point the error refers to, if known.
    pub fn delta(&self) -> Option<f64> {
        match self {
            Error::At { delta, .. } | Error::Unwrap { delta } => Some(*delta),
            Error::Singularity { delta: Some(d), .. } if d.im == 0.0 => Some(d.re),
            _ => None,
        }
    }

    /// Attach a grid point unless the error already names one.
    pub fn at(self, delta: f64) -> Self {
        if self.delta().is_some() {
            self
        } else {
            Error::At { delta, source: Box::new(self) }
        }
    }

    pub(crate) fn singular(what: impl Into<String>, delta: Complex64) -> Self {
        Error::Singularity { what: what.into(), delta: Some(delta) }
    }
}

fn at_delta(delta: &Option<Complex64>) -> String {
    match delta {
        Some(d) if d.im == 0.0 => format!(" at delta = {:e}", d.re),
        Some(d) => format!(" at delta = {:e}{:+e}i", d.re, d.im),
        None => String::new(),
    }
}
