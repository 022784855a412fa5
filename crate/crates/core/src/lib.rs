//! Stationary-light dispersion relations and scattering spectra for
//! one-dimensional atomic ensembles coupled to a waveguide.
//!
//! * [`continuum`]: closed-form and Fourier-truncated continuum dispersion.
//! * [`discrete`]: transfer-matrix cells, Bloch vectors, branch unwinding.
//! * [`scattering`]: transmission and reflection of finite ensembles.
//!
//! All rates are in units of Γ = Γ′ + Γ_1D, lengths in units of 1/k₀, and
//! Bloch vectors are reported as q/n₀.

pub mod continuum;
pub mod discrete;
pub mod error;
pub mod numerics;
pub mod scattering;
pub mod schemes;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Order-preserving map, parallel when the `parallel` feature is on.
pub fn par_map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}
