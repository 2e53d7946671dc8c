//! Density of states and magnetic oscillations for the hexagonal quantum
//! graph with a Hill potential on every edge.
//!
//! Two pipelines compute the same observables: [`semiclassics`] from
//! Bohr–Sommerfeld Landau levels ([`landau`]) and [`spectral`] from exact
//! rational-flux Floquet spectra. [`compare`] joins them.
//!
//! Everything is generic over [`Real`]; the `*64` aliases below fix the
//! scalar to `f64`.

// Negated comparisons below are deliberate: NaN has to fail them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod compare;
pub mod eigen;
pub mod error;
pub mod hill;
pub mod landau;
pub mod quadrature;
pub mod roots;
pub mod scalar;
pub mod semiclassics;
pub mod spectral;
pub mod symbol;

pub use error::{Error, Result};
pub use scalar::Real;

pub type HillPotential64 = hill::HillPotential<f64>;
pub type HillModel64 = hill::HillModel<f64>;
pub type Band64 = hill::Band<f64>;
pub type DiracPoint64 = hill::DiracPoint<f64>;
pub type DiscriminantTable64 = hill::DiscriminantTable<f64>;
pub type PhaseArea64 = symbol::PhaseArea<f64>;
pub type PhaseAreaTable64 = symbol::PhaseAreaTable<f64>;
pub type BohrSommerfeldMap64 = landau::BohrSommerfeldMap<f64>;
pub type LandauSpectrum64 = landau::LandauSpectrum<f64>;
pub type HermitianMatrix64 = eigen::HermitianMatrix<f64>;
pub type Comparison64 = compare::Comparison<f64>;

/// Environment variable holding the worker thread count (`0` = one per
/// core).
pub const THREADS_ENV: &str = "HEXDOS_THREADS";

/// Sizes the global rayon pool from `HEXDOS_THREADS`. Returns the thread
/// count in use. Has no effect once the pool exists.
pub fn init_threads() -> Result<usize> {
    let n = match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| Error::InvalidInput(format!("{THREADS_ENV} must be a thread count, got {v:?}")))?,
        Err(_) => 0,
    };
    // Fails only when the pool is already built; the existing pool stays.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(rayon::current_num_threads())
}
