//! Structured-population models of hematopoietic stem cells.
//!
//! The crate covers a hierarchy of descriptions of the same dynamics:
//!
//! * [`abm`]: the hourly stochastic agent-based model,
//! * [`pde_full`]: the transport system with maturity and cell-cycle coordinates,
//! * [`pde_reduced`]: four progressively simpler transport systems,
//! * [`dde`]: the delay system equivalent to the simplest transport system,
//!
//! together with the analysis tools used to understand them: steady states
//! ([`steady`]), the frozen-coefficient eigenproblem and the characteristic
//! equation of the linearisation ([`spectral`]) and parameter scans
//! ([`scan`]).

pub mod abm;
pub mod config;
pub mod dde;
pub mod error;
pub mod grid;
pub mod numeric;
pub mod params;
pub mod pde_full;
pub mod pde_reduced;
pub mod scan;
pub mod spectral;
pub mod steady;
pub mod trace;

pub use error::{Error, Result};
pub use params::{KnotSet, Preset, RawParameters, RescaledParameters, SigmoidCoefficients};
pub use trace::{PopulationTrace, TracePoint};
