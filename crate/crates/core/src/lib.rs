//! Simulation and optimisation workbench for metasurface-assisted MISO
//! systems.
//!
//! Two system models are covered:
//!
//! * a multi-cell wideband OFDM network where each base station owns a
//!   frequency-selective, switch-coupled metasurface, optimised by the
//!   pricing-based distributed iteration in [`sca`];
//! * a single-BS narrowband broadcast channel served through banded
//!   metasurfaces with discrete phases, driven by the evolved neural
//!   controllers in [`neuroevo`].
//!
//! Everything random is drawn from streams keyed by `(seed, module, index)`
//! (see [`rng`]), so results depend only on the configuration and seed,
//! never on thread count.

pub mod assignment;
pub mod channel;
pub mod error;
pub mod experiment;
pub mod metrics;
pub mod neuroevo;
pub mod par;
pub mod ris;
pub mod rng;
pub mod sca;
pub mod scenario;

pub use error::{Error, Result};
pub use par::Exec;
pub use scenario::{build_scenario, Config, WidebandScenario};
