//! Simulation and verification of time-bin spin-spin entanglement protocols
//! between two solid-state emitters under quasi-static spectral diffusion.
//!
//! The crate tracks Bell-state phases as exact symbolic expressions, proving
//! which contributions cancel under the rephasing correction, and provides
//! analytic, quadrature and Monte Carlo engines for the fidelity versus
//! acceptance-fraction trade-off of the rephasing and post-selection
//! strategies.

pub mod dsl;
pub mod engine;
pub mod error;
pub mod fidelity;
pub mod params;
pub mod phase;
pub mod tradeoff;

pub use dsl::{builtin, parse, BuiltinSeq, Sequence};
pub use engine::{run, BellReport, JointState};
pub use error::{DslError, EngineError, FidelityError, PhaseError};
pub use params::{BranchOrder, EmitterPair, RunOptions};
pub use phase::{parse_coeff, Assignment, Coeff, FreqSymbol, LinearPhase, Substitution, TimeSymbol};
