//! Event-based execution of pulse sequences on the two-emitter joint state.
//!
//! Emission and detection apply the analytically integrated projection for a
//! click at a recorded time, so photon wavepackets never need to be
//! discretised; phases stay exact symbols throughout.

mod exec;
mod report;
mod state;

pub use exec::{apply_emission_and_detection, apply_rotation, apply_wait, run, Runner};
pub use report::{expansion_substitution, BellReport};
pub use state::{add_amp, Amp, Click, DecayChannel, Exposure, JointState, Ket, SpinState};
