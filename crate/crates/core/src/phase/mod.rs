//! Exact symbolic arithmetic over phases bilinear in frequency and time
//! symbols, with substitution and known/unknown residual classification.
//!
//! All coefficients are exact rationals so that phase-cancellation results
//! are structural identities, never tolerance comparisons. Frequencies are
//! angular (rad/s) throughout.

mod eval;
mod linear;
mod subst;
mod symbols;

pub use eval::{evaluate, Assignment, CompiledPhase, CompiledTimeExpr};
pub use linear::{parse_coeff, ratio, Coeff, FreqExpr, LinComb, LinearPhase, TimeExpr};
pub use subst::Substitution;
pub use symbols::{FreqSymbol, Tag, TimeSymbol};
