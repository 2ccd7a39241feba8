//! Bell-state fidelity versus acceptance fraction: closed forms, quadrature
//! cross-checks, and a deterministic Monte Carlo estimator driven by the
//! symbolic engine, plus the cavity/dephasing hardware helpers.

mod closed;
mod curve;
mod mc;
mod quad;

pub use closed::{
    acceptance_to_cutoff, cutoff_to_acceptance, f_ps, f_ps_given_t1, f_rp, f_rp_given_t1,
    f_rp_time_integral, purcell_ratio, sigma_from_t2_star, t2_star,
};
pub use curve::{
    curves_csv_string, write_curves_csv, CurvePoint, FidelityCurve, Provenance, Strategy,
};
pub use mc::{mc_fidelity, MCEstimate, MIN_SAMPLES};
pub use quad::adaptive_simpson;
