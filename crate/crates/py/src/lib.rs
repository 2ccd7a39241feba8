//! Python bindings: the closed-form fidelity helpers, the symbolic protocol
//! verifier, the Monte Carlo estimator and the trade-off inversion.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use timebin_core::dsl::{BuiltinSeq, Parser};
use timebin_core::engine::run;
use timebin_core::error::{DslError, EngineError, FidelityError};
use timebin_core::fidelity as fid;
use timebin_core::fidelity::Strategy;
use timebin_core::params::{BranchOrder, EmitterPair, RunOptions};
use timebin_core::phase::Coeff;
use timebin_core::tradeoff;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn fidelity_err(e: FidelityError) -> PyErr {
    match e {
        FidelityError::InvalidParam(_) | FidelityError::Dsl(_) => value_err(e),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn parse_ratio(s: &str) -> PyResult<Coeff> {
    timebin_core::parse_coeff(s)
        .ok_or_else(|| value_err(format!("`{s}` is not a rational number")))
}

#[allow(clippy::too_many_arguments)]
fn emitter_params(
    gamma_b: f64,
    gamma_a: f64,
    sigma_f_hz: f64,
    eps_s: f64,
    alpha: f64,
    wait_t_s: f64,
    r: &str,
) -> PyResult<EmitterPair> {
    let params = EmitterPair {
        gamma_b,
        gamma_a,
        sigma_f: sigma_f_hz,
        eps: eps_s,
        alpha,
        wait_t: wait_t_s,
        moment_ratio: parse_ratio(r)?,
        ..EmitterPair::default()
    };
    params.validate().map_err(fidelity_err)?;
    Ok(params)
}

/// Rephasing fidelity for lifetime ratio x at acceptance fraction f_a.
#[pyfunction]
fn f_rp(x: f64, f_a: f64) -> PyResult<f64> {
    fid::f_rp(x, f_a).map_err(fidelity_err)
}

/// Post-selection fidelity for diffusion ratio theta at acceptance fraction
/// f_a; `normalized` selects the conditional-mean form.
#[pyfunction]
#[pyo3(signature = (theta, f_a, normalized = true))]
fn f_ps(theta: f64, f_a: f64, normalized: bool) -> PyResult<f64> {
    fid::f_ps(theta, f_a, normalized).map_err(fidelity_err)
}

/// Shelving survival e^(−gamma_a·t1).
#[pyfunction]
fn f_rp_given_t1(gamma_a: f64, t1: f64) -> PyResult<f64> {
    fid::f_rp_given_t1(gamma_a, t1).map_err(fidelity_err)
}

/// Post-selection fidelity at a known emission time.
#[pyfunction]
fn f_ps_given_t1(sigma_f_hz: f64, t1: f64) -> PyResult<f64> {
    fid::f_ps_given_t1(sigma_f_hz, t1).map_err(fidelity_err)
}

/// Dephasing time from the diffusion linewidth (Hz).
#[pyfunction]
fn t2_star(sigma_f_hz: f64) -> PyResult<f64> {
    fid::t2_star(sigma_f_hz).map_err(fidelity_err)
}

/// Cavity-selective lifetime ratio from the transition splitting and cavity
/// linewidth (same units).
#[pyfunction]
fn purcell_ratio(delta_split: f64, kappa: f64) -> PyResult<f64> {
    fid::purcell_ratio(delta_split, kappa).map_err(fidelity_err)
}

/// Acceptance window from the acceptance fraction.
#[pyfunction]
fn acceptance_to_cutoff(f_a: f64, gamma_b: f64) -> PyResult<f64> {
    fid::acceptance_to_cutoff(f_a, gamma_b).map_err(fidelity_err)
}

/// Acceptance fraction from the acceptance window.
#[pyfunction]
fn cutoff_to_acceptance(t_c: f64, gamma_b: f64) -> PyResult<f64> {
    fid::cutoff_to_acceptance(t_c, gamma_b).map_err(fidelity_err)
}

/// Names of the built-in protocol sequences.
#[pyfunction]
fn builtin_names() -> Vec<&'static str> {
    BuiltinSeq::ALL.iter().map(|b| b.name()).collect()
}

/// Canonical text of a built-in sequence (moment ratio as `p/q` or decimal).
#[pyfunction]
#[pyo3(signature = (name, r = "1"))]
fn render_builtin(name: &str, r: &str) -> PyResult<String> {
    let b: BuiltinSeq = name.parse().map_err(|e: DslError| value_err(e))?;
    Ok(b.sequence(&parse_ratio(r)?).render())
}

/// Parse a pulse-sequence program and return its canonical rendering.
#[pyfunction]
#[pyo3(signature = (text, r = "1"))]
fn parse_sequence(text: &str, r: &str) -> PyResult<String> {
    let parser = Parser::new().with_param("r", parse_ratio(r)?);
    let seq = parser.parse(text).map_err(value_err)?;
    Ok(seq.render())
}

/// Run a built-in protocol symbolically and report the heralded Bell pair.
///
/// Returns a dict with the kets, the relative phase, the unknown residual
/// (both pretty-printed and as (coeff, freq, time) term triples), the
/// detector sign and the decay exposure.
#[pyfunction]
#[pyo3(signature = (name, r = "1", assume_correlated = None, second_photon_later = true))]
fn verify_builtin<'py>(
    py: Python<'py>,
    name: &str,
    r: &str,
    assume_correlated: Option<bool>,
    second_photon_later: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let b: BuiltinSeq = name.parse().map_err(|e: DslError| value_err(e))?;
    let params = EmitterPair { moment_ratio: parse_ratio(r)?, ..EmitterPair::default() };
    let opts = RunOptions {
        assume_correlated: assume_correlated.unwrap_or(b.is_shelved()),
        assumed_order: if second_photon_later {
            BranchOrder::SecondLater
        } else {
            BranchOrder::FirstLater
        },
        ..RunOptions::default()
    };
    let seq = b.sequence(&params.moment_ratio);
    let (_, report) = run(&seq, &params, &opts).map_err(|e: EngineError| value_err(e))?;

    let terms: Vec<(String, String, String)> = report
        .unknown_part
        .terms()
        .map(|(f, t, c)| (c.to_string(), f.as_str().to_string(), t.as_str().to_string()))
        .collect();
    let d = PyDict::new(py);
    d.set_item("sequence", seq.name)?;
    d.set_item(
        "kets",
        (report.ket_a.to_string(), report.ket_b.to_string()),
    )?;
    d.set_item("relative_phase", report.relative_phase.to_string())?;
    d.set_item("unknown_residual", report.unknown_part.to_string())?;
    d.set_item("residual_terms", terms)?;
    d.set_item("sign", report.heralded_sign)?;
    d.set_item("herald_impurity", report.herald_impurity)?;
    Ok(d)
}

/// Monte Carlo Bell fidelity of a built-in protocol.
#[pyfunction]
#[pyo3(signature = (
    sequence, f_a, n, seed,
    gamma_b = 1.0, gamma_a = 0.0, sigma_f_hz = 0.0, eps_s = 0.0,
    alpha = 0.1, wait_t_s = 0.0, r = "1", assume_correlated = false,
))]
#[allow(clippy::too_many_arguments)]
fn mc_fidelity(
    sequence: &str,
    f_a: f64,
    n: u64,
    seed: u64,
    gamma_b: f64,
    gamma_a: f64,
    sigma_f_hz: f64,
    eps_s: f64,
    alpha: f64,
    wait_t_s: f64,
    r: &str,
    assume_correlated: bool,
) -> PyResult<(f64, f64)> {
    let b: BuiltinSeq = sequence.parse().map_err(|e: DslError| value_err(e))?;
    let params = emitter_params(gamma_b, gamma_a, sigma_f_hz, eps_s, alpha, wait_t_s, r)?;
    let opts = RunOptions { assume_correlated, ..RunOptions::default() };
    let est = fid::mc_fidelity(b, &params, &opts, f_a, n, seed).map_err(fidelity_err)?;
    Ok((est.mean, est.stderr))
}

/// Largest acceptance fraction meeting a target fidelity.
///
/// `strategy` is "rephase" (value = lifetime ratio x) or "postselect"
/// (value = diffusion ratio theta).
#[pyfunction]
#[pyo3(signature = (strategy, value, target_f, gamma_b = 1.0, tol = 1e-9))]
fn max_acceptance<'py>(
    py: Python<'py>,
    strategy: &str,
    value: f64,
    target_f: f64,
    gamma_b: f64,
    tol: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let s = match strategy {
        "rephase" => Strategy::Rephase { x: value },
        "postselect" => Strategy::PostSelect { theta: value },
        other => return Err(value_err(format!("unknown strategy `{other}`"))),
    };
    let row = tradeoff::max_acceptance(s, gamma_b, target_f, tol, true).map_err(fidelity_err)?;
    let d = PyDict::new(py);
    d.set_item("strategy", s.label())?;
    d.set_item("parameter", s.parameter())?;
    d.set_item("target_f", row.target_f)?;
    d.set_item("f_a_max", row.f_a_max)?;
    d.set_item("t_c", row.t_c)?;
    d.set_item("relative_rate", row.relative_rate)?;
    d.set_item("reachable", row.reachable)?;
    Ok(d)
}

#[pymodule]
fn timebin(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_function(wrap_pyfunction!(f_rp, m)?)?;
    m.add_function(wrap_pyfunction!(f_ps, m)?)?;
    m.add_function(wrap_pyfunction!(f_rp_given_t1, m)?)?;
    m.add_function(wrap_pyfunction!(f_ps_given_t1, m)?)?;
    m.add_function(wrap_pyfunction!(t2_star, m)?)?;
    m.add_function(wrap_pyfunction!(purcell_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(acceptance_to_cutoff, m)?)?;
    m.add_function(wrap_pyfunction!(cutoff_to_acceptance, m)?)?;
    m.add_function(wrap_pyfunction!(builtin_names, m)?)?;
    m.add_function(wrap_pyfunction!(render_builtin, m)?)?;
    m.add_function(wrap_pyfunction!(parse_sequence, m)?)?;
    m.add_function(wrap_pyfunction!(verify_builtin, m)?)?;
    m.add_function(wrap_pyfunction!(mc_fidelity, m)?)?;
    m.add_function(wrap_pyfunction!(max_acceptance, m)?)?;
    Ok(())
}
