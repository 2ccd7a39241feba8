use std::fmt;
use std::io::{self, Write};

use serde::Serialize;

use crate::dsl::BuiltinSeq;
use crate::error::FidelityError;
use crate::params::{EmitterPair, RunOptions};

use super::closed::{f_ps, f_rp};
use super::mc::{mc_fidelity, MCEstimate};

/// A strategy against quasi-static spectral diffusion: rephase the unknown
/// phase via a shelving state with lifetime ratio x = Γ_A/Γ_B, or post-select
/// early heralds under diffusion ratio θ = σ_f/Γ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "strategy", rename_all = "lowercase")]
pub enum Strategy {
    Rephase { x: f64 },
    PostSelect { theta: f64 },
}

impl Strategy {
    pub fn label(&self) -> &'static str {
        match self {
            Strategy::Rephase { .. } => "rephase",
            Strategy::PostSelect { .. } => "postselect",
        }
    }

    /// The strategy's scalar parameter (x or θ).
    pub fn parameter(&self) -> f64 {
        match self {
            Strategy::Rephase { x } => *x,
            Strategy::PostSelect { theta } => *theta,
        }
    }

    /// Analytic fidelity at acceptance fraction `f_a`.
    pub fn fidelity(&self, f_a: f64, normalized_eq: bool) -> Result<f64, FidelityError> {
        match self {
            Strategy::Rephase { x } => f_rp(*x, f_a),
            Strategy::PostSelect { theta } => f_ps(*theta, f_a, normalized_eq),
        }
    }

    /// The built-in sequence and emitter parameters whose Monte Carlo model
    /// realizes this strategy at bright rate `gamma_b`.
    pub fn mc_setup(&self, gamma_b: f64) -> (BuiltinSeq, EmitterPair) {
        let mut params = EmitterPair { gamma_b, ..EmitterPair::default() };
        match self {
            Strategy::Rephase { x } => {
                params.gamma_a = x * gamma_b;
                (BuiltinSeq::SingleRephaseShelved, params)
            }
            Strategy::PostSelect { theta } => {
                params.sigma_f = theta * gamma_b;
                (BuiltinSeq::SingleStandard, params)
            }
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::Rephase { x } => write!(f, "rephase(x={x})"),
            Strategy::PostSelect { theta } => write!(f, "postselect(theta={theta})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub f_a: f64,
    pub fidelity: f64,
    pub stderr: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Analytic,
    MonteCarlo,
}

/// Sampled (f_A, F) pairs for one strategy and parameter value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FidelityCurve {
    pub strategy: Strategy,
    pub provenance: Provenance,
    pub points: Vec<CurvePoint>,
}

impl FidelityCurve {
    pub fn analytic(
        strategy: Strategy,
        fa_grid: &[f64],
        normalized_eq: bool,
    ) -> Result<Self, FidelityError> {
        check_grid(fa_grid)?;
        let points = fa_grid
            .iter()
            .map(|&f_a| {
                Ok(CurvePoint { f_a, fidelity: strategy.fidelity(f_a, normalized_eq)?, stderr: None })
            })
            .collect::<Result<_, FidelityError>>()?;
        Ok(FidelityCurve { strategy, provenance: Provenance::Analytic, points })
    }

    /// Monte Carlo curve; each grid point gets its own derived seed so the
    /// output is deterministic in (seed, grid).
    pub fn monte_carlo(
        strategy: Strategy,
        fa_grid: &[f64],
        gamma_b: f64,
        n: u64,
        seed: u64,
    ) -> Result<Self, FidelityError> {
        check_grid(fa_grid)?;
        let (sequence, params) = strategy.mc_setup(gamma_b);
        let opts = RunOptions::default();
        let points = fa_grid
            .iter()
            .enumerate()
            .map(|(i, &f_a)| {
                let est: MCEstimate =
                    mc_fidelity(sequence, &params, &opts, f_a, n, point_seed(seed, i as u64))?;
                Ok(CurvePoint { f_a, fidelity: est.mean, stderr: Some(est.stderr) })
            })
            .collect::<Result<_, FidelityError>>()?;
        Ok(FidelityCurve { strategy, provenance: Provenance::MonteCarlo, points })
    }

    /// Fidelity must never increase with the acceptance fraction.
    pub fn is_monotone_non_increasing(&self, slack: f64) -> bool {
        self.points
            .windows(2)
            .all(|w| w[1].fidelity <= w[0].fidelity + slack)
    }
}

fn check_grid(fa_grid: &[f64]) -> Result<(), FidelityError> {
    if fa_grid.is_empty() {
        return Err(FidelityError::InvalidParam("empty acceptance grid".into()));
    }
    if !fa_grid.windows(2).all(|w| w[0] < w[1]) {
        return Err(FidelityError::InvalidParam(
            "acceptance grid must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Independent per-point seed stream (splitmix mixing of the base seed).
fn point_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// CSV serialization: header `f_A,F,stderr,strategy,x_or_theta`, floats in
/// shortest round-trip form, stderr empty on analytic rows.
pub fn write_curves_csv<W: Write>(mut w: W, curves: &[FidelityCurve]) -> io::Result<()> {
    writeln!(w, "f_A,F,stderr,strategy,x_or_theta")?;
    for curve in curves {
        for p in &curve.points {
            let stderr = p.stderr.map(|s| s.to_string()).unwrap_or_default();
            writeln!(
                w,
                "{},{},{},{},{}",
                p.f_a,
                p.fidelity,
                stderr,
                curve.strategy.label(),
                curve.strategy.parameter()
            )?;
        }
    }
    Ok(())
}

pub fn curves_csv_string(curves: &[FidelityCurve]) -> String {
    let mut buf = Vec::new();
    write_curves_csv(&mut buf, curves).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("CSV output is UTF-8")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analytic_curves_are_monotone() {
        let grid: Vec<f64> = (1..=100).map(|i| i as f64 / 100.0).collect();
        for s in [
            Strategy::Rephase { x: 0.01 },
            Strategy::Rephase { x: 1.0 },
            Strategy::PostSelect { theta: 0.1 },
            Strategy::PostSelect { theta: 10.0 },
        ] {
            let c = FidelityCurve::analytic(s, &grid, true).unwrap();
            assert!(c.is_monotone_non_increasing(1e-12), "{s} not monotone");
        }
    }

    #[test]
    fn zero_theta_curve_is_all_ones() {
        let grid = [0.25, 0.5, 1.0];
        let c = FidelityCurve::analytic(Strategy::PostSelect { theta: 0.0 }, &grid, true).unwrap();
        assert!(c.points.iter().all(|p| p.fidelity == 1.0));
    }

    #[test]
    fn csv_layout_and_float_formatting() {
        let c = FidelityCurve::analytic(Strategy::Rephase { x: 1.0 }, &[0.5, 1.0], true).unwrap();
        let text = curves_csv_string(&[c]);
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "f_A,F,stderr,strategy,x_or_theta");
        assert_eq!(lines.next().unwrap(), "0.5,0.75,,rephase,1");
        assert_eq!(lines.next().unwrap(), "1,0.5,,rephase,1");
    }

    #[test]
    fn grid_must_increase() {
        assert!(FidelityCurve::analytic(Strategy::Rephase { x: 1.0 }, &[0.5, 0.5], true).is_err());
        assert!(FidelityCurve::analytic(Strategy::Rephase { x: 1.0 }, &[], true).is_err());
    }
}
