use std::fmt;

use num::{BigInt, One};
use serde::Serialize;

use crate::error::EngineError;
use crate::params::{EmitterPair, RunOptions};
use crate::phase::{
    ratio, Coeff, FreqExpr, FreqSymbol, LinearPhase, Substitution, TimeExpr, TimeSymbol,
};

use super::state::{Exposure, JointState, Ket};

/// The heralded Bell pair extracted from a final joint state.
///
/// `relative_phase` is φ(ket_b) − φ(ket_a) in the raw symbols accumulated by
/// the run (detector sign removed, constant reduced mod 2π); `unknown_part`
/// is its unknown residual after expanding instantaneous frequencies into
/// mean + offset and detection times into flight + emission offset.
#[derive(Debug, Clone, PartialEq)]
pub struct BellReport {
    pub ket_a: Ket,
    pub ket_b: Ket,
    pub relative_phase: LinearPhase,
    pub unknown_part: LinearPhase,
    pub heralded_sign: i8,
    pub exposure_a: Exposure,
    pub exposure_b: Exposure,
    pub herald_impurity: f64,
}

/// The standard rewrite into the analysis variables: ω_i = ω̄_i + Δ_i,
/// τ = T₀ + t₀ and t₁ = t₀ + ε, plus the excited-detuning correlation
/// Δ_e,i = r·Δ_g,i when assumed.
pub fn expansion_substitution(params: &EmitterPair, opts: &RunOptions) -> Substitution {
    let half = ratio(1, 2);
    let mut s = Substitution::new()
        .map_time(
            TimeSymbol::Tau,
            TimeExpr::symbol(TimeSymbol::FlightT0) + TimeExpr::symbol(TimeSymbol::EmitT0),
        )
        .map_time(
            TimeSymbol::ShelfT1,
            TimeExpr::symbol(TimeSymbol::EmitT0) + TimeExpr::symbol(TimeSymbol::Eps),
        )
        .map_freq(
            FreqSymbol::Omega1,
            FreqExpr::symbol(FreqSymbol::OmegaBar1) + FreqExpr::symbol(FreqSymbol::Delta1),
        )
        .map_freq(
            FreqSymbol::Omega2,
            FreqExpr::symbol(FreqSymbol::OmegaBar2) + FreqExpr::symbol(FreqSymbol::Delta2),
        )
        .map_freq(
            FreqSymbol::Omega0,
            FreqExpr::term(FreqSymbol::Omega1, half.clone())
                + FreqExpr::term(FreqSymbol::Omega2, half),
        );
    if opts.assume_correlated {
        let r = params.moment_ratio.clone();
        s = s
            .map_freq(FreqSymbol::DeltaE1, FreqExpr::term(FreqSymbol::DeltaG1, r.clone()))
            .map_freq(FreqSymbol::DeltaE2, FreqExpr::term(FreqSymbol::DeltaG2, r));
    }
    s
}

impl BellReport {
    pub fn from_state(
        state: &JointState,
        params: &EmitterPair,
        opts: &RunOptions,
    ) -> Result<Self, EngineError> {
        // The Bell pair is the two dominant coherent components.
        let mut coherent: Vec<(&Ket, &super::state::Amp)> =
            state.amps().iter().filter(|(_, a)| !a.impure).collect();
        if coherent.len() < 2 {
            return Err(EngineError::HeraldFailure);
        }
        coherent.sort_by(|(ka, a), (kb, b)| {
            b.mag
                .partial_cmp(&a.mag)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(ka.cmp(kb))
        });
        let mut pair = [coherent[0], coherent[1]];
        pair.sort_by_key(|(k, _)| **k);
        let [(ket_a, amp_a), (ket_b, amp_b)] = pair;

        let heralded_sign = if (amp_b.det_pi + amp_a.det_pi) % 2 == 0 { 1 } else { -1 };

        let mut relative_phase = LinearPhase::combine(&amp_b.phase, &amp_a.phase, -1);
        reduce_const_mod_2pi(&mut relative_phase);

        let expanded = expansion_substitution(params, opts).apply(&relative_phase)?;
        let mut unknown_part = expanded.unknown_residual();
        if !opts.path_term_unknown {
            unknown_part = unknown_part.without_time_symbol(TimeSymbol::FlightDelta);
        }

        Ok(BellReport {
            ket_a: *ket_a,
            ket_b: *ket_b,
            relative_phase,
            unknown_part,
            heralded_sign,
            exposure_a: amp_a.exposure.clone(),
            exposure_b: amp_b.exposure.clone(),
            herald_impurity: state.herald_impurity(),
        })
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(JsonReport::from(self)).expect("report serializes")
    }
}

/// Bring the constant of a phase into (−1, 1] multiples of π.
fn reduce_const_mod_2pi(p: &mut LinearPhase) {
    let c = p.const_pi().clone();
    let two = Coeff::from_integer(BigInt::from(2));
    let k = ((&c - Coeff::one()) / &two).ceil();
    p.add_pi(-(k * two));
}

fn phase_terms_json(p: &LinearPhase) -> Vec<(String, String, String)> {
    p.terms()
        .map(|(f, t, c)| (coeff_string(c), f.as_str().to_string(), t.as_str().to_string()))
        .collect()
}

fn coeff_string(c: &Coeff) -> String {
    if c.denom().is_one() {
        format!("{}", c.numer())
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

#[derive(Serialize)]
struct JsonReport {
    kets: [[String; 2]; 2],
    relative_phase: Vec<(String, String, String)>,
    const_pi: String,
    unknown_terms: Vec<(String, String, String)>,
    sign: i8,
    exposure: Vec<(String, String)>,
    herald_impurity: f64,
}

impl From<&BellReport> for JsonReport {
    fn from(r: &BellReport) -> Self {
        let ket_strings = |k: &Ket| [k.0.as_str().to_string(), k.1.as_str().to_string()];
        let mut exposure = Vec::new();
        for (label, exp) in [("ket_a", &r.exposure_a), ("ket_b", &r.exposure_b)] {
            for (ch, d) in exp.iter() {
                exposure.push((
                    format!("{}:{}", label, ch.as_str()),
                    crate::dsl::render_time_expr(d),
                ));
            }
        }
        JsonReport {
            kets: [ket_strings(&r.ket_a), ket_strings(&r.ket_b)],
            relative_phase: phase_terms_json(&r.relative_phase),
            const_pi: coeff_string(r.relative_phase.const_pi()),
            unknown_terms: phase_terms_json(&r.unknown_part),
            sign: r.heralded_sign,
            exposure,
            herald_impurity: r.herald_impurity,
        }
    }
}

impl fmt::Display for BellReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "heralded pair: {} , {}   (sign {})",
            self.ket_a,
            self.ket_b,
            if self.heralded_sign >= 0 { "+" } else { "−" }
        )?;
        writeln!(f, "relative phase: {}", self.relative_phase)?;
        writeln!(f, "unknown residual: {}", self.unknown_part)?;
        for (label, exp) in [("a", &self.exposure_a), ("b", &self.exposure_b)] {
            for (ch, d) in exp.iter() {
                writeln!(f, "decay exposure ({label}): {} × ({})", ch.as_str(), d)?;
            }
        }
        write!(f, "herald impurity: {:.6}", self.herald_impurity)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn const_reduction_lands_in_half_open_interval() {
        let cases = [
            (ratio(3, 1), ratio(1, 1)),
            (ratio(2, 1), ratio(0, 1)),
            (ratio(-1, 1), ratio(1, 1)),
            (ratio(-1, 2), ratio(-1, 2)),
            (ratio(7, 2), ratio(-1, 2)),
            (ratio(1, 1), ratio(1, 1)),
        ];
        for (input, want) in cases {
            let mut p = LinearPhase::pi_multiple(input.clone());
            reduce_const_mod_2pi(&mut p);
            assert_eq!(p.const_pi(), &want, "reducing {input}");
        }
    }
}
