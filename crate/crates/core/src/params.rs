use num::{One, ToPrimitive};
use serde::Serialize;

use crate::error::FidelityError;
use crate::phase::Coeff;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Physical parameters of the two-emitter link. Frequencies are angular
/// (rad/s) except `sigma_f`, the per-emitter spectral-diffusion standard
/// deviation, which is in Hz; rates are 1/s; lengths in metres.
#[derive(Debug, Clone)]
pub struct EmitterPair {
    /// Mean optical transition frequencies ω̄₁, ω̄₂ (rad/s).
    pub omega_bar: [f64; 2],
    /// Optical drive tones ω_L1, ω_L2 (rad/s); tuned to the means by default.
    pub laser: [f64; 2],
    /// Numeric values of the ground spin drive detunings (rad/s) used when a
    /// symbolic result is evaluated.
    pub delta_g: [f64; 2],
    /// Numeric values of the excited spin drive detunings (rad/s).
    pub delta_e: [f64; 2],
    /// Photon emission rate of the bright transition (1/s).
    pub gamma_b: f64,
    /// Decay rate of the shelving transition (1/s).
    pub gamma_a: f64,
    /// Ground and excited Zeeman splittings (rad/s); informational, used to
    /// derive the transition splitting for the cavity lifetime ratio.
    pub zeeman_g: [f64; 2],
    pub zeeman_e: [f64; 2],
    /// Per-emitter spectral diffusion standard deviation (Hz).
    pub sigma_f: f64,
    /// Photon path lengths to the beamsplitter (m).
    pub path: [f64; 2],
    /// Error in the time-of-flight estimate used for the correction (s).
    pub eps: f64,
    /// Weak-pulse parameter of the single-photon scheme.
    pub alpha: f64,
    /// Per-window wait duration T (s); known-phase bookkeeping only.
    pub wait_t: f64,
    /// Magnetic-moment ratio r = ω_E/ω_G as an exact rational; it enters both
    /// the shelved wait durations and the detuning-correlation substitution.
    pub moment_ratio: Coeff,
}

impl Default for EmitterPair {
    fn default() -> Self {
        EmitterPair {
            omega_bar: [0.0, 0.0],
            laser: [0.0, 0.0],
            delta_g: [0.0, 0.0],
            delta_e: [0.0, 0.0],
            gamma_b: 1.0,
            gamma_a: 0.0,
            zeeman_g: [0.0, 0.0],
            zeeman_e: [0.0, 0.0],
            sigma_f: 0.0,
            path: [0.0, 0.0],
            eps: 0.0,
            alpha: 0.1,
            wait_t: 0.0,
            moment_ratio: Coeff::one(),
        }
    }
}

impl EmitterPair {
    /// Mean photon time of flight T₀ = (x₁+x₂)/2c.
    pub fn flight_mean(&self) -> f64 {
        (self.path[0] + self.path[1]) / (2.0 * SPEED_OF_LIGHT)
    }

    /// Differential time of flight δT = (x₂−x₁)/c.
    pub fn flight_delta(&self) -> f64 {
        (self.path[1] - self.path[0]) / SPEED_OF_LIGHT
    }

    /// Shelving-to-bright lifetime ratio x = Γ_A/Γ_B.
    pub fn lifetime_ratio(&self) -> f64 {
        self.gamma_a / self.gamma_b
    }

    pub fn moment_ratio_f64(&self) -> f64 {
        self.moment_ratio.to_f64().unwrap_or(f64::NAN)
    }

    /// Validate the physical invariants. Returns advisory warnings (currently
    /// only the event-based detection assumption δT·Γ_B ≪ 1).
    pub fn validate(&self) -> Result<Vec<String>, FidelityError> {
        let fail = |msg: &str| Err(FidelityError::InvalidParam(msg.to_string()));
        if self.gamma_b <= 0.0 || self.gamma_b.is_nan() {
            return fail("gamma_b must be positive");
        }
        if self.gamma_a < 0.0 {
            return fail("gamma_a must be non-negative");
        }
        if self.sigma_f < 0.0 {
            return fail("sigma_f must be non-negative");
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return fail("alpha must lie in [0, 1]");
        }
        if self.path[0] < 0.0 || self.path[1] < 0.0 {
            return fail("path lengths must be non-negative");
        }
        let mut warnings = Vec::new();
        let dt_gamma = self.flight_delta().abs() * self.gamma_b;
        if dt_gamma > 0.01 {
            warnings.push(format!(
                "differential time of flight is not small against the emission rate \
                 (|δT|·Γ_B = {dt_gamma:.3}); event-based detection assumes |δT| ≪ 1/Γ_B"
            ));
        }
        Ok(warnings)
    }
}

/// Which branch a symbolic run of an order-dependent sequence follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
pub enum BranchOrder {
    /// τ₂ ≥ τ₁: the photon in the second window arrived later (ties included).
    #[default]
    SecondLater,
    /// τ₁ > τ₂.
    FirstLater,
}

/// Flags controlling a symbolic run.
#[derive(Debug, Clone)]
pub struct RunOptions {
    /// Substitute Δ_e,i → r·Δ_g,i before classifying the residual, modelling
    /// excited detunings correlated with the ground ones through the moment
    /// ratio.
    pub assume_correlated: bool,
    /// Keep δT-bearing terms in the unknown residual. By default they are
    /// classified known, since path-length drift can be stabilised or
    /// monitored independently of the emitters.
    pub path_term_unknown: bool,
    /// Treat the weak-pulse parameter as a literal rotation angle
    /// (amplitudes cos(α/2), sin(α/2)) instead of a flip probability
    /// (amplitudes √(1−α), √α).
    pub alpha_as_amplitude: bool,
    /// Branch taken by order-dependent sequences in symbolic runs.
    pub assumed_order: BranchOrder,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            assume_correlated: false,
            path_term_unknown: false,
            alpha_as_amplitude: false,
            assumed_order: BranchOrder::SecondLater,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_cleanly() {
        assert!(EmitterPair::default().validate().unwrap().is_empty());
    }

    #[test]
    fn invalid_rates_are_rejected() {
        let p = EmitterPair { gamma_b: 0.0, ..EmitterPair::default() };
        assert!(p.validate().is_err());
        let p = EmitterPair { alpha: 1.5, ..EmitterPair::default() };
        assert!(p.validate().is_err());
    }

    #[test]
    fn long_path_mismatch_warns() {
        let p = EmitterPair { gamma_b: 1e8, path: [0.0, 30.0], ..EmitterPair::default() };
        let warnings = p.validate().unwrap();
        assert_eq!(warnings.len(), 1);
    }

    #[test]
    fn flight_times_follow_geometry() {
        let p = EmitterPair {
            path: [SPEED_OF_LIGHT, 3.0 * SPEED_OF_LIGHT],
            ..EmitterPair::default()
        };
        assert!((p.flight_mean() - 2.0).abs() < 1e-12);
        assert!((p.flight_delta() - 2.0).abs() < 1e-12);
    }
}
