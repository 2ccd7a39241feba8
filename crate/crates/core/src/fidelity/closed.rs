use crate::error::FidelityError;

use super::quad::adaptive_simpson;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

fn invalid(msg: impl Into<String>) -> FidelityError {
    FidelityError::InvalidParam(msg.into())
}

fn check_fa(f_a: f64) -> Result<(), FidelityError> {
    if !(f_a > 0.0 && f_a <= 1.0) {
        return Err(invalid(format!("acceptance fraction must lie in (0, 1], got {f_a}")));
    }
    Ok(())
}

/// Rephasing fidelity for a known shelving duration: the probability that
/// the shelf (rate Γ_A) has not decayed after t₁.
pub fn f_rp_given_t1(gamma_a: f64, t1: f64) -> Result<f64, FidelityError> {
    if gamma_a < 0.0 || t1 < 0.0 {
        return Err(invalid("gamma_a and t1 must be non-negative"));
    }
    Ok((-gamma_a * t1).exp())
}

/// Rephasing fidelity averaged over accepted events:
/// F(x, f_A) = (1 − (1−f_A)^{1+x}) / (f_A (1+x)), with x = Γ_A/Γ_B.
///
/// For small f_A the direct form loses significance to cancellation (absolute
/// error ~ε/f_A), so a series in f_A takes over; the limit f_A → 0⁺ is 1.
pub fn f_rp(x: f64, f_a: f64) -> Result<f64, FidelityError> {
    if x < 0.0 {
        return Err(invalid("lifetime ratio x must be non-negative"));
    }
    check_fa(f_a)?;
    if x == 0.0 {
        return Ok(1.0); // perfect shelf: the closed form is identically 1
    }
    if f_a < 1e-4 {
        let f2 = f_a * f_a;
        return Ok(1.0 - x * f_a / 2.0 + x * (x - 1.0) * f2 / 6.0
            - x * (x - 1.0) * (x - 2.0) * f2 * f_a / 24.0);
    }
    Ok((1.0 - (1.0 - f_a).powf(1.0 + x)) / (f_a * (1.0 + x)))
}

/// The same average computed as a time-domain integral over the emission
/// distribution, (1/f_A)∫₀^{t_c} Γ e^{−Γt} e^{−xΓt} dt, by quadrature.
/// Independent of Γ after rescaling, so the rate argument is implicit.
pub fn f_rp_time_integral(x: f64, f_a: f64, abs_tol: f64) -> Result<f64, FidelityError> {
    if x < 0.0 {
        return Err(invalid("lifetime ratio x must be non-negative"));
    }
    check_fa(f_a)?;
    // u = Γ_B t; an upper limit of 60 leaves a tail below e^{−60}.
    let u_max = (-(1.0 - f_a).ln()).min(60.0);
    let integral = adaptive_simpson(|u| (-(1.0 + x) * u).exp(), 0.0, u_max, abs_tol, 60)?;
    Ok(integral / f_a)
}

/// Post-selection fidelity for a known emission time:
/// (1 + e^{−β²t₁²/2})/2 with β = √2·2πσ_f.
pub fn f_ps_given_t1(sigma_f: f64, t1: f64) -> Result<f64, FidelityError> {
    if sigma_f < 0.0 || t1 < 0.0 {
        return Err(invalid("sigma_f and t1 must be non-negative"));
    }
    let beta = std::f64::consts::SQRT_2 * TWO_PI * sigma_f;
    Ok((1.0 + (-0.5 * beta * beta * t1 * t1).exp()) / 2.0)
}

/// Post-selection fidelity averaged over accepted events, by adaptive
/// quadrature in the acceptance variable:
///
///   F(θ, f_A) = ½ (1 + (1/f_A) ∫₀^{f_A} e^{−(2πθ ln(1−f))²} df),
///
/// with θ = σ_f/Γ. The 1/f_A factor makes this the conditional mean of the
/// per-event fidelity over accepted events, so F(0, f_A) = 1 for every
/// window; `normalized = false` drops it for comparison against the bare
/// integral form.
pub fn f_ps(theta: f64, f_a: f64, normalized: bool) -> Result<f64, FidelityError> {
    if theta < 0.0 {
        return Err(invalid("diffusion ratio theta must be non-negative"));
    }
    check_fa(f_a)?;
    let integral = if theta == 0.0 {
        f_a
    } else {
        let a = TWO_PI * theta;
        let integrand = move |f: f64| {
            if f >= 1.0 {
                0.0 // true limit of the integrand as f → 1
            } else {
                let arg = a * (1.0 - f).ln();
                (-arg * arg).exp()
            }
        };
        adaptive_simpson(integrand, 0.0, f_a, 1e-10, 60)?
    };
    Ok(0.5 * (1.0 + if normalized { integral / f_a } else { integral }))
}

/// Acceptance window from the acceptance fraction: t_c = −ln(1−f_A)/Γ_B.
/// f_A = 1 maps to an infinite window.
pub fn acceptance_to_cutoff(f_a: f64, gamma_b: f64) -> Result<f64, FidelityError> {
    if gamma_b <= 0.0 {
        return Err(invalid("gamma_b must be positive"));
    }
    check_fa(f_a)?;
    if f_a == 1.0 {
        return Ok(f64::INFINITY);
    }
    Ok(-(1.0 - f_a).ln() / gamma_b)
}

/// Inverse of [`acceptance_to_cutoff`]: f_A = 1 − e^{−Γ_B t_c}.
pub fn cutoff_to_acceptance(t_c: f64, gamma_b: f64) -> Result<f64, FidelityError> {
    if gamma_b <= 0.0 {
        return Err(invalid("gamma_b must be positive"));
    }
    if t_c < 0.0 {
        return Err(invalid("cutoff time must be non-negative"));
    }
    Ok(1.0 - (-gamma_b * t_c).exp())
}

/// Dephasing time from the per-emitter diffusion linewidth:
/// T₂* = 1/(√2 π σ_f).
pub fn t2_star(sigma_f: f64) -> Result<f64, FidelityError> {
    if sigma_f <= 0.0 {
        return Err(invalid("sigma_f must be positive"));
    }
    Ok(1.0 / (std::f64::consts::SQRT_2 * std::f64::consts::PI * sigma_f))
}

/// Inverse of [`t2_star`] (the relation is an involution).
pub fn sigma_from_t2_star(t2: f64) -> Result<f64, FidelityError> {
    if t2 <= 0.0 {
        return Err(invalid("T2* must be positive"));
    }
    Ok(1.0 / (std::f64::consts::SQRT_2 * std::f64::consts::PI * t2))
}

/// Lifetime ratio of the two optical transitions for a cavity resonant with
/// the bright one: x = (1 + (2Δ_split/κ)²)^{−1}.
pub fn purcell_ratio(delta_split: f64, kappa: f64) -> Result<f64, FidelityError> {
    if kappa <= 0.0 {
        return Err(invalid("cavity linewidth must be positive"));
    }
    if delta_split < 0.0 {
        return Err(invalid("transition splitting must be non-negative"));
    }
    let q = 2.0 * delta_split / kappa;
    Ok(1.0 / (1.0 + q * q))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn survival_fidelity_anchors() {
        assert_eq!(f_rp_given_t1(123.0, 0.0).unwrap(), 1.0);
        assert_eq!(f_rp_given_t1(0.0, 55.0).unwrap(), 1.0);
        let half = f_rp_given_t1(1.0, std::f64::consts::LN_2).unwrap();
        assert!((half - 0.5).abs() < 1e-15);
        assert!(f_rp_given_t1(-1.0, 0.0).is_err());
    }

    #[test]
    fn rephasing_closed_form_anchors() {
        assert!((f_rp(1.0, 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((f_rp(0.1, 1.0).unwrap() - 1.0 / 1.1).abs() < 1e-15);
        // equal-lifetime shelf: F = 1 − f_A/2
        assert!((f_rp(1.0, 0.5).unwrap() - 0.75).abs() < 1e-14);
        // perfect shelf
        for fa in [0.1, 0.5, 1.0] {
            assert_eq!(f_rp(0.0, fa).unwrap(), 1.0);
        }
    }

    #[test]
    fn rephasing_series_matches_closed_form_at_crossover() {
        // Just below the series threshold the direct form still carries
        // ~ε/f_A ≈ 4e-12 of cancellation error; the series must sit inside it.
        for x in [0.05, 0.7, 3.0] {
            let fa = 0.5e-4;
            let series = f_rp(x, fa).unwrap();
            let direct = (1.0 - (1.0 - fa).powf(1.0 + x)) / (fa * (1.0 + x));
            assert!((series - direct).abs() < 1e-11, "x={x}: {series} vs {direct}");
            assert!((f_rp(x, 1e-12).unwrap() - 1.0).abs() < 1e-11);
        }
    }

    #[test]
    fn time_domain_integral_matches_closed_form() {
        for &x in &[0.0, 0.01, 0.5, 1.0, 5.0] {
            for &fa in &[0.05, 0.3, 0.9, 1.0] {
                let quad = f_rp_time_integral(x, fa, 1e-12).unwrap();
                let exact = f_rp(x, fa).unwrap();
                assert!(
                    (quad - exact).abs() < 1e-10,
                    "x={x} fa={fa}: {quad} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn post_selection_given_t1_anchors() {
        assert_eq!(f_ps_given_t1(0.0, 1.0).unwrap(), 1.0);
        assert_eq!(f_ps_given_t1(5.0e5, 0.0).unwrap(), 1.0);
        // β t₁ = 2 → (1 + e^{−2})/2
        let sigma = 1.0;
        let beta = std::f64::consts::SQRT_2 * TWO_PI * sigma;
        let v = f_ps_given_t1(sigma, 2.0 / beta).unwrap();
        assert!((v - 0.5676676416183064).abs() < 1e-15);
    }

    #[test]
    fn post_selection_limits() {
        assert_eq!(f_ps(0.0, 1.0, true).unwrap(), 1.0);
        assert_eq!(f_ps(0.0, 0.3, true).unwrap(), 1.0);
        // enormous diffusion: conditional fidelity approaches 1/2
        let v = f_ps(1e4, 0.5, true).unwrap();
        assert!(v > 0.5 && v < 0.5001, "got {v}");
        // unnormalized form keeps the bare integral
        let u = f_ps(0.0, 0.3, false).unwrap();
        assert!((u - 0.65).abs() < 1e-12);
    }

    #[test]
    fn cutoff_round_trip() {
        let t = acceptance_to_cutoff(1.0 - (-1.0f64).exp(), 1.0).unwrap();
        assert!((t - 1.0).abs() < 1e-12);
        let t = acceptance_to_cutoff(0.5, 2.0).unwrap();
        assert!((t - std::f64::consts::LN_2 / 2.0).abs() < 1e-15);
        assert_eq!(acceptance_to_cutoff(1.0, 1.0).unwrap(), f64::INFINITY);
        for fa in [0.01, 0.37, 0.99] {
            let g = 3.7e5;
            let rt = cutoff_to_acceptance(acceptance_to_cutoff(fa, g).unwrap(), g).unwrap();
            assert!((rt - fa).abs() < 1e-12);
        }
    }

    #[test]
    fn dephasing_time_anchors() {
        let s = 1.0 / (std::f64::consts::SQRT_2 * std::f64::consts::PI);
        assert!((t2_star(s).unwrap() - 1.0).abs() < 1e-15);
        // doubling the linewidth halves the dephasing time
        let t1 = t2_star(1e5).unwrap();
        let t2 = t2_star(2e5).unwrap();
        assert!((t1 / t2 - 2.0).abs() < 1e-12);
        // 200 kHz diffusion sits near 1.1 µs
        let t = t2_star(2e5).unwrap();
        assert!((t - 1.1254e-6).abs() < 1e-10);
        assert!(t2_star(0.0).is_err());
        // involution
        let rt = sigma_from_t2_star(t2_star(3.3e5).unwrap()).unwrap();
        assert!((rt - 3.3e5).abs() < 1e-6);
    }

    #[test]
    fn purcell_ratio_anchors() {
        assert_eq!(purcell_ratio(0.0, 1e9).unwrap(), 1.0);
        assert!((purcell_ratio(1.5e9, 1e9).unwrap() - 0.1).abs() < 1e-15);
        assert!((purcell_ratio(0.5e9, 1e9).unwrap() - 0.5).abs() < 1e-15);
        assert!(purcell_ratio(1.0, 0.0).is_err());
    }
}
