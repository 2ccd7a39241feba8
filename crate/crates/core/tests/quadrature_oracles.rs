//! Independent quadrature oracles for the post-selection fidelity integral:
//! a brute-force fixed-grid Simpson rule in the acceptance variable and the
//! time-domain form of the same average. All three routes must agree.

use timebin_core::fidelity::{adaptive_simpson, f_ps};

/// Composite Simpson on a fixed grid of `n` panels (n even).
fn fixed_grid_simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    assert!(n.is_multiple_of(2));
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

#[test]
fn post_selection_average_agrees_across_three_routes() {
    let theta: f64 = 1.0;
    let f_a: f64 = 0.5;
    let a = 2.0 * std::f64::consts::PI * theta;

    // Route 1: production adaptive quadrature in the acceptance variable.
    let production = f_ps(theta, f_a, true).unwrap();

    // Route 2: brute-force fixed grid on the same integrand (1e7 panels).
    let integrand = |f: f64| {
        if f >= 1.0 {
            0.0
        } else {
            let arg = a * (1.0 - f).ln();
            (-arg * arg).exp()
        }
    };
    let brute = 0.5 * (1.0 + fixed_grid_simpson(integrand, 0.0, f_a, 10_000_000) / f_a);

    // Route 3: the time-domain form of the same conditional mean,
    // (1/f_A)∫₀^{t_c} Γe^{−Γt}(1+e^{−β²t²/2})/2 dt with Γ = 1, β = √2·2πσ_f
    // and σ_f = θΓ.
    let beta_sq = 2.0 * a * a;
    let t_c = -(1.0 - f_a).ln();
    let t_integrand = |t: f64| (-t).exp() * 0.5 * (1.0 + (-0.5 * beta_sq * t * t).exp());
    let time_domain = adaptive_simpson(t_integrand, 0.0, t_c, 1e-12, 60).unwrap() / f_a;

    assert!(
        (production - brute).abs() < 1e-8,
        "production {production} vs brute force {brute}"
    );
    assert!(
        (production - time_domain).abs() < 1e-8,
        "production {production} vs time domain {time_domain}"
    );
    // Frozen reference value computed from the brute-force oracle.
    assert!(
        (production - 0.629_224_670_694_14).abs() < 1e-9,
        "value drifted: {production}"
    );
}

#[test]
fn post_selection_average_at_full_acceptance() {
    // f_A = 1 maps to an unbounded time window; the acceptance-variable
    // integral stays finite and matches the truncated time-domain form.
    let theta: f64 = 0.4;
    let a = 2.0 * std::f64::consts::PI * theta;
    let production = f_ps(theta, 1.0, true).unwrap();
    let beta_sq = 2.0 * a * a;
    let t_integrand = |t: f64| (-t).exp() * 0.5 * (1.0 + (-0.5 * beta_sq * t * t).exp());
    let time_domain = adaptive_simpson(t_integrand, 0.0, 60.0, 1e-12, 60).unwrap();
    assert!(
        (production - time_domain).abs() < 1e-8,
        "{production} vs {time_domain}"
    );
}
