//! Inversion of the fidelity curves: the largest acceptance fraction (and so
//! relative entanglement rate) that still meets a target fidelity.

use serde::Serialize;

use crate::error::FidelityError;
use crate::fidelity::{acceptance_to_cutoff, Strategy};

/// Result of maximizing the acceptance fraction under a fidelity floor.
/// `relative_rate` is the acceptance fraction itself: accepted events per
/// attempt, the rate proxy that needs no link parameters.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TradeoffResult {
    #[serde(flatten)]
    pub strategy: Strategy,
    pub target_f: f64,
    pub f_a_max: f64,
    pub t_c: f64,
    pub relative_rate: f64,
    pub reachable: bool,
}

/// Largest f_A with F(f_A) ≥ `target_f`, found by bisection on the monotone
/// non-increasing fidelity curve.
///
/// Returns f_A = 1 when even full acceptance meets the target, and a
/// `reachable: false` result at f_A = 0 when no window does.
pub fn max_acceptance(
    strategy: Strategy,
    gamma_b: f64,
    target_f: f64,
    tol: f64,
    normalized_eq: bool,
) -> Result<TradeoffResult, FidelityError> {
    if !(target_f > 0.5 && target_f < 1.0) {
        return Err(FidelityError::InvalidParam(format!(
            "target fidelity must lie in (0.5, 1), got {target_f}"
        )));
    }
    if tol <= 0.0 || tol.is_nan() {
        return Err(FidelityError::InvalidParam("tolerance must be positive".into()));
    }

    let eval = |f_a: f64| strategy.fidelity(f_a, normalized_eq);

    let result = |f_a_max: f64, reachable: bool| -> Result<TradeoffResult, FidelityError> {
        let t_c = if f_a_max == 0.0 { 0.0 } else { acceptance_to_cutoff(f_a_max, gamma_b)? };
        Ok(TradeoffResult {
            strategy,
            target_f,
            f_a_max,
            t_c,
            relative_rate: f_a_max,
            reachable,
        })
    };

    if eval(1.0)? >= target_f {
        return result(1.0, true);
    }
    let mut lo = 1e-15;
    if eval(lo)? < target_f {
        return result(0.0, false);
    }
    let mut hi = 1.0;
    // Invariant: F(lo) ≥ target > F(hi).
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if eval(mid)? >= target_f {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    result(lo, true)
}

/// One inversion per strategy, sorted by relative rate, best first.
pub fn compare(
    strategies: &[Strategy],
    gamma_b: f64,
    target_f: f64,
    tol: f64,
    normalized_eq: bool,
) -> Result<Vec<TradeoffResult>, FidelityError> {
    if strategies.is_empty() {
        return Err(FidelityError::InvalidParam("no strategies to compare".into()));
    }
    let mut rows = strategies
        .iter()
        .map(|&s| max_acceptance(s, gamma_b, target_f, tol, normalized_eq))
        .collect::<Result<Vec<_>, _>>()?;
    rows.sort_by(|a, b| {
        b.relative_rate
            .partial_cmp(&a.relative_rate)
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(rows)
}

/// Text table of the comparison.
pub fn format_table(rows: &[TradeoffResult]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<22} {:>10} {:>14} {:>14} {:>12}\n",
        "strategy", "target F", "f_A max", "t_c [s]", "reachable"
    ));
    for r in rows {
        out.push_str(&format!(
            "{:<22} {:>10} {:>14.9} {:>14.6e} {:>12}\n",
            r.strategy.to_string(),
            r.target_f,
            r.f_a_max,
            r.t_c,
            r.reachable
        ));
    }
    out
}

/// CSV form of the comparison table.
pub fn table_csv(rows: &[TradeoffResult]) -> String {
    let mut out = String::from("strategy,x_or_theta,target_F,f_A_max,t_c,relative_rate,reachable\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.strategy.label(),
            r.strategy.parameter(),
            r.target_f,
            r.f_a_max,
            r.t_c,
            r.relative_rate,
            r.reachable
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_lifetime_shelf_target_075_gives_half() {
        // F = 1 − f_A/2 ⇒ F(f_A = 0.5) = 0.75
        let r = max_acceptance(Strategy::Rephase { x: 1.0 }, 1.0, 0.75, 1e-9, true).unwrap();
        assert!((r.f_a_max - 0.5).abs() < 1e-8);
        assert!(r.reachable);
    }

    #[test]
    fn perfect_shelf_accepts_everything() {
        let r = max_acceptance(Strategy::Rephase { x: 0.0 }, 1.0, 0.99, 1e-9, true).unwrap();
        assert_eq!(r.f_a_max, 1.0);
        assert_eq!(r.t_c, f64::INFINITY);
    }

    #[test]
    fn bracketing_certificate_holds() {
        let tol = 1e-9;
        for s in [Strategy::Rephase { x: 0.3 }, Strategy::PostSelect { theta: 2.0 }] {
            let r = max_acceptance(s, 1.0, 0.9, tol, true).unwrap();
            assert!(s.fidelity(r.f_a_max, true).unwrap() >= 0.9);
            if r.f_a_max + tol <= 1.0 {
                assert!(s.fidelity(r.f_a_max + tol, true).unwrap() <= 0.9 + 1e-6);
            }
        }
    }

    #[test]
    fn invalid_targets_are_rejected() {
        assert!(max_acceptance(Strategy::Rephase { x: 1.0 }, 1.0, 0.4, 1e-9, true).is_err());
        assert!(max_acceptance(Strategy::Rephase { x: 1.0 }, 1.0, 1.0, 1e-9, true).is_err());
    }

    #[test]
    fn unnormalized_post_selection_can_be_unreachable() {
        // Without the conditional-mean normalization the curve tops out below
        // (1 + f_A)/2 for strong diffusion, so high targets are unreachable.
        let r = max_acceptance(Strategy::PostSelect { theta: 100.0 }, 1.0, 0.95, 1e-9, false)
            .unwrap();
        assert!(!r.reachable);
        assert_eq!(r.f_a_max, 0.0);
    }

    #[test]
    fn compare_sorts_by_rate_and_keeps_duplicates_identical() {
        let rows = compare(
            &[
                Strategy::PostSelect { theta: 10.0 },
                Strategy::Rephase { x: 0.1 },
                Strategy::Rephase { x: 0.1 },
            ],
            1.0,
            0.9,
            1e-9,
            true,
        )
        .unwrap();
        assert_eq!(rows.len(), 3);
        assert!(rows[0].relative_rate >= rows[1].relative_rate);
        assert_eq!(rows[0], rows[1]);
        assert!(rows.windows(2).all(|w| w[0].relative_rate >= w[1].relative_rate));
    }

    #[test]
    fn single_strategy_single_row() {
        let rows = compare(&[Strategy::Rephase { x: 1.0 }], 1.0, 0.75, 1e-9, true).unwrap();
        assert_eq!(rows.len(), 1);
    }
}
