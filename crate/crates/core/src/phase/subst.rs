use std::collections::BTreeMap;

use super::linear::{FreqExpr, LinComb, LinearPhase, TimeExpr};
use super::symbols::{FreqSymbol, TimeSymbol};
use crate::error::PhaseError;

/// Rewrite rules mapping time symbols to linear combinations of time symbols
/// and frequency symbols to linear combinations of frequency symbols.
///
/// Rules must be acyclic. They are expanded to a fixpoint before application,
/// so applying a substitution twice equals applying it once.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Substitution {
    time_rules: BTreeMap<TimeSymbol, TimeExpr>,
    freq_rules: BTreeMap<FreqSymbol, FreqExpr>,
}

impl Substitution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn map_time(mut self, from: TimeSymbol, to: TimeExpr) -> Self {
        self.time_rules.insert(from, to);
        self
    }

    pub fn map_freq(mut self, from: FreqSymbol, to: FreqExpr) -> Self {
        self.freq_rules.insert(from, to);
        self
    }

    pub fn is_empty(&self) -> bool {
        self.time_rules.is_empty() && self.freq_rules.is_empty()
    }

    /// Expand every rule so that no right-hand side mentions a ruled symbol.
    /// Fails on cyclic rule sets (including self-references).
    pub fn expanded(&self) -> Result<Substitution, PhaseError> {
        Ok(Substitution {
            time_rules: expand_rules(&self.time_rules, |s| s.as_str())?,
            freq_rules: expand_rules(&self.freq_rules, |s| s.as_str())?,
        })
    }

    /// Apply the substitution to a phase, returning the canonical result.
    pub fn apply(&self, p: &LinearPhase) -> Result<LinearPhase, PhaseError> {
        let exp = self.expanded()?;
        let mut out = LinearPhase::pi_multiple(p.const_pi().clone());
        for (fs, ts, c) in p.terms() {
            let fexp = exp
                .freq_rules
                .get(&fs)
                .cloned()
                .unwrap_or_else(|| FreqExpr::symbol(fs));
            let texp = exp
                .time_rules
                .get(&ts)
                .cloned()
                .unwrap_or_else(|| TimeExpr::symbol(ts));
            for (f, cf) in fexp.iter() {
                for (t, ct) in texp.iter() {
                    out.add_term(f, t, c * cf * ct);
                }
            }
        }
        Ok(out)
    }

    /// Apply the time rules alone to a duration expression.
    pub fn apply_time(&self, d: &TimeExpr) -> Result<TimeExpr, PhaseError> {
        let exp = self.expanded()?;
        let mut out = TimeExpr::zero();
        for (ts, c) in d.iter() {
            match exp.time_rules.get(&ts) {
                Some(rule) => {
                    for (t, ct) in rule.iter() {
                        out.add_term(t, c * ct);
                    }
                }
                None => out.add_term(ts, c.clone()),
            }
        }
        Ok(out)
    }
}

fn expand_rules<S: Ord + Copy>(
    rules: &BTreeMap<S, LinComb<S>>,
    name: impl Fn(S) -> &'static str,
) -> Result<BTreeMap<S, LinComb<S>>, PhaseError> {
    let mut expanded: BTreeMap<S, LinComb<S>> = BTreeMap::new();
    for &root in rules.keys() {
        let mut visiting = Vec::new();
        let expr = expand_symbol(root, rules, &mut expanded, &mut visiting, &name)?;
        expanded.insert(root, expr);
    }
    Ok(expanded)
}

fn expand_symbol<S: Ord + Copy>(
    sym: S,
    rules: &BTreeMap<S, LinComb<S>>,
    memo: &mut BTreeMap<S, LinComb<S>>,
    visiting: &mut Vec<S>,
    name: &impl Fn(S) -> &'static str,
) -> Result<LinComb<S>, PhaseError> {
    if let Some(done) = memo.get(&sym) {
        return Ok(done.clone());
    }
    let Some(rule) = rules.get(&sym) else {
        return Ok(LinComb::symbol(sym));
    };
    if visiting.contains(&sym) {
        return Err(PhaseError::CyclicSubstitution(name(sym).to_string()));
    }
    visiting.push(sym);
    let mut out = LinComb::zero();
    for (s, c) in rule.iter() {
        let sub = expand_symbol(s, rules, memo, visiting, name)?;
        let scaled = sub.scaled(c);
        if !scaled.is_zero() {
            out = out + scaled;
        }
    }
    visiting.pop();
    memo.insert(sym, out.clone());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase::linear::{ratio, Coeff};
    use num::One;
    use FreqSymbol::*;
    use TimeSymbol::*;

    #[test]
    fn linear_time_rule() {
        // {(ω₂,t₁):1} with t₁ → t₀ + ε
        let p = LinearPhase::from_terms([(Omega2, ShelfT1, Coeff::one())]);
        let s = Substitution::new()
            .map_time(ShelfT1, TimeExpr::symbol(EmitT0) + TimeExpr::symbol(Eps));
        let q = s.apply(&p).unwrap();
        let expect =
            LinearPhase::from_terms([(Omega2, EmitT0, Coeff::one()), (Omega2, Eps, Coeff::one())]);
        assert_eq!(q, expect);
    }

    #[test]
    fn linear_freq_rule_with_ratio() {
        // {(Δe1,t₁):1} with Δe1 → 2·Δg1
        let p = LinearPhase::from_terms([(DeltaE1, ShelfT1, Coeff::one())]);
        let s = Substitution::new().map_freq(DeltaE1, FreqExpr::term(DeltaG1, ratio(2, 1)));
        let q = s.apply(&p).unwrap();
        assert_eq!(
            q,
            LinearPhase::from_terms([(DeltaG1, ShelfT1, ratio(2, 1))])
        );
    }

    #[test]
    fn chained_rules_expand_to_fixpoint() {
        // t₁ → t₀ + ε, t₀ → τ − T₀: applying once equals the fully expanded map.
        let s = Substitution::new()
            .map_time(ShelfT1, TimeExpr::symbol(EmitT0) + TimeExpr::symbol(Eps))
            .map_time(EmitT0, TimeExpr::symbol(Tau) - TimeExpr::symbol(FlightT0));
        let p = LinearPhase::from_terms([(Omega1, ShelfT1, Coeff::one())]);
        let once = s.apply(&p).unwrap();
        let twice = s.apply(&once).unwrap();
        assert_eq!(once, twice);
        assert_eq!(once.coeff(Omega1, Tau), Coeff::one());
        assert_eq!(once.coeff(Omega1, FlightT0), ratio(-1, 1));
        assert_eq!(once.coeff(Omega1, Eps), Coeff::one());
    }

    #[test]
    fn cycle_is_an_error() {
        let s = Substitution::new()
            .map_time(ShelfT1, TimeExpr::symbol(EmitT0))
            .map_time(EmitT0, TimeExpr::symbol(ShelfT1));
        let p = LinearPhase::from_terms([(Omega1, ShelfT1, Coeff::one())]);
        assert!(matches!(
            s.apply(&p),
            Err(PhaseError::CyclicSubstitution(_))
        ));
    }

    #[test]
    fn self_reference_is_a_cycle() {
        let s = Substitution::new()
            .map_time(ShelfT1, TimeExpr::symbol(ShelfT1) + TimeExpr::symbol(Eps));
        assert!(s.expanded().is_err());
    }
}
