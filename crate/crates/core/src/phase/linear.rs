use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Neg, Sub};

use num::{BigRational, One, Signed, ToPrimitive, Zero};

use super::symbols::{FreqSymbol, TimeSymbol};

/// Exact coefficient type used throughout the phase algebra.
pub type Coeff = BigRational;

pub fn ratio(num: i64, den: i64) -> Coeff {
    Coeff::new(num.into(), den.into())
}

/// Exact coefficient from `p/q`, an integer, or a decimal literal
/// (scientific notation included). Decimals convert exactly, so `0.4`
/// is 2/5, not the nearest binary float.
pub fn parse_coeff(s: &str) -> Option<Coeff> {
    use num::pow::Pow;
    use num::BigInt;

    let s = s.trim();
    if let Some((num, den)) = s.split_once('/') {
        let n: BigInt = num.trim().parse().ok()?;
        let d: BigInt = den.trim().parse().ok()?;
        if d == BigInt::from(0) {
            return None;
        }
        return Some(Coeff::new(n, d));
    }
    let (sign, body) = match s.strip_prefix('-') {
        Some(rest) => (-1, rest),
        None => (1, s.strip_prefix('+').unwrap_or(s)),
    };
    let (mantissa, exp10) = match body.find(['e', 'E']) {
        Some(pos) => (&body[..pos], body[pos + 1..].parse::<i32>().ok()?),
        None => (body, 0),
    };
    let (int_part, frac_part) = match mantissa.find('.') {
        Some(pos) => (&mantissa[..pos], &mantissa[pos + 1..]),
        None => (mantissa, ""),
    };
    let digits = format!("{int_part}{frac_part}");
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let n: BigInt = digits.parse().ok()?;
    let n = n * BigInt::from(sign);
    let shift = exp10 - frac_part.len() as i32;
    let ten = BigInt::from(10);
    Some(if shift >= 0 {
        Coeff::from_integer(n * ten.pow(shift as u32))
    } else {
        Coeff::new(n, ten.pow((-shift) as u32))
    })
}

/// A linear combination of symbols with exact rational coefficients, kept in
/// canonical form: zero coefficients are removed and keys are ordered.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinComb<S: Ord + Copy> {
    terms: BTreeMap<S, Coeff>,
}

impl<S: Ord + Copy> Default for LinComb<S> {
    fn default() -> Self {
        Self { terms: BTreeMap::new() }
    }
}

pub type TimeExpr = LinComb<TimeSymbol>;
pub type FreqExpr = LinComb<FreqSymbol>;

impl<S: Ord + Copy> LinComb<S> {
    pub fn zero() -> Self {
        Self { terms: BTreeMap::new() }
    }

    pub fn symbol(s: S) -> Self {
        Self::term(s, Coeff::one())
    }

    pub fn term(s: S, c: Coeff) -> Self {
        let mut out = Self::zero();
        out.add_term(s, c);
        out
    }

    pub fn add_term(&mut self, s: S, c: Coeff) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(s).or_insert_with(Coeff::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(&s);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, s: S) -> Coeff {
        self.terms.get(&s).cloned().unwrap_or_else(Coeff::zero)
    }

    pub fn contains(&self, s: S) -> bool {
        self.terms.contains_key(&s)
    }

    pub fn iter(&self) -> impl Iterator<Item = (S, &Coeff)> {
        self.terms.iter().map(|(s, c)| (*s, c))
    }

    pub fn symbols(&self) -> impl Iterator<Item = S> + '_ {
        self.terms.keys().copied()
    }

    pub fn scaled(&self, c: &Coeff) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Self {
            terms: self.terms.iter().map(|(s, v)| (*s, v * c)).collect(),
        }
    }
}

impl<S: Ord + Copy> Add for LinComb<S> {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        for (s, c) in rhs.terms {
            self.add_term(s, c);
        }
        self
    }
}

impl<S: Ord + Copy> Sub for LinComb<S> {
    type Output = Self;
    fn sub(mut self, rhs: Self) -> Self {
        for (s, c) in rhs.terms {
            self.add_term(s, -c);
        }
        self
    }
}

impl<S: Ord + Copy> Neg for LinComb<S> {
    type Output = Self;
    fn neg(self) -> Self {
        Self {
            terms: self.terms.into_iter().map(|(s, c)| (s, -c)).collect(),
        }
    }
}

impl<S: Ord + Copy + fmt::Display> fmt::Display for LinComb<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (s, c) in self.iter() {
            write_signed_coeff(f, c, first)?;
            write!(f, "{s}")?;
            first = false;
        }
        Ok(())
    }
}

fn write_signed_coeff(f: &mut fmt::Formatter<'_>, c: &Coeff, first: bool) -> fmt::Result {
    let mag = c.abs();
    if c.is_negative() {
        write!(f, "{}", if first { "−" } else { " − " })?;
    } else if !first {
        write!(f, " + ")?;
    }
    if !mag.is_one() {
        write!(f, "{mag}·")?;
    }
    Ok(())
}

/// An exact symbolic phase: a sum of rational-coefficient
/// (frequency symbol × time symbol) terms plus a rational multiple of π.
///
/// Phases are stored as the argument of e^{−iφ} on each ket. The form is kept
/// canonical at all times (zero terms removed, fixed key ordering), so
/// structural equality is phase equality.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LinearPhase {
    terms: BTreeMap<(FreqSymbol, TimeSymbol), Coeff>,
    const_pi: Coeff,
}

impl LinearPhase {
    pub fn zero() -> Self {
        Self::default()
    }

    /// A pure constant phase of `c`·π radians.
    pub fn pi_multiple(c: Coeff) -> Self {
        Self { terms: BTreeMap::new(), const_pi: c }
    }

    pub fn from_terms<I>(terms: I) -> Self
    where
        I: IntoIterator<Item = (FreqSymbol, TimeSymbol, Coeff)>,
    {
        let mut out = Self::zero();
        for (fs, ts, c) in terms {
            out.add_term(fs, ts, c);
        }
        out
    }

    pub fn add_term(&mut self, fs: FreqSymbol, ts: TimeSymbol, c: Coeff) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry((fs, ts)).or_insert_with(Coeff::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(&(fs, ts));
        }
    }

    pub fn add_pi(&mut self, c: Coeff) {
        self.const_pi += c;
    }

    /// Phase accumulated by `freq` over a symbolic duration: every term of
    /// `duration` becomes a (freq, time) term scaled by `scale`.
    pub fn add_freq_over(&mut self, freq: FreqSymbol, duration: &TimeExpr, scale: Coeff) {
        for (ts, c) in duration.iter() {
            self.add_term(freq, ts, c * &scale);
        }
    }

    /// Canonical sum/difference: `sign` must be +1 or −1.
    pub fn combine(a: &LinearPhase, b: &LinearPhase, sign: i8) -> LinearPhase {
        debug_assert!(sign == 1 || sign == -1);
        let mut out = a.clone();
        let s = ratio(sign as i64, 1);
        for ((fs, ts), c) in &b.terms {
            out.add_term(*fs, *ts, c * &s);
        }
        out.const_pi += &b.const_pi * &s;
        out
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty() && self.const_pi.is_zero()
    }

    /// True when the bilinear part vanishes (a pure constant, possibly zero).
    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, fs: FreqSymbol, ts: TimeSymbol) -> Coeff {
        self.terms
            .get(&(fs, ts))
            .cloned()
            .unwrap_or_else(Coeff::zero)
    }

    pub fn const_pi(&self) -> &Coeff {
        &self.const_pi
    }

    pub fn terms(&self) -> impl Iterator<Item = (FreqSymbol, TimeSymbol, &Coeff)> {
        self.terms.iter().map(|((fs, ts), c)| (*fs, *ts, c))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn freq_symbols(&self) -> impl Iterator<Item = FreqSymbol> + '_ {
        self.terms.keys().map(|(fs, _)| *fs)
    }

    pub fn time_symbols(&self) -> impl Iterator<Item = TimeSymbol> + '_ {
        self.terms.keys().map(|(_, ts)| *ts)
    }

    /// The sub-phase whose frequency symbols are tagged `Unknown`.
    /// The constant (a known rational multiple of π) stays with the known part.
    pub fn unknown_residual(&self) -> LinearPhase {
        LinearPhase {
            terms: self
                .terms
                .iter()
                .filter(|((fs, _), _)| fs.is_unknown())
                .map(|(k, v)| (*k, v.clone()))
                .collect(),
            const_pi: Coeff::zero(),
        }
    }

    /// The complement of `unknown_residual`; the two reconstruct `self`.
    pub fn known_part(&self) -> LinearPhase {
        LinearPhase {
            terms: self
                .terms
                .iter()
                .filter(|((fs, _), _)| !fs.is_unknown())
                .map(|(k, v)| (*k, v.clone()))
                .collect(),
            const_pi: self.const_pi.clone(),
        }
    }

    /// Remove every term carrying the given time symbol.
    pub fn without_time_symbol(&self, ts: TimeSymbol) -> LinearPhase {
        LinearPhase {
            terms: self
                .terms
                .iter()
                .filter(|((_, t), _)| *t != ts)
                .map(|(k, v)| (*k, v.clone()))
                .collect(),
            const_pi: self.const_pi.clone(),
        }
    }

    pub fn has_time_symbol(&self, ts: TimeSymbol) -> bool {
        self.terms.keys().any(|(_, t)| *t == ts)
    }

    /// Structural equality up to an overall sign, the comparison used for
    /// relative phases (whose sign depends on ket ordering conventions).
    pub fn eq_up_to_sign(&self, other: &LinearPhase) -> bool {
        self == other || *self == -other.clone()
    }

    /// Numeric value in radians. `to_f64` on the exact coefficients is the
    /// only rounding step.
    pub fn to_radians(
        &self,
        freq_value: impl Fn(FreqSymbol) -> Option<f64>,
        time_value: impl Fn(TimeSymbol) -> Option<f64>,
    ) -> Result<f64, crate::error::PhaseError> {
        use crate::error::PhaseError;
        let mut acc = self.const_pi.to_f64().unwrap_or(f64::NAN) * std::f64::consts::PI;
        for ((fs, ts), c) in &self.terms {
            let f = freq_value(*fs)
                .ok_or_else(|| PhaseError::MissingFreqValue(fs.as_str().to_string()))?;
            let t = time_value(*ts)
                .ok_or_else(|| PhaseError::MissingTimeValue(ts.as_str().to_string()))?;
            acc += c.to_f64().unwrap_or(f64::NAN) * f * t;
        }
        Ok(acc)
    }
}

impl Add for LinearPhase {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::combine(&self, &rhs, 1)
    }
}

impl Sub for LinearPhase {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::combine(&self, &rhs, -1)
    }
}

impl Neg for LinearPhase {
    type Output = Self;
    fn neg(self) -> Self {
        Self {
            terms: self.terms.into_iter().map(|(k, c)| (k, -c)).collect(),
            const_pi: -self.const_pi,
        }
    }
}

impl fmt::Display for LinearPhase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for ((fs, ts), c) in &self.terms {
            write_signed_coeff(f, c, first)?;
            write!(f, "{fs}·{ts}")?;
            first = false;
        }
        if !self.const_pi.is_zero() {
            write_signed_coeff(f, &self.const_pi, first)?;
            write!(f, "π")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use FreqSymbol::*;
    use TimeSymbol::*;

    fn one() -> Coeff {
        Coeff::one()
    }

    #[test]
    fn combine_identity_and_self_cancellation() {
        let p = LinearPhase::from_terms([(Omega1, Tau, one()), (DeltaG2, WaitT, ratio(-1, 2))]);
        assert_eq!(LinearPhase::combine(&p, &LinearPhase::zero(), 1), p);
        assert!(LinearPhase::combine(&p, &p, -1).is_zero());
    }

    #[test]
    fn combine_builds_frequency_difference_pattern() {
        // {(ω₂,τ):+1} − {(ω₁,τ):+1} = (ω₂−ω₁)τ
        let a = LinearPhase::from_terms([(Omega2, Tau, one())]);
        let b = LinearPhase::from_terms([(Omega1, Tau, one())]);
        let d = LinearPhase::combine(&a, &b, -1);
        assert_eq!(d.coeff(Omega2, Tau), one());
        assert_eq!(d.coeff(Omega1, Tau), ratio(-1, 1));
        assert_eq!(d.num_terms(), 2);
    }

    #[test]
    fn insertion_order_does_not_matter() {
        let t1 = [(Omega1, Tau, ratio(1, 3)), (Delta2, Eps, ratio(-2, 1))];
        let t2 = [(Delta2, Eps, ratio(-2, 1)), (Omega1, Tau, ratio(1, 3))];
        assert_eq!(LinearPhase::from_terms(t1), LinearPhase::from_terms(t2));
    }

    #[test]
    fn residual_partition_reconstructs() {
        let mut p = LinearPhase::from_terms([
            (Laser1, ShelfT1, one()),
            (Delta2, EmitT0, ratio(3, 2)),
            (OmegaBar1, Tau, ratio(-1, 7)),
        ]);
        p.add_pi(ratio(1, 2));
        let u = p.unknown_residual();
        let k = p.known_part();
        assert_eq!(LinearPhase::combine(&u, &k, 1), p);
        assert!(u.freq_symbols().all(|f| f.is_unknown()));
        assert!(k.freq_symbols().all(|f| !f.is_unknown()));
        assert!(u.const_pi().is_zero());
    }

    #[test]
    fn known_only_phase_has_zero_residual() {
        let p = LinearPhase::from_terms([(Laser1, ShelfT1, one()), (Laser2, ShelfT1, ratio(-1, 1))]);
        assert!(p.unknown_residual().is_zero());
    }

    #[test]
    fn to_radians_evaluates_bilinear_terms() {
        let p = LinearPhase::from_terms([(Omega1, Tau, one())]);
        let w = 2.0 * std::f64::consts::PI * 1e6;
        let v = p
            .to_radians(|_| Some(w), |_| Some(1e-6))
            .unwrap();
        assert!((v - 2.0 * std::f64::consts::PI).abs() < 1e-12);
        assert_eq!(LinearPhase::zero().to_radians(|_| None, |_| None).unwrap(), 0.0);
    }

    #[test]
    fn to_radians_reports_missing_symbol() {
        let p = LinearPhase::from_terms([(Omega1, Tau, one())]);
        let err = p.to_radians(|_| None, |_| Some(1.0)).unwrap_err();
        assert_eq!(
            err,
            crate::error::PhaseError::MissingFreqValue("w1".to_string())
        );
    }

    #[test]
    fn display_is_readable() {
        let mut p = LinearPhase::from_terms([
            (Delta1, Eps, one()),
            (Delta2, Eps, ratio(-1, 1)),
        ]);
        p.add_pi(ratio(1, 2));
        assert_eq!(format!("{p}"), "Δ₁·ε − Δ₂·ε + 1/2·π");
    }
}
