use std::collections::BTreeMap;

use num::ToPrimitive;

use super::linear::{LinearPhase, TimeExpr};
use super::symbols::{FreqSymbol, TimeSymbol};
use crate::error::PhaseError;

/// A numeric assignment for the symbol registries: frequencies in rad/s,
/// times in seconds. The unit constant 𝟙 is always 1.
#[derive(Debug, Clone, Default)]
pub struct Assignment {
    freqs: BTreeMap<FreqSymbol, f64>,
    times: BTreeMap<TimeSymbol, f64>,
}

impl Assignment {
    pub fn new() -> Self {
        let mut a = Self::default();
        a.times.insert(TimeSymbol::One, 1.0);
        a
    }

    pub fn set_freq(&mut self, s: FreqSymbol, rad_per_s: f64) -> &mut Self {
        self.freqs.insert(s, rad_per_s);
        self
    }

    pub fn set_time(&mut self, s: TimeSymbol, seconds: f64) -> &mut Self {
        self.times.insert(s, seconds);
        self
    }

    pub fn freq(&self, s: FreqSymbol) -> Option<f64> {
        self.freqs.get(&s).copied()
    }

    pub fn time(&self, s: TimeSymbol) -> Option<f64> {
        if s == TimeSymbol::One {
            return Some(self.times.get(&s).copied().unwrap_or(1.0));
        }
        self.times.get(&s).copied()
    }

    pub fn time_expr(&self, d: &TimeExpr) -> Result<f64, PhaseError> {
        let mut acc = 0.0;
        for (ts, c) in d.iter() {
            let t = self
                .time(ts)
                .ok_or_else(|| PhaseError::MissingTimeValue(ts.as_str().to_string()))?;
            acc += c.to_f64().unwrap_or(f64::NAN) * t;
        }
        Ok(acc)
    }
}

/// Numeric phase in radians under an assignment. Errors name the first
/// symbol that lacks a value.
pub fn evaluate(p: &LinearPhase, a: &Assignment) -> Result<f64, PhaseError> {
    p.to_radians(|f| a.freq(f), |t| a.time(t))
}

/// A phase pre-lowered to f64 coefficients and dense symbol indices, for the
/// Monte Carlo inner loop where the same phase is evaluated per draw.
#[derive(Debug, Clone)]
pub struct CompiledPhase {
    terms: Vec<(f64, usize, usize)>,
    const_rad: f64,
}

impl CompiledPhase {
    pub fn compile(p: &LinearPhase) -> Self {
        CompiledPhase {
            terms: p
                .terms()
                .map(|(fs, ts, c)| (c.to_f64().unwrap_or(f64::NAN), fs.index(), ts.index()))
                .collect(),
            const_rad: p.const_pi().to_f64().unwrap_or(f64::NAN) * std::f64::consts::PI,
        }
    }

    #[inline]
    pub fn eval(&self, freqs: &[f64; FreqSymbol::COUNT], times: &[f64; TimeSymbol::COUNT]) -> f64 {
        let mut acc = self.const_rad;
        for &(c, fi, ti) in &self.terms {
            acc += c * freqs[fi] * times[ti];
        }
        acc
    }
}

/// A duration expression lowered the same way.
#[derive(Debug, Clone)]
pub struct CompiledTimeExpr {
    terms: Vec<(f64, usize)>,
}

impl CompiledTimeExpr {
    pub fn compile(d: &TimeExpr) -> Self {
        CompiledTimeExpr {
            terms: d
                .iter()
                .map(|(ts, c)| (c.to_f64().unwrap_or(f64::NAN), ts.index()))
                .collect(),
        }
    }

    #[inline]
    pub fn eval(&self, times: &[f64; TimeSymbol::COUNT]) -> f64 {
        self.terms.iter().map(|&(c, ti)| c * times[ti]).sum()
    }
}
