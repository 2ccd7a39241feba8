use std::collections::BTreeMap;
use std::fmt;

use num::{BigInt, One, Zero};

use crate::dsl::Detector;
use crate::error::EngineError;
use crate::phase::{ratio, LinearPhase, TimeExpr, TimeSymbol};

/// Single-emitter levels, ordered to match the optical/spin operator
/// convention diag(↑e, ↓e, ↑g, ↓g).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SpinState {
    UpE,
    DownE,
    UpG,
    DownG,
}

impl SpinState {
    pub fn as_str(self) -> &'static str {
        match self {
            SpinState::UpE => "ue",
            SpinState::DownE => "de",
            SpinState::UpG => "ug",
            SpinState::DownG => "dg",
        }
    }

    pub fn pretty(self) -> &'static str {
        match self {
            SpinState::UpE => "↑e",
            SpinState::DownE => "↓e",
            SpinState::UpG => "↑g",
            SpinState::DownG => "↓g",
        }
    }

    pub fn is_excited_manifold(self) -> bool {
        matches!(self, SpinState::UpE | SpinState::DownE)
    }
}

/// A two-emitter basis ket.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Ket(pub SpinState, pub SpinState);

impl Ket {
    pub fn get(self, emitter: usize) -> SpinState {
        match emitter {
            0 => self.0,
            1 => self.1,
            _ => panic!("emitter index out of range"),
        }
    }

    pub fn with(self, emitter: usize, s: SpinState) -> Ket {
        match emitter {
            0 => Ket(s, self.1),
            1 => Ket(self.0, s),
            _ => panic!("emitter index out of range"),
        }
    }
}

impl fmt::Display for Ket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|{}{}⟩", self.0.pretty(), self.1.pretty())
    }
}

/// Decay channels that can interrupt a protocol: the bright optical
/// transition (rate Γ_B) and the shelving transition (rate Γ_A).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DecayChannel {
    Bright,
    Shelf,
}

impl DecayChannel {
    pub fn as_str(self) -> &'static str {
        match self {
            DecayChannel::Bright => "Gamma_B",
            DecayChannel::Shelf => "Gamma_A",
        }
    }
}

/// Symbolic decay exposure: the total duration each ket component has spent
/// in a decaying level, per channel. Numeric survival is exp(−Σ Γ·duration).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Exposure {
    channels: BTreeMap<DecayChannel, TimeExpr>,
}

impl Exposure {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn add(&mut self, channel: DecayChannel, duration: &TimeExpr) {
        let entry = self.channels.entry(channel).or_default();
        *entry = entry.clone() + duration.clone();
        if entry.is_zero() {
            self.channels.remove(&channel);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.channels.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (DecayChannel, &TimeExpr)> {
        self.channels.iter().map(|(c, d)| (*c, d))
    }

    pub fn get(&self, channel: DecayChannel) -> Option<&TimeExpr> {
        self.channels.get(&channel)
    }
}

/// One amplitude of the joint state: a non-negative magnitude, an exact
/// symbolic phase (argument of e^{−iφ}), separately counted detector-sign
/// π's, the decay exposure, and a flag marking components that already lost
/// a photon and can no longer contribute a coherent Bell pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Amp {
    pub mag: f64,
    pub phase: LinearPhase,
    pub det_pi: u32,
    pub exposure: Exposure,
    pub impure: bool,
}

impl Amp {
    pub fn unit() -> Self {
        Amp {
            mag: 1.0,
            phase: LinearPhase::zero(),
            det_pi: 0,
            exposure: Exposure::none(),
            impure: false,
        }
    }
}

/// A detector click on record.
#[derive(Debug, Clone, PartialEq)]
pub struct Click {
    pub detector: Detector,
    pub at: TimeSymbol,
    pub window: String,
}

/// Superposition over two-emitter kets with symbolic phases, plus the click
/// record. Magnitudes square-sum to one except transiently inside a
/// projection, which renormalizes before returning.
#[derive(Debug, Clone, PartialEq)]
pub struct JointState {
    amps: BTreeMap<Ket, Amp>,
    pub clicks: Vec<Click>,
    /// Shelving survival probability; 1.0 for symbolic runs, filled in when a
    /// run is evaluated numerically.
    pub survival_weight: f64,
}

impl JointState {
    /// Both emitters initialized in |↑g⟩.
    pub fn initial() -> Self {
        let mut amps = BTreeMap::new();
        amps.insert(Ket(SpinState::UpG, SpinState::UpG), Amp::unit());
        JointState { amps, clicks: Vec::new(), survival_weight: 1.0 }
    }

    pub fn from_amps(amps: BTreeMap<Ket, Amp>) -> Self {
        JointState { amps, clicks: Vec::new(), survival_weight: 1.0 }
    }

    pub fn amps(&self) -> &BTreeMap<Ket, Amp> {
        &self.amps
    }

    pub fn amps_mut(&mut self) -> &mut BTreeMap<Ket, Amp> {
        &mut self.amps
    }

    pub fn replace_amps(&mut self, amps: BTreeMap<Ket, Amp>) {
        self.amps = amps;
    }

    pub fn norm_sq(&self) -> f64 {
        self.amps.values().map(|a| a.mag * a.mag).sum()
    }

    /// Fraction of the heralded weight that sits in loss-flagged components.
    pub fn herald_impurity(&self) -> f64 {
        let total = self.norm_sq();
        if total == 0.0 {
            return 0.0;
        }
        // fold from +0.0: the empty f64 sum identity is −0.0
        self.amps
            .values()
            .filter(|a| a.impure)
            .fold(0.0, |acc, a| acc + a.mag * a.mag)
            / total
    }

    pub fn renormalize(&mut self) -> Result<(), EngineError> {
        let n = self.norm_sq();
        if n <= 0.0 {
            return Err(EngineError::ImpossibleHerald);
        }
        let inv = 1.0 / n.sqrt();
        for amp in self.amps.values_mut() {
            amp.mag *= inv;
        }
        Ok(())
    }

    pub fn assert_normalized(&self, tol: f64) {
        debug_assert!(
            (self.norm_sq() - 1.0).abs() < tol,
            "state norm drifted: {}",
            self.norm_sq()
        );
    }
}

/// Merge an amplitude into a map under construction. Amplitudes landing on
/// the same ket must carry the same symbolic phase up to an integer multiple
/// of π; anything else has no single-(magnitude, phase) representation.
pub fn add_amp(map: &mut BTreeMap<Ket, Amp>, ket: Ket, amp: Amp) -> Result<(), EngineError> {
    if amp.mag == 0.0 {
        return Ok(());
    }
    match map.remove(&ket) {
        None => {
            map.insert(ket, amp);
            Ok(())
        }
        Some(existing) => {
            if existing.impure != amp.impure
                || existing.exposure != amp.exposure
                || existing.det_pi != amp.det_pi
            {
                return Err(EngineError::PhaseMerge);
            }
            let diff = LinearPhase::combine(&amp.phase, &existing.phase, -1);
            if !diff.is_constant() {
                return Err(EngineError::PhaseMerge);
            }
            let parity = pi_parity(&diff).ok_or(EngineError::PhaseMerge)?;
            let signed = existing.mag + if parity == 0 { amp.mag } else { -amp.mag };
            let mut merged = existing;
            if signed < 0.0 {
                merged.mag = -signed;
                merged.phase.add_pi(ratio(1, 1));
            } else {
                merged.mag = signed;
            }
            if merged.mag != 0.0 {
                map.insert(ket, merged);
            }
            Ok(())
        }
    }
}

/// Parity (0 or 1) of a pure integer-multiple-of-π phase, `None` otherwise.
fn pi_parity(diff: &LinearPhase) -> Option<u8> {
    let c = diff.const_pi();
    if !c.denom().is_one() {
        return None;
    }
    let two = BigInt::from(2);
    let rem = c.numer() % &two;
    Some(if rem.is_zero() { 0 } else { 1 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase::{Coeff, FreqSymbol};
    use num::One;

    #[test]
    fn initial_state_is_both_spins_up() {
        let s = JointState::initial();
        assert_eq!(s.amps().len(), 1);
        assert!((s.norm_sq() - 1.0).abs() < 1e-15);
        assert!(s.amps().contains_key(&Ket(SpinState::UpG, SpinState::UpG)));
    }

    #[test]
    fn equal_phases_add_and_opposite_parity_subtracts() {
        let ket = Ket(SpinState::UpG, SpinState::DownG);
        let mut map = BTreeMap::new();
        add_amp(&mut map, ket, Amp { mag: 0.5, ..Amp::unit() }).unwrap();
        add_amp(&mut map, ket, Amp { mag: 0.25, ..Amp::unit() }).unwrap();
        assert!((map[&ket].mag - 0.75).abs() < 1e-15);

        let mut anti = Amp { mag: 0.75, ..Amp::unit() };
        anti.phase.add_pi(Coeff::one());
        add_amp(&mut map, ket, anti).unwrap();
        assert!(!map.contains_key(&ket), "exact cancellation drops the ket");
    }

    #[test]
    fn incompatible_symbolic_phases_refuse_to_merge() {
        let ket = Ket(SpinState::UpG, SpinState::DownG);
        let mut map = BTreeMap::new();
        add_amp(&mut map, ket, Amp::unit()).unwrap();
        let mut other = Amp::unit();
        other
            .phase
            .add_term(FreqSymbol::Delta1, TimeSymbol::Tau, Coeff::one());
        assert_eq!(
            add_amp(&mut map, ket, other),
            Err(EngineError::PhaseMerge)
        );
    }

    #[test]
    fn exposure_accumulates_per_channel() {
        let mut e = Exposure::none();
        e.add(DecayChannel::Shelf, &TimeExpr::symbol(TimeSymbol::ShelfT1));
        e.add(DecayChannel::Shelf, &TimeExpr::symbol(TimeSymbol::Eps));
        let d = e.get(DecayChannel::Shelf).unwrap();
        assert_eq!(d.coeff(TimeSymbol::ShelfT1), Coeff::one());
        assert_eq!(d.coeff(TimeSymbol::Eps), Coeff::one());
        assert!(e.get(DecayChannel::Bright).is_none());
    }
}
