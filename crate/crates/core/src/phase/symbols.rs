use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize, Serializer};

use crate::error::PhaseError;

/// Classification of a frequency symbol: `Known` symbols are set by the
/// experimenter (laser tones, measured mean frequencies), `Unknown` symbols
/// fluctuate shot to shot (spectral diffusion, drive detunings).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Tag {
    Known,
    Unknown,
}

/// The fixed registry of angular-frequency symbols (rad/s).
///
/// `Omega1`/`Omega2` are the instantaneous optical transition frequencies,
/// `OmegaBar1`/`OmegaBar2` their long-term means, `Delta1`/`Delta2` the
/// quasi-static offsets (ω_i = ω̄_i + Δ_i). `Laser1`/`Laser2` are the optical
/// drive tones, `DeltaG*`/`DeltaE*` the ground/excited spin drive detunings,
/// and `Omega0` the mean of the two optical frequencies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Deserialize)]
#[serde(try_from = "String")]
pub enum FreqSymbol {
    Omega1,
    Omega2,
    OmegaBar1,
    OmegaBar2,
    Delta1,
    Delta2,
    Laser1,
    Laser2,
    DeltaG1,
    DeltaG2,
    DeltaE1,
    DeltaE2,
    Omega0,
}

impl FreqSymbol {
    pub const COUNT: usize = 13;

    pub const ALL: [FreqSymbol; Self::COUNT] = [
        FreqSymbol::Omega1,
        FreqSymbol::Omega2,
        FreqSymbol::OmegaBar1,
        FreqSymbol::OmegaBar2,
        FreqSymbol::Delta1,
        FreqSymbol::Delta2,
        FreqSymbol::Laser1,
        FreqSymbol::Laser2,
        FreqSymbol::DeltaG1,
        FreqSymbol::DeltaG2,
        FreqSymbol::DeltaE1,
        FreqSymbol::DeltaE2,
        FreqSymbol::Omega0,
    ];

    pub fn tag(self) -> Tag {
        match self {
            FreqSymbol::OmegaBar1
            | FreqSymbol::OmegaBar2
            | FreqSymbol::Laser1
            | FreqSymbol::Laser2 => Tag::Known,
            // The instantaneous frequencies contain the diffusion offsets, so
            // they count as unknown until expanded into ω̄ + Δ.
            _ => Tag::Unknown,
        }
    }

    pub fn is_unknown(self) -> bool {
        self.tag() == Tag::Unknown
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// Stable ASCII name used in serialized output and the DSL.
    pub fn as_str(self) -> &'static str {
        match self {
            FreqSymbol::Omega1 => "w1",
            FreqSymbol::Omega2 => "w2",
            FreqSymbol::OmegaBar1 => "wbar1",
            FreqSymbol::OmegaBar2 => "wbar2",
            FreqSymbol::Delta1 => "d1",
            FreqSymbol::Delta2 => "d2",
            FreqSymbol::Laser1 => "wL1",
            FreqSymbol::Laser2 => "wL2",
            FreqSymbol::DeltaG1 => "dg1",
            FreqSymbol::DeltaG2 => "dg2",
            FreqSymbol::DeltaE1 => "de1",
            FreqSymbol::DeltaE2 => "de2",
            FreqSymbol::Omega0 => "w0",
        }
    }

    /// Unicode name for report output.
    pub fn pretty(self) -> &'static str {
        match self {
            FreqSymbol::Omega1 => "ω₁",
            FreqSymbol::Omega2 => "ω₂",
            FreqSymbol::OmegaBar1 => "ω̄₁",
            FreqSymbol::OmegaBar2 => "ω̄₂",
            FreqSymbol::Delta1 => "Δ₁",
            FreqSymbol::Delta2 => "Δ₂",
            FreqSymbol::Laser1 => "ω_L1",
            FreqSymbol::Laser2 => "ω_L2",
            FreqSymbol::DeltaG1 => "Δ_g1",
            FreqSymbol::DeltaG2 => "Δ_g2",
            FreqSymbol::DeltaE1 => "Δ_e1",
            FreqSymbol::DeltaE2 => "Δ_e2",
            FreqSymbol::Omega0 => "ω₀",
        }
    }
}

impl fmt::Display for FreqSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.pretty())
    }
}

impl FromStr for FreqSymbol {
    type Err = PhaseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FreqSymbol::ALL
            .into_iter()
            .find(|sym| sym.as_str() == s || sym.pretty() == s)
            .ok_or_else(|| PhaseError::UnknownFreqSymbol(s.to_string()))
    }
}

impl Serialize for FreqSymbol {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl TryFrom<String> for FreqSymbol {
    type Error = PhaseError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

/// The fixed registry of time symbols (seconds).
///
/// `Tau`, `Tau1`, `Tau2` are photon detection times relative to the
/// excitation pulse of their window; `EmitT0` is the emission-time offset
/// t₀ = τ − T₀; `ShelfT1` the shelving duration; `FinalT2` the final wait;
/// `WaitT` the per-window wait; `FlightT0`/`FlightDelta` the mean and
/// differential photon time of flight; `Eps` the time-of-flight estimation
/// error; `Generic` a free time variable; and `One` the dimensionless unit
/// that carries numeric wait durations and pure constants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Deserialize)]
#[serde(try_from = "String")]
pub enum TimeSymbol {
    Tau,
    Tau1,
    Tau2,
    EmitT0,
    ShelfT1,
    FinalT2,
    WaitT,
    FlightT0,
    FlightDelta,
    Eps,
    Generic,
    One,
}

impl TimeSymbol {
    pub const COUNT: usize = 12;

    pub const ALL: [TimeSymbol; Self::COUNT] = [
        TimeSymbol::Tau,
        TimeSymbol::Tau1,
        TimeSymbol::Tau2,
        TimeSymbol::EmitT0,
        TimeSymbol::ShelfT1,
        TimeSymbol::FinalT2,
        TimeSymbol::WaitT,
        TimeSymbol::FlightT0,
        TimeSymbol::FlightDelta,
        TimeSymbol::Eps,
        TimeSymbol::Generic,
        TimeSymbol::One,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TimeSymbol::Tau => "tau",
            TimeSymbol::Tau1 => "tau1",
            TimeSymbol::Tau2 => "tau2",
            TimeSymbol::EmitT0 => "t0",
            TimeSymbol::ShelfT1 => "t1",
            TimeSymbol::FinalT2 => "t2",
            TimeSymbol::WaitT => "T",
            TimeSymbol::FlightT0 => "T0",
            TimeSymbol::FlightDelta => "dT",
            TimeSymbol::Eps => "eps",
            TimeSymbol::Generic => "t",
            TimeSymbol::One => "one",
        }
    }

    pub fn pretty(self) -> &'static str {
        match self {
            TimeSymbol::Tau => "τ",
            TimeSymbol::Tau1 => "τ₁",
            TimeSymbol::Tau2 => "τ₂",
            TimeSymbol::EmitT0 => "t₀",
            TimeSymbol::ShelfT1 => "t₁",
            TimeSymbol::FinalT2 => "t₂",
            TimeSymbol::WaitT => "T",
            TimeSymbol::FlightT0 => "T₀",
            TimeSymbol::FlightDelta => "δT",
            TimeSymbol::Eps => "ε",
            TimeSymbol::Generic => "t",
            TimeSymbol::One => "𝟙",
        }
    }
}

impl fmt::Display for TimeSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.pretty())
    }
}

impl FromStr for TimeSymbol {
    type Err = PhaseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TimeSymbol::ALL
            .into_iter()
            .find(|sym| sym.as_str() == s || sym.pretty() == s)
            .ok_or_else(|| PhaseError::UnknownTimeSymbol(s.to_string()))
    }
}

impl Serialize for TimeSymbol {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl TryFrom<String> for TimeSymbol {
    type Error = PhaseError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_is_complete_and_distinct() {
        assert_eq!(FreqSymbol::ALL.len(), FreqSymbol::COUNT);
        assert_eq!(TimeSymbol::ALL.len(), TimeSymbol::COUNT);
        for (i, s) in FreqSymbol::ALL.iter().enumerate() {
            assert_eq!(s.index(), i);
        }
        for (i, s) in TimeSymbol::ALL.iter().enumerate() {
            assert_eq!(s.index(), i);
        }
    }

    #[test]
    fn default_tags_match_roles() {
        use FreqSymbol::*;
        for s in [Delta1, Delta2, DeltaG1, DeltaG2, DeltaE1, DeltaE2] {
            assert_eq!(s.tag(), Tag::Unknown, "{s} should be unknown");
        }
        for s in [Laser1, Laser2, OmegaBar1, OmegaBar2] {
            assert_eq!(s.tag(), Tag::Known, "{s} should be known");
        }
    }

    #[test]
    fn names_round_trip() {
        for s in FreqSymbol::ALL {
            assert_eq!(s.as_str().parse::<FreqSymbol>().unwrap(), s);
        }
        for s in TimeSymbol::ALL {
            assert_eq!(s.as_str().parse::<TimeSymbol>().unwrap(), s);
        }
        assert!("bogus".parse::<FreqSymbol>().is_err());
    }
}
