use std::fmt;
use std::str::FromStr;

use num::{One, Signed};

use super::ast::{Angle, Detector, Instruction, RotAxis, Sequence};
use crate::error::DslError;
use crate::phase::{Coeff, TimeExpr, TimeSymbol};

/// The entanglement protocols shipped with the library.
///
/// The `single_*` family heralds on one photon from a weak superposition;
/// the `two_photon_*` family heralds on one photon in each of two emission
/// windows. `*_rephase` variants return an emitter to the excited state
/// after the herald for a duration matching the measured emission time, so
/// both emitters accumulate the same optical phase. `*_shelved` variants
/// park that correction phase in the long-lived second excited state, and
/// the `_flipped` variant covers level structures where the excited Zeeman
/// splitting exceeds the ground one (moment ratio r > 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BuiltinSeq {
    SingleStandard,
    SingleRephase,
    SingleRephaseShelved,
    TwoPhotonStandard,
    TwoPhotonRephase,
    TwoPhotonRephaseShelved,
    TwoPhotonRephaseShelvedFlipped,
}

impl BuiltinSeq {
    pub const ALL: [BuiltinSeq; 7] = [
        BuiltinSeq::SingleStandard,
        BuiltinSeq::SingleRephase,
        BuiltinSeq::SingleRephaseShelved,
        BuiltinSeq::TwoPhotonStandard,
        BuiltinSeq::TwoPhotonRephase,
        BuiltinSeq::TwoPhotonRephaseShelved,
        BuiltinSeq::TwoPhotonRephaseShelvedFlipped,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BuiltinSeq::SingleStandard => "single_standard",
            BuiltinSeq::SingleRephase => "single_rephase",
            BuiltinSeq::SingleRephaseShelved => "single_rephase_shelved",
            BuiltinSeq::TwoPhotonStandard => "two_photon_standard",
            BuiltinSeq::TwoPhotonRephase => "two_photon_rephase",
            BuiltinSeq::TwoPhotonRephaseShelved => "two_photon_rephase_shelved",
            BuiltinSeq::TwoPhotonRephaseShelvedFlipped => "two_photon_rephase_shelved_flipped",
        }
    }

    pub fn is_shelved(self) -> bool {
        matches!(
            self,
            BuiltinSeq::SingleRephaseShelved
                | BuiltinSeq::TwoPhotonRephaseShelved
                | BuiltinSeq::TwoPhotonRephaseShelvedFlipped
        )
    }

    pub fn is_two_photon(self) -> bool {
        matches!(
            self,
            BuiltinSeq::TwoPhotonStandard
                | BuiltinSeq::TwoPhotonRephase
                | BuiltinSeq::TwoPhotonRephaseShelved
                | BuiltinSeq::TwoPhotonRephaseShelvedFlipped
        )
    }

    /// Construct the sequence. The magnetic-moment ratio `r` only enters the
    /// shelved variants' final wait; the others ignore it.
    pub fn sequence(self, r: &Coeff) -> Sequence {
        let instructions = match self {
            BuiltinSeq::SingleStandard => single_photon_heralding(),
            BuiltinSeq::SingleRephase => {
                let mut v = single_photon_heralding();
                v.extend([
                    rot(RotAxis::Ground, Angle::Pi),
                    rot(RotAxis::Optical, Angle::Pi),
                    Instruction::Wait(TimeExpr::symbol(TimeSymbol::ShelfT1)),
                    rot(RotAxis::Optical, Angle::Pi),
                    // t₂ = T − t₁ refocuses the ground spin detunings.
                    Instruction::Wait(
                        TimeExpr::symbol(TimeSymbol::WaitT)
                            - TimeExpr::symbol(TimeSymbol::ShelfT1),
                    ),
                ]);
                v
            }
            BuiltinSeq::SingleRephaseShelved => {
                let mut v = single_photon_heralding();
                // t₂ = T − (1−r)·t₁ so that, with excited detunings correlated
                // by r, both spin-detuning families cancel.
                let t2 = TimeExpr::symbol(TimeSymbol::WaitT)
                    - TimeExpr::term(TimeSymbol::ShelfT1, Coeff::one() - r);
                v.extend([
                    rot(RotAxis::Ground, Angle::Pi),
                    rot(RotAxis::Optical, Angle::Pi),
                    rot(RotAxis::Excited, Angle::Pi),
                    Instruction::Wait(TimeExpr::symbol(TimeSymbol::ShelfT1)),
                    rot(RotAxis::Excited, Angle::Pi),
                    rot(RotAxis::Optical, Angle::Pi),
                    Instruction::Wait(t2),
                ]);
                v
            }
            BuiltinSeq::TwoPhotonStandard => two_photon_heralding(),
            BuiltinSeq::TwoPhotonRephase => {
                let mut v = two_photon_heralding();
                v.push(two_photon_correction(false, false, &Coeff::one()));
                v
            }
            BuiltinSeq::TwoPhotonRephaseShelved => {
                let mut v = two_photon_heralding();
                v.push(two_photon_correction(true, false, r));
                v
            }
            BuiltinSeq::TwoPhotonRephaseShelvedFlipped => {
                let mut v = two_photon_heralding();
                v.push(two_photon_correction(true, true, r));
                v
            }
        };
        Sequence::new(self.name(), instructions).expect("built-in sequences are valid")
    }
}

impl fmt::Display for BuiltinSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BuiltinSeq {
    type Err = DslError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BuiltinSeq::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| DslError::UnknownBuiltin(s.to_string()))
    }
}

/// Convenience wrapper over [`BuiltinSeq::sequence`] addressing protocols by
/// name.
pub fn builtin(name: &str, r: &Coeff) -> Result<Sequence, DslError> {
    Ok(name.parse::<BuiltinSeq>()?.sequence(r))
}

fn rot(axis: RotAxis, angle: Angle) -> Instruction {
    Instruction::Rot { axis, angle }
}

/// Weak pulse, excitation, one heralding window, then the communication wait.
fn single_photon_heralding() -> Vec<Instruction> {
    vec![
        rot(RotAxis::Ground, Angle::Alpha),
        rot(RotAxis::Optical, Angle::Pi),
        Instruction::Emit { label: "w1".into() },
        Instruction::Detect { detector: Detector::Plus, at: TimeSymbol::Tau },
        Instruction::Wait(TimeExpr::symbol(TimeSymbol::WaitT)),
    ]
}

/// π/2 preparation, two excitation/detection windows separated by the spin
/// echo flip, each followed by a wait of the full window duration.
fn two_photon_heralding() -> Vec<Instruction> {
    vec![
        rot(RotAxis::Ground, Angle::HalfPi),
        rot(RotAxis::Optical, Angle::Pi),
        Instruction::Emit { label: "w1".into() },
        Instruction::Detect { detector: Detector::Plus, at: TimeSymbol::Tau1 },
        Instruction::Wait(TimeExpr::symbol(TimeSymbol::WaitT)),
        rot(RotAxis::Ground, Angle::Pi),
        rot(RotAxis::Optical, Angle::Pi),
        Instruction::Emit { label: "w2".into() },
        Instruction::Detect { detector: Detector::Plus, at: TimeSymbol::Tau2 },
        Instruction::Wait(TimeExpr::symbol(TimeSymbol::WaitT)),
    ]
}

/// The order-dependent correction block: shelve for the photon arrival-time
/// difference, then wait out the spin phase. When the excited-state splitting
/// dominates (r > 1, `flipped`), the ground flip after the return pulse must
/// be omitted to track the reversed spin-phase sign.
fn two_photon_correction(shelved: bool, flipped: bool, r: &Coeff) -> Instruction {
    let diff_ab = TimeExpr::symbol(TimeSymbol::Tau2) - TimeExpr::symbol(TimeSymbol::Tau1);
    let diff_ba = TimeExpr::symbol(TimeSymbol::Tau1) - TimeExpr::symbol(TimeSymbol::Tau2);
    let t2_scale = if shelved {
        (Coeff::one() - r).abs()
    } else {
        Coeff::one()
    };

    let body = |lead_flip: bool, shelf: &TimeExpr| -> Vec<Instruction> {
        let mut v = Vec::new();
        if lead_flip {
            v.push(rot(RotAxis::Ground, Angle::Pi));
        }
        v.push(rot(RotAxis::Optical, Angle::Pi));
        if shelved {
            v.push(rot(RotAxis::Excited, Angle::Pi));
        }
        v.push(Instruction::Wait(shelf.clone()));
        if shelved {
            v.push(rot(RotAxis::Excited, Angle::Pi));
        }
        v.push(rot(RotAxis::Optical, Angle::Pi));
        if !flipped {
            v.push(rot(RotAxis::Ground, Angle::Pi));
        }
        v.push(Instruction::Wait(shelf.scaled(&t2_scale)));
        v
    };

    Instruction::BranchOnOrder {
        second_later: body(true, &diff_ab),
        first_later: body(false, &diff_ba),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parser::Parser;
    use crate::phase::ratio;

    fn count_rot(block: &[Instruction], axis: RotAxis) -> usize {
        block
            .iter()
            .map(|i| match i {
                Instruction::Rot { axis: a, .. } if *a == axis => 1,
                Instruction::BranchOnOrder { second_later, first_later } => {
                    count_rot(second_later, axis) + count_rot(first_later, axis)
                }
                _ => 0,
            })
            .sum()
    }

    #[test]
    fn single_standard_is_heralding_only() {
        let s = BuiltinSeq::SingleStandard.sequence(&Coeff::one());
        assert_eq!(s.instructions.len(), 5);
        assert_eq!(count_rot(&s.instructions, RotAxis::Optical), 1);
    }

    #[test]
    fn shelved_single_has_exactly_two_excited_pulses() {
        let s = BuiltinSeq::SingleRephaseShelved.sequence(&ratio(2, 5));
        assert_eq!(count_rot(&s.instructions, RotAxis::Excited), 2);
    }

    #[test]
    fn shelved_single_at_r_zero_reduces_to_plain_rephase() {
        // t₂ = T − (1−r)t₁ collapses to T − t₁ at r = 0, so stripping the two
        // excited-state pulses must reproduce the plain rephasing program.
        let shelved = BuiltinSeq::SingleRephaseShelved.sequence(&ratio(0, 1));
        let plain = BuiltinSeq::SingleRephase.sequence(&Coeff::one());
        let stripped: Vec<_> = shelved
            .instructions
            .into_iter()
            .filter(|i| !matches!(i, Instruction::Rot { axis: RotAxis::Excited, .. }))
            .collect();
        assert_eq!(stripped, plain.instructions);
    }

    #[test]
    fn flipped_variant_omits_ground_flip_after_return() {
        let flipped = BuiltinSeq::TwoPhotonRephaseShelvedFlipped.sequence(&ratio(3, 2));
        let Instruction::BranchOnOrder { second_later, .. } = flipped.instructions.last().unwrap()
        else {
            panic!("expected branch");
        };
        // One leading ground flip, none between the return pulse and the final wait.
        assert_eq!(count_rot(second_later, RotAxis::Ground), 1);
        let last_two: Vec<_> = second_later.iter().rev().take(2).collect();
        assert!(matches!(last_two[0], Instruction::Wait(_)));
        assert!(matches!(
            last_two[1],
            Instruction::Rot { axis: RotAxis::Optical, .. }
        ));
    }

    #[test]
    fn all_builtins_render_and_reparse() {
        for b in BuiltinSeq::ALL {
            let r = ratio(2, 5);
            let seq = b.sequence(&r);
            let text = seq.render();
            let reparsed = Parser::new().parse_named(&text, b.name()).unwrap();
            assert_eq!(reparsed, seq, "round-trip failed for {b}");
        }
    }

    #[test]
    fn unknown_builtin_name_errors() {
        assert!(matches!(
            builtin("three_photon", &Coeff::one()),
            Err(DslError::UnknownBuiltin(_))
        ));
    }
}
