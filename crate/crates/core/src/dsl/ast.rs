use std::collections::BTreeSet;
use std::fmt;

use num::{One, Signed};
use serde::{Deserialize, Serialize};

use crate::error::DslError;
use crate::phase::{Coeff, FreqSymbol, TimeExpr, TimeSymbol};

/// Rotation angles available to pulse programs. Protocols only ever use the
/// weak-pulse angle α (a numeric run parameter), π/2 and π, so the set is
/// closed and amplitudes stay exact for the π family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Angle {
    Alpha,
    HalfPi,
    Pi,
}

impl Angle {
    pub fn as_str(self) -> &'static str {
        match self {
            Angle::Alpha => "alpha",
            Angle::HalfPi => "pi/2",
            Angle::Pi => "pi",
        }
    }
}

/// Which transition a rotation drives: the ground spin (rg), the excited
/// spin (re) or the optical transition (ro).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RotAxis {
    Ground,
    Excited,
    Optical,
}

impl RotAxis {
    pub fn keyword(self) -> &'static str {
        match self {
            RotAxis::Ground => "rg",
            RotAxis::Excited => "re",
            RotAxis::Optical => "ro",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Detector {
    Plus,
    Minus,
}

impl Detector {
    pub fn as_str(self) -> &'static str {
        match self {
            Detector::Plus => "D+",
            Detector::Minus => "D-",
        }
    }

    pub fn sign(self) -> i8 {
        match self {
            Detector::Plus => 1,
            Detector::Minus => -1,
        }
    }
}

impl fmt::Display for Detector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One statement of a pulse-sequence program.
#[derive(Debug, Clone, PartialEq)]
pub enum Instruction {
    Rot {
        axis: RotAxis,
        angle: Angle,
    },
    Wait(TimeExpr),
    Emit {
        label: String,
    },
    Detect {
        detector: Detector,
        at: TimeSymbol,
    },
    /// Two alternative continuations selected by the ordering of the last two
    /// detection times: `second_later` runs when τ₂ ≥ τ₁ (ties included),
    /// `first_later` otherwise.
    BranchOnOrder {
        second_later: Vec<Instruction>,
        first_later: Vec<Instruction>,
    },
}

/// A parsed pulse-sequence program: an ordered list of instructions plus the
/// symbol sets it touches.
#[derive(Debug, Clone, PartialEq)]
pub struct Sequence {
    pub name: String,
    pub instructions: Vec<Instruction>,
}

impl Sequence {
    pub fn new(name: impl Into<String>, instructions: Vec<Instruction>) -> Result<Self, DslError> {
        let seq = Sequence { name: name.into(), instructions };
        seq.validate()?;
        Ok(seq)
    }

    /// Structural checks: non-empty, and every detection consumes exactly one
    /// previously opened emission window (branches may not change the
    /// balance).
    pub fn validate(&self) -> Result<(), DslError> {
        if self.instructions.is_empty() {
            return Err(DslError::EmptySequence);
        }
        let mut open: Vec<&str> = Vec::new();
        validate_block(&self.instructions, &mut open, &mut 0)?;
        if let Some(label) = open.pop() {
            return Err(DslError::UnmatchedEmit(label.to_string()));
        }
        Ok(())
    }

    /// Program equality regardless of the sequence name.
    pub fn structurally_eq(&self, other: &Sequence) -> bool {
        self.instructions == other.instructions
    }

    pub fn has_branch(&self) -> bool {
        fn scan(block: &[Instruction]) -> bool {
            block
                .iter()
                .any(|i| matches!(i, Instruction::BranchOnOrder { .. }))
        }
        scan(&self.instructions)
    }

    /// Time symbols referenced by waits and detections.
    pub fn declared_times(&self) -> BTreeSet<TimeSymbol> {
        let mut out = BTreeSet::new();
        collect_times(&self.instructions, &mut out);
        out
    }

    /// Frequency symbols the execution will touch, derived from the
    /// instruction kinds present.
    pub fn declared_freqs(&self) -> BTreeSet<FreqSymbol> {
        let mut out = BTreeSet::new();
        collect_freqs(&self.instructions, &mut out);
        out
    }

    /// Canonical text form; `parse` on the result reconstructs the program.
    pub fn render(&self) -> String {
        let mut out = String::new();
        render_block(&self.instructions, 0, &mut out);
        out
    }
}

fn validate_block<'a>(
    block: &'a [Instruction],
    open: &mut Vec<&'a str>,
    index: &mut usize,
) -> Result<(), DslError> {
    for inst in block {
        *index += 1;
        match inst {
            Instruction::Emit { label } => open.push(label),
            Instruction::Detect { .. } => {
                if open.pop().is_none() {
                    return Err(DslError::UnmatchedDetect(*index));
                }
            }
            Instruction::BranchOnOrder { second_later, first_later } => {
                let depth = open.len();
                validate_block(second_later, open, index)?;
                if open.len() != depth {
                    return Err(DslError::UnbalancedBranch);
                }
                validate_block(first_later, open, index)?;
                if open.len() != depth {
                    return Err(DslError::UnbalancedBranch);
                }
            }
            _ => {}
        }
    }
    Ok(())
}

fn collect_times(block: &[Instruction], out: &mut BTreeSet<TimeSymbol>) {
    for inst in block {
        match inst {
            Instruction::Wait(d) => out.extend(d.symbols()),
            Instruction::Detect { at, .. } => {
                out.insert(*at);
            }
            Instruction::BranchOnOrder { second_later, first_later } => {
                collect_times(second_later, out);
                collect_times(first_later, out);
            }
            _ => {}
        }
    }
}

fn collect_freqs(block: &[Instruction], out: &mut BTreeSet<FreqSymbol>) {
    use FreqSymbol::*;
    for inst in block {
        match inst {
            Instruction::Rot { axis: RotAxis::Optical, .. } => {
                out.extend([Laser1, Laser2, Omega1, Omega2]);
            }
            Instruction::Rot { axis: RotAxis::Excited, .. } => {
                out.extend([DeltaE1, DeltaE2]);
            }
            Instruction::Wait(_) => {
                out.extend([DeltaG1, DeltaG2]);
            }
            Instruction::Emit { .. } => {
                out.extend([Omega1, Omega2]);
            }
            Instruction::BranchOnOrder { second_later, first_later } => {
                collect_freqs(second_later, out);
                collect_freqs(first_later, out);
            }
            _ => {}
        }
    }
}

fn render_block(block: &[Instruction], indent: usize, out: &mut String) {
    let pad = "  ".repeat(indent);
    for inst in block {
        match inst {
            Instruction::Rot { axis, angle } => {
                out.push_str(&format!("{pad}{} {};\n", axis.keyword(), angle.as_str()));
            }
            Instruction::Wait(d) => {
                out.push_str(&format!("{pad}wait {};\n", render_time_expr(d)));
            }
            Instruction::Emit { label } => {
                out.push_str(&format!("{pad}emit {label};\n"));
            }
            Instruction::Detect { detector, at } => {
                out.push_str(&format!("{pad}detect {} {};\n", detector.as_str(), at.as_str()));
            }
            Instruction::BranchOnOrder { second_later, first_later } => {
                out.push_str(&format!("{pad}branch_order {{\n"));
                render_block(second_later, indent + 1, out);
                out.push_str(&format!("{pad}}} {{\n"));
                render_block(first_later, indent + 1, out);
                out.push_str(&format!("{pad}}};\n"));
            }
        }
    }
}

fn render_coeff(c: &Coeff) -> String {
    if c.denom().is_one() {
        format!("{}", c.numer())
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

/// Renders a duration as `c1*s1 + c2*s2 - ...` with unit coefficients and the
/// unit time symbol elided.
pub fn render_time_expr(d: &TimeExpr) -> String {
    if d.is_zero() {
        return "0".to_string();
    }
    let mut out = String::new();
    for (i, (ts, c)) in d.iter().enumerate() {
        let mag = c.abs();
        if c.is_negative() {
            out.push_str(if i == 0 { "-" } else { " - " });
        } else if i > 0 {
            out.push_str(" + ");
        }
        if ts == TimeSymbol::One {
            out.push_str(&render_coeff(&mag));
        } else if mag.is_one() {
            out.push_str(ts.as_str());
        } else {
            out.push_str(&format!("{}*{}", render_coeff(&mag), ts.as_str()));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase::ratio;

    fn wait(expr: TimeExpr) -> Instruction {
        Instruction::Wait(expr)
    }

    #[test]
    fn empty_sequence_rejected() {
        assert_eq!(
            Sequence::new("x", vec![]).unwrap_err(),
            DslError::EmptySequence
        );
    }

    #[test]
    fn detect_requires_open_window() {
        let err = Sequence::new(
            "x",
            vec![Instruction::Detect { detector: Detector::Plus, at: TimeSymbol::Tau }],
        )
        .unwrap_err();
        assert_eq!(err, DslError::UnmatchedDetect(1));
    }

    #[test]
    fn emit_must_be_consumed() {
        let err = Sequence::new("x", vec![Instruction::Emit { label: "w1".into() }]).unwrap_err();
        assert_eq!(err, DslError::UnmatchedEmit("w1".into()));
    }

    #[test]
    fn render_formats_linear_combinations() {
        let d = TimeExpr::symbol(TimeSymbol::WaitT)
            - TimeExpr::term(TimeSymbol::ShelfT1, ratio(1, 10));
        assert_eq!(render_time_expr(&d), "-1/10*t1 + T");
        let n = TimeExpr::term(TimeSymbol::One, ratio(1, 400000));
        assert_eq!(render_time_expr(&n), "1/400000");
    }

    #[test]
    fn declared_symbols_cover_waits_and_detects() {
        let seq = Sequence::new(
            "x",
            vec![
                Instruction::Emit { label: "w1".into() },
                Instruction::Detect { detector: Detector::Plus, at: TimeSymbol::Tau },
                wait(TimeExpr::symbol(TimeSymbol::WaitT)),
            ],
        )
        .unwrap();
        let times = seq.declared_times();
        assert!(times.contains(&TimeSymbol::Tau));
        assert!(times.contains(&TimeSymbol::WaitT));
    }
}
