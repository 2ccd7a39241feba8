//! Pulse-sequence programs: a small text format for rotations, waits,
//! emission windows and detection events, plus the built-in sequences for
//! the single- and two-photon entanglement protocols.

mod ast;
mod builtins;
mod parser;

pub use ast::{render_time_expr, Angle, Detector, Instruction, RotAxis, Sequence};
pub use builtins::{builtin, BuiltinSeq};
pub use parser::{parse, Parser};
