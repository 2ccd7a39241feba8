use thiserror::Error;

/// Errors from the symbolic phase algebra.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum PhaseError {
    #[error("unknown frequency symbol `{0}`")]
    UnknownFreqSymbol(String),
    #[error("unknown time symbol `{0}`")]
    UnknownTimeSymbol(String),
    #[error("cyclic substitution involving `{0}`")]
    CyclicSubstitution(String),
    #[error("no value assigned to frequency symbol `{0}`")]
    MissingFreqValue(String),
    #[error("no value assigned to time symbol `{0}`")]
    MissingTimeValue(String),
}

/// Errors from parsing and validating pulse-sequence programs.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum DslError {
    #[error("{line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("empty sequence")]
    EmptySequence,
    #[error("detect without a matching open emission window (instruction {0})")]
    UnmatchedDetect(usize),
    #[error("emission window `{0}` left open with no detection")]
    UnmatchedEmit(String),
    #[error("branch bodies must leave emission windows balanced")]
    UnbalancedBranch,
    #[error("unknown built-in sequence `{0}`")]
    UnknownBuiltin(String),
}

/// Errors from executing a sequence on the joint state.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum EngineError {
    #[error("optical rotations support only pi pulses")]
    OpticalAngleUnsupported,
    #[error("impossible herald: no ket is consistent with the detector click")]
    ImpossibleHerald,
    #[error("herald failure: fewer than two coherent kets survive the protocol")]
    HeraldFailure,
    #[error("cannot resolve time ordering for branch instruction")]
    UnresolvedBranch,
    #[error("cannot merge amplitudes with distinct symbolic phases")]
    PhaseMerge,
    #[error(transparent)]
    Phase(#[from] PhaseError),
}

/// Errors from the fidelity engines and hardware helpers.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum FidelityError {
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("quadrature failed to converge to {tol} within depth {max_depth}")]
    QuadratureNonConvergence { tol: f64, max_depth: usize },
    #[error(transparent)]
    Dsl(#[from] DslError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}
