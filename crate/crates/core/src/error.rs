use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("non-finite coordinate")]
    NonFinite,
    #[error("degenerate polygon: {0}")]
    Degenerate(&'static str),
    #[error("polygon is not strictly convex")]
    NotConvex,
    #[error("norm ball is not symmetric about the origin")]
    NotSymmetric,
    #[error("origin is not interior to the norm ball")]
    OriginNotInterior,
    #[error("zero displacement has no face")]
    ZeroDisplacement,
    #[error("point is not in K")]
    PointNotInK,
    #[error("frame must be orthonormal and positively oriented")]
    BadFrame,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CostError {
    #[error("power must be finite and > 1, got {0}")]
    BadPower(f64),
    #[error("one-variable constrained cost requires a power h")]
    OneVarNeedsPower,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeasureError {
    #[error("measure is empty")]
    Empty,
    #[error("{points} points but {masses} masses")]
    LengthMismatch { points: usize, masses: usize },
    #[error("mass {index} is not positive and finite: {mass}")]
    BadMass { index: usize, mass: f64 },
    #[error("masses sum to {0}, expected 1")]
    NotNormalized(f64),
    #[error("atoms {0} and {1} coincide")]
    DuplicatePoint(usize, usize),
}

/// Witness of infeasibility: a set of source atoms whose admissible targets
/// cannot absorb their mass.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct InfeasibilityCut {
    pub sources: Vec<usize>,
    pub reachable_targets: Vec<usize>,
    pub deficit: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TransportError {
    #[error("no transport plan with finite cost exists (deficit {:.3e})", .0.as_ref().map_or(f64::NAN, |c| c.deficit))]
    Infeasible(Option<InfeasibilityCut>),
    #[error("total masses differ: {0} vs {1}")]
    Unbalanced(f64, f64),
    #[error("instance too large for brute force: {0}")]
    TooLarge(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DecompositionError {
    #[error("decomposition is not applicable to a strictly convex cost")]
    NotApplicable,
    #[error("plan entry references atom outside the measures")]
    BadIndex,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RebuildError {
    #[error("fiber block mass imbalance: sources {sources} vs targets {targets}")]
    MassImbalance { sources: f64, targets: f64 },
    #[error("operation not defined for this cost: {0}")]
    UnsupportedCost(&'static str),
    #[error(transparent)]
    Decomposition(#[from] DecompositionError),
    #[error(transparent)]
    Transport(#[from] TransportError),
}

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv line {line}: {msg}")]
    Csv { line: u64, msg: String },
    #[error("json line {line} column {column}: {msg}")]
    Json {
        line: usize,
        column: usize,
        msg: String,
    },
    #[error("invalid literal: {0}")]
    Literal(String),
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

impl From<serde_json::Error> for IoError {
    fn from(e: serde_json::Error) -> Self {
        IoError::Json {
            line: e.line(),
            column: e.column(),
            msg: e.to_string(),
        }
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error(transparent)]
    Decomposition(#[from] DecompositionError),
    #[error(transparent)]
    Rebuild(#[from] RebuildError),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error("invalid config: {0}")]
    Config(String),
}
