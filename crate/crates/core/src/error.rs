use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised anywhere in the pipeline. Variants name the offending simplex when there is one.
#[derive(Debug, Error)]
pub enum Error {
    #[error("face {face} of tetrahedron {tet} is not glued")]
    UngluedFace { tet: usize, face: usize },
    #[error("gluing of face {face} of tetrahedron {tet} is not an involution")]
    NonInvolutiveGluing { tet: usize, face: usize },
    #[error("gluing of face {face} of tetrahedron {tet} preserves the induced face orientation")]
    OrientationInconsistent { tet: usize, face: usize },
    #[error("invalid gluing record at face {face} of tetrahedron {tet}: {reason}")]
    InvalidGluing { tet: usize, face: usize, reason: String },
    #[error("corner {corner} of tetrahedron {tet} is glued to vertex {found}, expected vertex {expected}")]
    VertexMismatch { tet: usize, corner: usize, expected: usize, found: usize },
    #[error("edge {edge} of tetrahedron {tet} is identified with itself reversed")]
    EdgeSelfReversed { tet: usize, edge: usize },
    #[error("Euler characteristic is {chi}, a closed 3-manifold needs 0")]
    EulerCharacteristic { chi: i64 },
    #[error("knot is not a simple closed cycle: {reason}")]
    KnotNotACycle { reason: String },
    #[error("malformed complex: {0}")]
    Malformed(String),

    #[error("tetrahedron {tet:?} is degenerate: |6V| = {volume6:e} below threshold {threshold:e}")]
    DegenerateTetrahedron { tet: Option<usize>, volume6: f64, threshold: f64 },
    #[error("edge endpoints coincide")]
    CoincidentPoints,

    #[error("representation is trivial: rotation angle is 0 mod 2π")]
    TrivialRepresentation,
    #[error("invalid representation: {0}")]
    InvalidRepresentation(String),
    #[error("unknown generator `{0}`")]
    UnknownGenerator(String),
    #[error("cannot parse deck word `{word}`: {reason}")]
    WordParse { word: String, reason: String },

    #[error("inconsistent lift across face {face} of tetrahedron {tet}: discrepancy {discrepancy:e}")]
    InconsistentLift { tet: usize, face: usize, discrepancy: f64 },
    #[error("edge {edge} does not have coinciding endpoints")]
    NotALoop { edge: usize },
    #[error("deficit of edge {edge} deviates from its expected value by {deviation:e}")]
    DeficitMismatch { edge: usize, deviation: f64 },
    #[error("no general-position realization found after {attempts} attempts")]
    SamplingExhausted { attempts: usize },

    #[error("consecutive maps do not compose to zero ({which}: relative residual {residual:e})")]
    NotAComplex { which: String, residual: f64 },
    #[error("complex is not acyclic: rank of {which} is {found}, expected {expected}")]
    NotAcyclic { which: String, expected: usize, found: usize },
    #[error("no nonsingular minor chain at stage {stage}")]
    SingularMinorChain { stage: usize },

    #[error("invariant unstable across samples: max relative deviation {max_relative_deviation:e} exceeds {tolerance:e}")]
    InvariantUnstable { max_relative_deviation: f64, tolerance: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("move not applicable: {0}")]
    MoveNotApplicable(String),
    #[error("move would touch the knot: {0}")]
    WouldTouchKnot(String),

    #[error("TKF parse error: {0}")]
    Parse(serde_json::Error),
    #[error("TKF field `{field}`: {reason}")]
    Format { field: String, reason: String },
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e)
    }
}
