use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("closest-point iteration did not converge after {0} iterations")]
    ClosestPointNoConvergence(usize),
    #[error("point lies outside the admissible tubular neighborhood")]
    OutsideNeighborhood,
    #[error("transversality violation: nu . nu_Gamma = {0}")]
    TransversalityViolation(f64),
    #[error("degenerate face {0} (zero area)")]
    DegenerateFace(usize),
    #[error("invalid surface parameter c = {0}; c must be positive")]
    InvalidSurface(f64),
    #[error("singular system: {0}")]
    SingularSystem(String),
    #[error("eigensolver did not converge after {iterations} iterations (worst residual {residual:.3e})")]
    EigenNoConvergence { iterations: usize, residual: f64 },
    #[error("requested {requested} eigenpairs but the constrained subspace has dimension {available}")]
    EigenCountTooLarge { requested: usize, available: usize },
    #[error("filter policy known_dim({0}) exceeds the {1} available eigenpairs")]
    KnownDimTooLarge(usize, usize),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("mesh format error: {0}")]
    MeshFormat(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
