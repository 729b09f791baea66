use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid state spec: {0}")]
    InvalidSpec(String),

    #[error("manifold {manifold}: matrix is not Hermitian (defect {defect:e})")]
    NotHermitian { manifold: usize, defect: f64 },

    #[error("manifold {manifold}: trace {trace} is not usable")]
    BadTrace { manifold: usize, trace: f64 },

    #[error("manifold {manifold}: matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPositive { manifold: usize, min_eigenvalue: f64 },

    #[error("manifold {manifold}: expected a {expected}x{expected} matrix, got {rows}x{cols}")]
    Dimension {
        manifold: usize,
        expected: usize,
        rows: usize,
        cols: usize,
    },

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("cutoff {cutoff} discards tail mass {tail:e} (allowed {allowed:e})")]
    TailMass { cutoff: usize, tail: f64, allowed: f64 },

    #[error("manifold {0} is not present in the state")]
    ManifoldAbsent(usize),

    #[error("invalid moment order {0}")]
    InvalidOrder(u32),

    #[error("uncertainty relation violated: {0}")]
    UncertaintyViolation(String),

    #[error("empty direction grid")]
    EmptyGrid,

    #[error("order {order}: design matrix has rank {rank}, {needed} needed")]
    RankDeficient {
        order: u32,
        rank: usize,
        needed: usize,
    },

    #[error("inconsistent observations: {0}")]
    InconsistentObservations(String),

    #[error("invalid detector configuration: {0}")]
    InvalidConfig(String),

    #[error("unsupported manifold content: {0}")]
    UnsupportedManifold(String),

    #[error("isotropy triple {0:?} is not one of the realizable 3-photon classes")]
    UnrealizableClass([bool; 3]),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
