use alloc::string::String;

/// Errors raised by the core algorithms.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid volume: {0}")]
    InvalidVolume(String),
    #[error("volume contains {count} non-finite values")]
    NonFiniteData { count: usize },
    #[error("bad pipeline id {0:?}")]
    BadPipelineId(String),
    #[error("affine has a singular linear part")]
    SingularAffine,
    #[error("grids differ in dims or affine")]
    GridMismatch,
    #[error("no masks given")]
    EmptyMaskList,
    #[error("mask selects no voxels")]
    EmptyIntersection,
    #[error("vector has zero variance")]
    ZeroVariance,
    #[error("vectors were extracted with different masks")]
    MaskMismatch,
    #[error("need at least 2 values, got {0}")]
    LengthTooSmall(usize),
    #[error("matrices disagree on contrast or pipeline order")]
    OrderMismatch,
    #[error("empty input list")]
    EmptyList,
    #[error("negative weight {value} between nodes {i} and {j}")]
    NegativeWeight { i: usize, j: usize, value: f64 },
    #[error("graph has no positive edge weight")]
    AllZeroGraph,
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("partition covers {got} nodes, graph has {expected}")]
    UncoveredNode { expected: usize, got: usize },
    #[error("brute force supports at most {max} nodes, got {n}")]
    TooLarge { n: usize, max: usize },
    #[error("partitions are over different node sets")]
    NodeSetMismatch,
    #[error("p-value {0} outside [0, 1]")]
    BadP(f64),
    #[error("FDR level {0} outside (0, 1)")]
    BadQ(f64),
    #[error("non-finite input")]
    NonFinite,
    #[error("atlas values must lie in [0, 1] or [0, 100]; found {min}..{max}")]
    BadAtlasRange { min: f64, max: f64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
