use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("the radial solvers need a constant or radial-profile field on a disc or annulus")]
    NonRadial,

    #[error("annulus radii must satisfy 0 < inner < outer (got inner = {inner}, outer = {outer})")]
    BadAnnulus { inner: f64, outer: f64 },

    #[error("degenerate element {index}: signed area {area:e}")]
    DegenerateElement { index: usize, area: f64 },

    #[error("gauge was computed on a mesh with {gauge_nodes} nodes (level {gauge_level}), form requested on {mesh_nodes} nodes (level {mesh_level})")]
    LevelMismatch {
        gauge_level: usize,
        gauge_nodes: usize,
        mesh_level: usize,
        mesh_nodes: usize,
    },

    #[error("fiber m = 0 must keep the origin degree of freedom")]
    OriginDofRemoved,

    #[error("fiber truncation certificate failed at |m| = {m}: lowest eigenvalue {lowest:e} < 0; raise the fiber cutoff")]
    TruncationCertificate { m: i64, lowest: f64 },

    #[error("field has zero flux; the Feynman-Hellmann slope is evaluated at beta = m / flux")]
    ZeroFlux,

    #[error("Fourier mode {0} < 0 is not the trace of a holomorphic function")]
    NotHolomorphic(i64),

    #[error("map is not certified univalent: sum k|c_k| = {0} >= 1")]
    NotUnivalent(f64),

    #[error("quadrature check failed: {0}")]
    Quadrature(String),

    #[error("LDL factorization broke down at pivot {0}")]
    Breakdown(usize),

    #[error("tail of the de Gennes integral not converged: 1 - mu(xi_max) = {0:e}; raise xi_max")]
    TailNotConverged(f64),

    #[error("semiclassical parameter must be positive (got h = {0})")]
    BadSemiclassical(f64),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
