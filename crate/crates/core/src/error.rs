use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("vector is not a unit vector (|v| = {norm})")]
    NotUnit { norm: f64 },

    #[error("frame is degenerate: |v x e3| = {cross} is below the threshold")]
    DegenerateFrame { cross: f64 },

    #[error("lambda = inf requires a profile in director mode")]
    ModeMismatch,

    #[error("boundary tensor is not uniaxial with the preferred amplitude (distance {distance:e})")]
    NotUniaxial { distance: f64 },

    #[error("amplitude N must be positive; node {node} has N = {value}")]
    NonPositiveAmplitude { node: usize, value: f64 },

    #[error("cos(beta) = {cos_beta:e} is too small for the identity check")]
    SingularBeta { cos_beta: f64 },

    #[error("Newton iteration did not converge after {iterations} steps (residual {residual:e})")]
    NewtonFailed {
        iterations: usize,
        residual: f64,
        last_iterate: Vec<f64>,
    },

    #[error("boundary field is undefined at theta = {theta}, phi = {phi}")]
    UndefinedField { theta: f64, phi: f64 },

    #[error("boundary field is not tangent at theta = {theta}, phi = {phi} (v.omega = {dot:e})")]
    NotTangent { theta: f64, phi: f64, dot: f64 },

    #[error("quadrature node {index} (phi = {phi}) failed: {source}")]
    NodeFailed {
        index: usize,
        phi: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("quadrature in {region} did not settle: relative change {change:e} with {nodes} nodes")]
    QuadratureNotConverged {
        region: String,
        change: f64,
        nodes: usize,
    },

    #[error("construction mismatch on {edge}: {mismatch:e}")]
    InterfaceMismatch { edge: String, mismatch: f64 },

    #[error("solver did not converge: {0}")]
    NotConverged(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
