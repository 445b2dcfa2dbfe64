use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("kernel smallness condition violated: ‖V_x‖₁ = {tv_vx} ≥ A = {amplitude}")]
    KernelSmallness { tv_vx: f64, amplitude: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("non-finite value in {what} at index {index}")]
    NonFinite { what: &'static str, index: usize },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("positivity violated at t = {time}: min u = {min:e} (check the CFL factor)")]
    Positivity { time: f64, min: f64 },

    #[error("boundary value {value:e} exceeds tolerance {tol:e} at t = {time} (domain too small)")]
    BoundaryMass { time: f64, value: f64, tol: f64 },

    #[error("grid under-resolves the viscous layer: dx = {dx} > {required}")]
    UnderResolved { dx: f64, required: f64 },

    #[error("time must be positive, got {0}")]
    NonPositiveTime(f64),

    #[error("rate fit needs {0}")]
    RateFit(String),

    #[error("no checkpoint stored at t = {0}")]
    MissingCheckpoint(f64),

    #[error("test function support [{lo}, {hi}] leaves the grid [{grid_lo}, {grid_hi}]")]
    SupportViolation {
        lo: f64,
        hi: f64,
        grid_lo: f64,
        grid_hi: f64,
    },

    #[error("step failed at t = {time}: {source}")]
    AtTime {
        time: f64,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
