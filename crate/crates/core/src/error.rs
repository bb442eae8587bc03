use thiserror::Error;

/// Errors raised by the simulator core.
#[derive(Debug, Error)]
pub enum Error {
    #[error("config: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("x3 = {x3} lies outside the channel [-{h}, 0]")]
    OutsideChannel { x3: f64, h: f64 },

    #[error("plate datum has mean {mean:e}; a zero-mean function is required")]
    NonzeroMean { mean: f64 },

    #[error("matrix `{what}` is not positive definite")]
    NotPositiveDefinite { what: &'static str },

    #[error("family is numerically dependent (condition estimate {condition:e}); use a different basis size")]
    DependentFamily { condition: f64 },

    #[error("eigen-solver: {0}")]
    Eigen(String),

    #[error("singular linear system: {0}")]
    Singular(String),

    #[error("Newton failed at t = {t}: residual history {history:?}")]
    NewtonDivergence { t: f64, history: Vec<f64> },

    #[error("empty stationary set")]
    EmptyStationarySet,

    #[error("degenerate fit window: {0}")]
    DegenerateWindow(String),

    #[error("trajectories are not comparable: {0}")]
    GridMismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;
