use thiserror::Error;

/// Errors shared across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("singular parameter point (f={f}, g={g}): {reason}")]
    SingularParameter { f: f64, g: f64, reason: String },

    #[error("distribution is not in the family's lower set: {0}")]
    NotInLowerSet(String),

    #[error("not XY-absolutely continuous: {0}")]
    NotAbsolutelyContinuous(String),

    #[error("degenerate support: {0}")]
    DegenerateSupport(String),

    #[error("inconsistency: {0}")]
    Inconsistency(String),

    #[error("point ({f}, {g}) is not a node of the {grid_n}-point grid")]
    OffGridPoint { f: f64, g: f64, grid_n: usize },

    #[error("the two closed forms for c disagree: {form1} vs {form2} at alpha={alpha}, epsilon={epsilon}")]
    FormulaMismatch {
        form1: f64,
        form2: f64,
        alpha: f64,
        epsilon: f64,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
