use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("shape mismatch in {context}: expected {expected}, found {found}")]
    Shape {
        context: &'static str,
        expected: String,
        found: String,
    },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("not a probability vector (sum {sum}, min entry {min})")]
    NotOnSimplex { sum: f64, min: f64 },

    #[error("channel matrix column {column} invalid: {reason}")]
    NotStochastic { column: usize, reason: String },

    #[error("matrix is numerically singular (|det| = {det:e} <= {threshold:e})")]
    Singular { det: f64, threshold: f64 },

    #[error("player {player}: precompensated strategy D^-1 beta = {vector:?} is not a probability vector")]
    InfeasiblePrecompensation { player: usize, vector: Vec<f64> },

    #[error("integration unstable at t = {time}: coordinate value {value}; try a smaller step")]
    Instability { time: f64, value: f64 },

    #[error("dynamics configuration: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn shape(context: &'static str, expected: impl ToString, found: impl ToString) -> Self {
        Error::Shape {
            context,
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }
}
