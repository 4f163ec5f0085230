use thiserror::Error;

use crate::params::ModelId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Retail price vector does not match the model's retailer structure.
    #[error("model {model}: {detail}")]
    Structural { model: ModelId, detail: String },

    /// A printed solution formula has a zero denominator at these parameters.
    #[error("singular parameters: {variable} has zero denominator {expression}")]
    Singular {
        variable: &'static str,
        expression: &'static str,
    },

    #[error("best-response iteration did not converge after {iterations} iterations (last gap {last_gap:e})")]
    Divergence {
        iterations: usize,
        last_gap: f64,
        trace: Vec<(f64, f64)>,
    },

    #[error("no feasible candidate: most violated constraint {constraint} (slack {slack:e})")]
    Infeasible { constraint: String, slack: f64 },

    #[error("invalid parameters: {}", .0.join("; "))]
    InvalidParams(Vec<String>),

    #[error("{op} is not defined for model {model}")]
    WrongModel { op: &'static str, model: ModelId },

    #[error("invalid options: {0}")]
    InvalidOptions(String),
}
