//! Crate-wide error type.

use thiserror::Error;

#[derive(Error, Debug)]
pub enum Error {
    #[error("invalid polygon: {0}")]
    InvalidPolygon(String),

    #[error("mesh parse error at line {line}: {message}")]
    MeshParse { line: usize, message: String },

    #[error("mesh violates invariants:\n{}", .0.iter().map(|v| format!("  - {v}")).collect::<Vec<_>>().join("\n"))]
    InvalidMesh(Vec<crate::mesh::Violation>),

    #[error("element {element}: {message}")]
    DegenerateElement { element: usize, message: String },

    #[error("singular local system on element {element}: {message}")]
    SingularLocal { element: usize, message: String },

    #[error("sparse factorization failed: {0}")]
    Factorization(String),

    #[error("solver residual {residual:.3e} exceeds tolerance {tolerance:.3e}")]
    ResidualTooLarge { residual: f64, tolerance: f64 },

    #[error("energy norm undefined: negative quadratic form on element {element} ({value:.3e})")]
    NegativeForm { element: usize, value: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("exact solution required but not present in the problem")]
    MissingExact,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
