//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by the library. CLI exit codes map `InvalidInput`-like
/// variants to usage errors (2) and solver/eigensolver failures to
/// numerical errors (3).
#[derive(Debug, Error)]
pub enum Error {
    /// Rejected input: out-of-range parameter, unknown name, dimension mismatch.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Generic geometry failure (degenerate hull, bad vertex set).
    #[error("geometry error: {0}")]
    Geometry(String),

    /// The origin is not strictly inside the convex hull; carries a
    /// separating direction as evidence.
    #[error("origin not interior to hull; separating direction ({:.6}, {:.6}, {:.6})", direction[0], direction[1], direction[2])]
    OriginNotInterior { direction: [f64; 3] },

    /// Convex decomposition infeasible; `margin` is the residual the
    /// feasibility solver could not close.
    #[error("convex decomposition infeasible: target outside hull (residual {margin:.3e})")]
    DecompositionInfeasible { margin: f64 },

    /// A half-space vertex sum collapsed to (numerically) zero norm.
    #[error("degenerate polyhedron: {0}")]
    DegeneratePolyhedron(String),

    /// Iterated family exceeded the configured vertex cap.
    #[error("resource limit exceeded: {0}")]
    Resource(String),

    /// Conditioning on a zero-probability measurement outcome.
    #[error("conditioning on zero-probability outcome: {0}")]
    Conditioning(String),

    /// A conditional state's Bloch vector falls outside the codebook hull,
    /// i.e. the state is too entangled for the chosen vertex set.
    #[error("visibility too high for codebook: setting ({:.6}, {:.6}, {:.6}) gives conditional Bloch norm {norm:.6} > inscribed radius {limit:.6}", setting[0], setting[1], setting[2])]
    VisibilityTooHigh {
        setting: [f64; 3],
        norm: f64,
        limit: f64,
    },

    /// A filter annihilated one of the hidden states.
    #[error("degenerate filter: {0}")]
    DegenerateFilter(String),

    /// Numerical failure (solver non-convergence, eigensolver stall).
    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
