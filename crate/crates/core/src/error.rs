use thiserror::Error;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("potential is not finite at node {node} (x = {position:?})")]
    InvalidPotential { node: usize, position: Vec<f64> },

    #[error("eigensolver did not converge within {iterations} iterations (best residual {residual:.3e}, tol {tol:.3e})")]
    Convergence {
        residual: f64,
        tol: f64,
        iterations: usize,
    },

    #[error("class {class} condition violated: {detail} (worst node {node}, x = {position:?})")]
    ClassViolation {
        class: String,
        detail: String,
        node: usize,
        position: Vec<f64>,
    },

    #[error("cutoffs out of order: kappa = {kappa} must satisfy 0 < kappa < lambda = {lambda}")]
    CutoffOrder { kappa: f64, lambda: f64 },

    #[error("Fock space dimension {dim} exceeds the capacity budget {budget}")]
    Capacity { dim: usize, budget: usize },

    #[error("e^(c|x|) overflows at the box corner (c = {c}, corner |x| = {corner}); use a smaller c or half-extent")]
    Overflow { c: f64, corner: f64 },

    #[error("shift too small: negative curvature detected, Rayleigh quotient {rayleigh:.3e}")]
    ShiftTooSmall { rayleigh: f64 },

    #[error("expectation drifted off the real axis: imaginary part {imag:.3e} exceeds {threshold:.3e}")]
    NonHermitian { imag: f64, threshold: f64 },

    #[error("localization feasibility violated: |E_at| - sup|V| - C0^2 = {margin:.3e} <= 0")]
    Infeasible { margin: f64 },

    #[error("no feasible (epsilon, epsilon') for q = {q}, Lambda = {lambda}: 1 - |q| C^(1) <= 0 over the whole search grid")]
    NoFeasibleEpsilon { q: f64, lambda: f64 },

    #[error("component provenance mismatch: {0}")]
    Provenance(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("config error at `{field}`: {message}")]
    Config { field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
