use thiserror::Error;

/// Errors raised across the solver stack.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("degenerate element {element}: {reason}")]
    DegenerateElement { element: usize, reason: String },

    #[error("inverted element {element} (J = {jacobian:e})")]
    InvertedElement { element: usize, jacobian: f64 },

    #[error("element {element} needs {required} interaction points per direction (max {max}); refine the Lagrangian mesh")]
    QuadratureOrder {
        element: usize,
        required: usize,
        max: usize,
    },

    #[error("interaction point of element {element} left the domain at ({x:.6}, {y:.6})")]
    OutsideDomain { element: usize, x: f64, y: f64 },

    #[error(
        "{solver} failed to converge: {iterations} iterations, relative residual {residual:e}"
    )]
    SolverFailure {
        solver: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("CFL limit exceeded: max|u| dt / h = {cfl:.4} > {limit:.4}")]
    Cfl { cfl: f64, limit: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
