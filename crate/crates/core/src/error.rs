use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter or input lies outside its admissible range.
    #[error("invalid input: {0}")]
    Domain(String),

    #[error("{context}: linear solver did not converge (residual {residual:e} after {iterations} iterations)")]
    Solver {
        context: &'static str,
        residual: f64,
        iterations: usize,
    },

    #[error("CFL number {cfl:.3} exceeds 1 at dt = {dt:e}; reduce the time step")]
    Cfl { cfl: f64, dt: f64 },

    #[error("front is not a single-valued graph: column {0} has more than one zero crossing")]
    MultivaluedFront(usize),

    #[error("velocity extension stalled, residual history {0:?}")]
    ExtensionStalled(Vec<f64>),

    #[error("narrow band too thin for the transport stencil ({0} cells)")]
    BandTooNarrow(usize),

    #[error("missing trajectory checkpoint {0}")]
    MissingCheckpoint(usize),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-finite value encountered in {0}")]
    NonFinite(String),

    #[error("step {step} (t = {time:e}): {source}")]
    AtStep {
        step: usize,
        time: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn at_step(self, step: usize, time: f64) -> Self {
        Error::AtStep {
            step,
            time,
            source: Box::new(self),
        }
    }

    /// True for errors a caller should report as bad input rather than a runtime failure.
    pub fn is_input_error(&self) -> bool {
        match self {
            Error::Domain(_) | Error::Parse(_) | Error::Dimension(_) => true,
            Error::AtStep { source, .. } => source.is_input_error(),
            _ => false,
        }
    }
}
