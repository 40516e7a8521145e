use thiserror::Error;

use crate::pulse::PulseParams;

pub type Result<T, E = GeckoError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum GeckoError {
    /// Caller supplied values that violate an operation's preconditions.
    #[error("invalid input: {0}")]
    Input(String),

    /// A pulse file could not be parsed or validated.
    #[error("malformed pulse file: {message}{}", location(.line, .column))]
    Format {
        message: String,
        line: Option<usize>,
        column: Option<usize>,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),

    /// The kernel direction handed to a step has zero norm.
    #[error("degenerate step: kernel direction has zero norm")]
    DegenerateStep,

    /// The step would drive the segment duration to a nonpositive value.
    #[error("step rejected: segment duration would become {dt}")]
    StepRejected { dt: f64 },

    #[error("budget exceeded: {0}")]
    Budget(String),

    /// The fidelity restorer ran out of iterations; `best` is the highest
    /// fidelity pulse it saw.
    #[error("fidelity restoration failed: best fidelity {fidelity:.12} after {iterations} iterations")]
    RestoreFailed {
        best: Box<PulseParams>,
        fidelity: f64,
        iterations: usize,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn location(line: &Option<usize>, column: &Option<usize>) -> String {
    match (line, column) {
        (Some(l), Some(c)) => format!(" (line {l}, column {c})"),
        (Some(l), None) => format!(" (line {l})"),
        _ => String::new(),
    }
}

impl GeckoError {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        GeckoError::Input(msg.into())
    }

    pub(crate) fn format(msg: impl Into<String>) -> Self {
        GeckoError::Format {
            message: msg.into(),
            line: None,
            column: None,
        }
    }
}

impl From<serde_json::Error> for GeckoError {
    fn from(err: serde_json::Error) -> Self {
        if err.is_io() {
            return GeckoError::Io(err.into());
        }
        let line = err.line();
        let column = err.column();
        let text = err.to_string();
        let message = text.split(" at line ").next().unwrap_or(&text).to_string();
        GeckoError::Format {
            message,
            line: (line > 0).then_some(line),
            column: (column > 0).then_some(column),
        }
    }
}
