use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("index {index} out of range 1..={cap}")]
    IndexOutOfRange { index: usize, cap: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("arity mismatch: tensor of order {order} applied to {found} arguments")]
    ArityMismatch { order: usize, found: usize },

    #[error("no term with index {0} in the field expansion")]
    MissingTerm(usize),

    #[error("derivative of order {order} requested but the field supports at most {max}")]
    DerivativeOrder { order: usize, max: usize },

    #[error("horizon insufficient: limit-point bound {bound:e} exceeds tolerance {tol:e}")]
    HorizonInsufficient { bound: f64, tol: f64 },

    #[error("step size underflow at t = {t} (last good state {state:?})")]
    StepSizeUnderflow { t: f64, state: Vec<f64> },

    #[error("non-finite velocity at t = {t}")]
    NonFinite { t: f64 },

    #[error("too few points above the noise floor: {found} < {required}")]
    TooFewPoints { found: usize, required: usize },

    #[error("CFL violated: dt = {dt} exceeds the stable step, use dt <= {suggested}")]
    Cfl { dt: f64, suggested: f64 },

    #[error("transient not decayed: lowest shell carries {fraction:.3} of the energy (need {required})")]
    TransientNotDecayed { fraction: f64, required: f64 },

    #[error("simulation blew up at t = {t}; reduce dt")]
    BlowUp { t: f64 },

    #[error("time {t} outside stored range [{start}, {end}]")]
    TimeOutOfRange { t: f64, start: f64, end: f64 },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("checkpoint format error: {0}")]
    Format(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Schema(e.to_string())
    }
}
