use thiserror::Error;

/// Process exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags or a config that fails validation.
    #[error("{0}")]
    Usage(String),

    #[error("config {path}: {message}")]
    Config { path: String, message: String },

    #[error(transparent)]
    Core(#[from] trajexp::Error),

    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn io(path: impl AsRef<std::path::Path>, e: impl std::fmt::Display) -> Self {
        CliError::Io {
            path: path.as_ref().display().to_string(),
            message: e.to_string(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config { .. } => EXIT_USAGE,
            CliError::Core(trajexp::Error::Schema(_)) => EXIT_USAGE,
            _ => EXIT_RUNTIME,
        }
    }

    /// What to change in the config, when there is an obvious fix.
    pub fn hint(&self) -> Option<String> {
        use trajexp::Error as E;
        match self {
            CliError::Core(E::Cfl { suggested, .. }) => Some(format!(
                "set simulation.dt to at most {suggested:.3e} or lower the resolution"
            )),
            CliError::Core(E::TransientNotDecayed { .. }) => {
                Some("raise simulation.t_end or extract_t_start so the lowest shell dominates".into())
            }
            CliError::Core(E::BlowUp { .. }) => Some("set a smaller simulation.dt".into()),
            CliError::Core(E::HorizonInsufficient { .. }) => {
                Some("raise horizon or loosen x_star_tol".into())
            }
            CliError::Core(E::StepSizeUnderflow { .. }) => {
                Some("the field may be singular along this path; loosen tol or move x0".into())
            }
            CliError::Core(E::TimeOutOfRange { .. }) => {
                Some("horizon must not exceed simulation.t_end".into())
            }
            CliError::Core(E::IndexOutOfRange { .. }) => {
                Some("raise semigroup.cap to at least order + 1".into())
            }
            CliError::Core(E::TooFewPoints { .. }) => {
                Some("raise horizon or tighten tol so more samples clear the noise floor".into())
            }
            _ => None,
        }
    }
}
