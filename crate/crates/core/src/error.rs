use thiserror::Error;

/// Errors raised by the lab kernels.
///
/// The variants line up with the CLI exit codes: parameter/domain problems are
/// validation failures, `Resource` is a cap or budget breach and `Contract`
/// is a violated postcondition or precondition that the caller promised.
#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("resource limit exceeded: {what} needs {required}, budget {budget}")]
    Resource {
        what: &'static str,
        required: u128,
        budget: u128,
    },

    #[error("contract violated: {0}")]
    Contract(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, LabError>;

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(LabError::Parameter(msg.into()))
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(LabError::Domain(msg.into()))
}

pub(crate) fn check_budget(what: &'static str, required: u128, budget: u128) -> Result<()> {
    if required > budget {
        Err(LabError::Resource {
            what,
            required,
            budget,
        })
    } else {
        Ok(())
    }
}
