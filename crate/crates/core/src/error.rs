use thiserror::Error;

pub type Result<T> = std::result::Result<T, NbrigError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NbrigError {
    /// A distribution parameter is non-finite or outside its open domain.
    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    /// The requested quantity does not exist for these parameters
    /// (mgf outside its domain, moment of an order the mixing law lacks, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// An evaluation lost too many digits to cancellation.
    #[error("precision loss in {what}: estimated relative error {rel_err:e} exceeds {limit:e}")]
    Precision {
        what: String,
        rel_err: f64,
        limit: f64,
    },

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub(crate) fn check_positive(name: &'static str, value: f64) -> Result<f64> {
    if !value.is_finite() {
        return Err(NbrigError::InvalidParameter {
            name,
            value,
            reason: "must be finite",
        });
    }
    if value <= 0.0 {
        return Err(NbrigError::InvalidParameter {
            name,
            value,
            reason: "must be positive",
        });
    }
    Ok(value)
}
