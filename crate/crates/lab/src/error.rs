use thiserror::Error;

/// Laboratory-level failures, mapped onto process exit codes by `main`:
/// configuration problems exit 1, numerical failures exit 2 (failed built-in
/// checks in check mode exit 3 but are not errors).
#[derive(Debug, Error)]
pub enum LabError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl LabError {
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Config(_) => 1,
            LabError::Numerical(_) => 2,
        }
    }
}

impl From<cdrp_core::CoreError> for LabError {
    fn from(e: cdrp_core::CoreError) -> Self {
        match &e {
            cdrp_core::CoreError::Config(_) | cdrp_core::CoreError::Domain(_) => {
                LabError::Config(e.to_string())
            }
            cdrp_core::CoreError::Data(_) | cdrp_core::CoreError::Estimation(_) => {
                LabError::Numerical(e.to_string())
            }
        }
    }
}

impl From<std::io::Error> for LabError {
    fn from(e: std::io::Error) -> Self {
        LabError::Config(format!("io: {e}"))
    }
}

pub type Result<T> = std::result::Result<T, LabError>;

/// Guard a statistic against silent NaN/inf propagation into outputs.
pub fn finite(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(LabError::Numerical(format!("{name} is not finite ({v})")))
    }
}
