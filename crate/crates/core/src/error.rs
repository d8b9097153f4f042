use thiserror::Error;

/// Error taxonomy shared by all core modules.
///
/// `Config` covers invalid construction parameters, `Domain` covers arguments
/// outside an operation's mathematical domain, `Data` covers malformed or
/// non-finite inputs discovered mid-computation, and `Estimation` covers
/// statistical procedures that cannot produce an estimate from the data given
/// (too few points, empty tail, degenerate design matrix).
#[derive(Debug, Clone, Error)]
pub enum CoreError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("estimation error: {0}")]
    Estimation(String),
}

pub type Result<T> = std::result::Result<T, CoreError>;

impl CoreError {
    pub fn config(msg: impl Into<String>) -> Self {
        CoreError::Config(msg.into())
    }
    pub fn domain(msg: impl Into<String>) -> Self {
        CoreError::Domain(msg.into())
    }
    pub fn data(msg: impl Into<String>) -> Self {
        CoreError::Data(msg.into())
    }
    pub fn estimation(msg: impl Into<String>) -> Self {
        CoreError::Estimation(msg.into())
    }
}
