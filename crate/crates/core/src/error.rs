use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("work budget exceeded: {requested} steps requested with {used} of {limit} already used")]
    Budget { requested: u64, used: u64, limit: u64 },
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("frequency {xi:?} lies outside the critical cone (constant {cone})")]
    OutsideCone { xi: [f64; 3], cone: f64 },
    #[error("newton iteration did not converge within {0} steps")]
    NoConvergence(usize),
    #[error("point ({0}, {1}) lies outside the patch domain")]
    OutOfDomain(f64, f64),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub fn degenerate(msg: impl Into<String>) -> Self {
        Error::Degenerate(msg.into())
    }

    pub fn is_budget(&self) -> bool {
        matches!(self, Error::Budget { .. })
    }
}

pub type Result<T> = core::result::Result<T, Error>;
