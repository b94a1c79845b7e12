use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("matrix is not Hermitian (defect {0:.3e})")]
    NotHermitian(f64),
    #[error("CRB undefined/infinite: {0}")]
    CrbUndefined(String),
    #[error("rank-deficient sample covariance: {0}")]
    RankDeficient(String),
    #[error("infeasible scenario: {0}")]
    Infeasible(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("degenerate beamformer: {0}")]
    Degenerate(String),
    #[error("oracle diagnostic: {0}")]
    Oracle(String),
}

pub type Result<T> = std::result::Result<T, Error>;
