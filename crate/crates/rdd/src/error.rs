use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid DGP parameters: {0}")]
    InvalidParams(String),
    #[error("insufficient data: {left} observations left and {right} right of the cutoff, need {needed} each")]
    InsufficientData { left: usize, right: usize, needed: usize },
    #[error("design matrix is singular")]
    SingularDesign,
    #[error("invalid panel: {0}")]
    InvalidPanel(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
