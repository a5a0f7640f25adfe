use thiserror::Error;

use crate::measure::SearchReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("index {index} out of range (bound {bound})")]
    IndexOutOfRange { index: usize, bound: usize },

    #[error("class C_N is undefined for n = {n} (requires n >= 2)")]
    ClassUndefined { n: usize },

    #[error("{what} is infeasible at n = {n} (limit {limit})")]
    Infeasible {
        what: &'static str,
        n: usize,
        limit: usize,
    },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("operator is not hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("measurement operator has zero spectral range")]
    DegenerateMeasurement,

    #[error("expectation has imaginary residue {residue:.3e} above tolerance {tol:.3e}")]
    ImaginaryResidue { residue: f64, tol: f64 },

    #[error("symmetrized off-diagonal entries are not uniform (spread {spread:.3e})")]
    NotInvariantForm { spread: f64 },

    #[error("{queried} arguments queried; a witness is only guaranteed for at most {max}")]
    NoWitnessGuaranteed { queried: usize, max: usize },

    #[error(
        "no feasible candidate within budget; best residual {:.3e}",
        .0.penalty_residual
    )]
    SearchInfeasible(Box<SearchReport>),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn parse(msg: impl Into<String>) -> Self {
        Error::Parse(msg.into())
    }
}
