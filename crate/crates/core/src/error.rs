use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An input lies outside the domain where a formula is defined.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("quadrature did not converge: estimated error {achieved:.3e} exceeds requested {requested:.3e} after {intervals} subintervals")]
    Quadrature {
        achieved: f64,
        requested: f64,
        intervals: usize,
    },

    /// A quantity that is a distribution (not a function) at `k = 0` was
    /// requested pointwise.
    #[error("{0} is a distribution at k = 0; use spectrum::characteristic_roots for pole positions")]
    DistributionalLimit(&'static str),

    #[error("integrand is singular: {0}")]
    SingularIntegrand(String),

    #[error("root polish failed: residual {residual:.3e} at {root}")]
    RootPolish { root: String, residual: f64 },

    #[error("no bracket: {0}")]
    NoBracket(String),

    #[error("Richardson extrapolation {extrapolated:.12e} disagrees with the limit {limit:.12e}")]
    ExtrapolationDivergence { extrapolated: f64, limit: f64 },

    #[error("degenerate fit: R^2 = {r_squared:.6}")]
    FitDegenerate { r_squared: f64 },

    #[error("Fock truncation not converged: tail population {tail:.3e} at n_max = {n_max}")]
    TruncationNotConverged { n_max: usize, tail: f64 },

    #[error("unstable drift matrix: max eigenvalue real part {max_real:.3e}")]
    Unstable { max_real: f64 },

    #[error("linear algebra failure: {0}")]
    LinearAlgebra(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// True for errors caused by invalid user input, as opposed to a
    /// numerical failure on valid input.
    pub fn is_invalid_input(&self) -> bool {
        matches!(self, Error::Domain(_) | Error::DistributionalLimit(_) | Error::Io(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
