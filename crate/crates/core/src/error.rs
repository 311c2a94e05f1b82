use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// log-gamma was asked for a non-positive integer.
    #[error("log-gamma pole at z = {0}")]
    Pole(f64),

    /// The truncated tail of a contour integral could not be bounded below tolerance.
    #[error("contour tail bound {bound:.3e} exceeds tolerance {tolerance:.3e} (estimate {estimate})")]
    TailBound {
        bound: f64,
        tolerance: f64,
        estimate: f64,
    },

    /// The integrand does not decay along the contour.
    #[error("integrand does not decay along the contour: {0}")]
    NonDecaying(String),

    /// Quadrature of a conjugate-symmetric integrand left a significant imaginary part.
    #[error("imaginary residual {imag:.3e} too large relative to real part {real:.3e}")]
    ConjugateSymmetry { real: f64, imag: f64 },

    /// An iterative or adaptive procedure failed to converge.
    #[error("no convergence: {0}")]
    NonConvergence(String),

    /// A polynomial expected to have only real zeros produced a complex pair.
    #[error("complex zero pair {re} ± {im}i; contour likely under-resolved")]
    ComplexRoots { re: f64, im: f64 },

    /// Enumeration exceeded its configured work cap.
    #[error("enumeration cap exceeded: {0}")]
    CapExceeded(String),

    /// A lattice reduction step hit a numerically degenerate configuration.
    #[error("degenerate basis: {0}")]
    Degenerate(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for input-validation failures, false for numerical failures.
    pub fn is_input_error(&self) -> bool {
        matches!(self, Error::Domain(_) | Error::Pole(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
