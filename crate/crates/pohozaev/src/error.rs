//! Error type shared by the whole crate.

use crate::solver::SolveReport;

/// Errors produced by grid calculus, the variational core and the solver.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A functional or integrand evaluated to NaN or infinity.
    #[error("non-finite value encountered in {context}")]
    NonFiniteValue { context: String },

    /// The fiber map has no interior maximum unless Phi(u) > 0.
    #[error("Phi(u) = {value:e} is not positive; the fiber has no interior maximum")]
    PhiNonpositive { value: f64 },

    /// Geometric bracket expansion found no sign change for the fiber root.
    #[error("no sign change within [2^-60, 2^60] while solving the fiber root: {details}")]
    BracketNotFound { details: String },

    /// A Pohozaev-set operation was asked of a state that is not on the manifold.
    #[error("state is not on the Pohozaev manifold (|K| = {k_value:e}, scale = {scale:e})")]
    NotOnManifold { k_value: f64, scale: f64 },

    /// A spectral or finite-difference diagnostic detected under-resolution.
    #[error("grid too coarse: {details}")]
    GridTooCoarse { details: String },

    /// Problem parameters violate the exponent hypotheses.
    #[error("inadmissible exponents: {details}")]
    NonadmissibleExponents { details: String },

    /// Mollification width crosses a jump point or the origin.
    #[error("smoothing width {eps:e} too large: {details}")]
    EpsilonTooLarge { eps: f64, details: String },

    /// Gradient hooks are required but absent.
    #[error("missing gradient hook for {name}")]
    MissingGradient { name: String },

    /// The plateau initial guess never reached Phi > 0.
    #[error("Phi never positive after {attempts} amplitude rescalings of the initial guess")]
    PhiNeverPositive { attempts: usize },

    /// The solver hit its iteration budget. Carries the best iterate found.
    #[error(
        "no convergence after {iterations} iterations \
         (energy = {energy:e}, |K|rel = {k_residual:e}, EL = {el_residual:e})"
    )]
    NoConvergence {
        iterations: usize,
        energy: f64,
        k_residual: f64,
        el_residual: f64,
        report: Box<SolveReport>,
    },

    /// Two grid functions that must share a grid do not.
    #[error("grid mismatch: {details}")]
    GridMismatch { details: String },

    /// Malformed grid-function CSV.
    #[error("grid csv: {details}")]
    GridCsv { details: String },
}

pub type Result<T> = std::result::Result<T, Error>;
