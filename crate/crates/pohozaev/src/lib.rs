#![allow(clippy::neg_cmp_op_on_partial_ord)] // !(x > 0) deliberately rejects NaN

//! Ground states of Berestycki–Lions type elliptic problems by
//! constrained minimization over the Pohozaev set.
//!
//! The energy I = Σᵢ ψᵢ − Φ is built from functionals with exact power
//! scaling under the dilation u_t(x) = u(x/t). The Pohozaev operator
//! K = Σ λᵢψᵢ − λ_Φ Φ cuts the natural constraint set; every admissible
//! state has a unique fiber maximizer t* with K(u_{t*}) = 0, and the
//! ground state is found by projecting onto that set, descending the
//! projected energy with a preconditioned line search, and periodically
//! applying the Schwartz symmetrization (which never raises the
//! projected energy).
//!
//! Shipped problem families:
//! * sums of fractional Laplacians Σᵢ(−Δ)^{sᵢ}u + u = f(u) via Fourier
//!   symbols on periodic boxes,
//! * anisotropic pseudo-p-Laplacians −Σᵢ∂ᵢ(|∂ᵢu|^{pᵢ−2}∂ᵢu) + |u|^{p₁−2}u
//!   = f(u),
//! * the classical −Δu + u = f(u) on radial grids, with smooth or
//!   discontinuous f (solved through a mollification schedule and checked
//!   against the differential inclusion).
//!
//! Validation lives next to the machinery: an independent radial
//! shooting oracle for the classical family, and a hypothesis harness
//! that samples the abstract scaling/cone conditions for any built
//! family.
//!
//! With the default `parallel` feature, sample sweeps and large pointwise
//! maps run on rayon; all floating-point reductions stay sequential, so
//! results are bit-identical for any thread count.

pub mod error;
pub mod grid;
pub mod hypotheses;
pub(crate) mod par;
pub mod problems;
pub mod sampler;
pub mod solver;
pub mod variational;

pub use error::{Error, Result};
pub use grid::{
    anisotropic_energy, dirichlet_energy, fractional_seminorm, quad, symmetrize, BoxGrid, Grid,
    GridFunction, RadialGrid,
};
pub use problems::{
    build_family, inclusion_check, mollify, validate_nonlinearity, NonlinearitySpec,
    ProblemFamily, ProblemInstance,
};
pub use solver::{
    el_residual, initial_guess, minimize, shooting_oracle, solve_discontinuous, SolveReport,
    SolverOptions,
};
pub use variational::{
    eval_k, fiber, pohozaev_identity_check, project_to_pohozaev, DilationAction, FiberProfile,
    FunctionalFamily, PohozaevState, Tolerances,
};
