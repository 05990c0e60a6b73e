//! The three built-in problem families, instantiated as functional
//! families over grid functions:
//!
//! * fractional sum: Σᵢ (−Δ)^{sᵢ} u + u = f(u) on ℝ^N, ψᵢ the halved
//!   spectral seminorms, λᵢ = N − 2sᵢ;
//! * anisotropic: −Σᵢ ∂ᵢ(|∂ᵢu|^{pᵢ−2}∂ᵢu) + |u|^{p₁−2}u = f(u),
//!   ψᵢ = (1/pᵢ)∫|∂ᵢu|^{pᵢ}, λᵢ = N − pᵢ;
//! * classical: −Δu + u = f(u) with a smooth or discontinuous f,
//!   ψ = (1/2)∫|∇u|², λ = N − 2.
//!
//! In each case λ_Φ = N and Φ(u) = ∫F(u) − (1/p₀)∫|u|^{p₀} with the
//! family's absorption exponent p₀.

mod nonlinearity;

pub use nonlinearity::{
    inclusion_check, integrate_with_jumps, mollify, validate_nonlinearity, ConditionReport,
    GrowthBounds, MollifiedNonlinearity, NonlinearityReport, NonlinearitySpec, PiecewisePoly,
    PointwiseFn,
};

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{
    apply_multiplier_padded, axis_energy_dirichlet,
    axis_energy_dirichlet_field, fractional_seminorm_padded, quad, radial_p1_dirichlet,
    radial_p1_dirichlet_field, radial_p1_integral, radial_p1_load, symbol_values, BoxGrid,
    FftCache, Grid, GridFunction, PaddedLayout, RadialGrid,
};
use crate::variational::{EvalFn, FunctionalFamily, GradFn};

/// Which of the three shipped problems an instance describes.
#[derive(Debug, Clone, PartialEq)]
pub enum ProblemFamily {
    /// Sum of fractional Laplacians of orders 0 < s₁ ≤ … ≤ sₙ < 1.
    FractionalSum { s: Vec<f64>, dim: usize },
    /// Anisotropic pseudo-p-Laplacian with per-axis exponents p₁ ≤ … ≤ p_N.
    Anisotropic { p: Vec<f64>, dim: usize },
    /// Classical Laplacian, N ≥ 3.
    Classical { dim: usize },
}

/// Grid geometry of an instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridKind {
    Radial,
    Box,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridTemplate {
    pub kind: GridKind,
    /// Radius of the radial grid, or half extent of the box.
    pub extent: f64,
    /// Intervals of the radial grid, or nodes per box axis.
    pub points: usize,
}

/// A fully specified problem: family, nonlinearity and grid.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub family: ProblemFamily,
    pub nonlinearity: NonlinearitySpec,
    pub grid: GridTemplate,
}

impl ProblemInstance {
    /// Classical benchmark: N = 3, f(s) = s³, radial grid R = 20, M = 4096.
    pub fn classical_cubic() -> Self {
        Self {
            family: ProblemFamily::Classical { dim: 3 },
            nonlinearity: NonlinearitySpec::cubic(),
            grid: GridTemplate { kind: GridKind::Radial, extent: 20.0, points: 4096 },
        }
    }

    /// Fractional benchmark in one dimension with f(s) = s^{2.2}.
    pub fn fractional_1d(s: Vec<f64>) -> Self {
        Self {
            family: ProblemFamily::FractionalSum { s, dim: 1 },
            nonlinearity: NonlinearitySpec::power(2.2),
            grid: GridTemplate { kind: GridKind::Box, extent: 20.0, points: 2048 },
        }
    }

    /// Anisotropic benchmark in two dimensions with f(s) = s³.
    pub fn anisotropic_2d(p: Vec<f64>) -> Self {
        Self {
            family: ProblemFamily::Anisotropic { p, dim: 2 },
            nonlinearity: NonlinearitySpec::cubic(),
            grid: GridTemplate { kind: GridKind::Box, extent: 10.0, points: 256 },
        }
    }

    /// Discontinuous benchmark: classical N = 3 with a cubic-plus-jump f.
    pub fn classical_cubic_jump(a: f64, height: f64) -> Self {
        Self {
            family: ProblemFamily::Classical { dim: 3 },
            nonlinearity: NonlinearitySpec::cubic_jump(a, height),
            grid: GridTemplate { kind: GridKind::Radial, extent: 20.0, points: 4096 },
        }
    }

    pub fn dim(&self) -> usize {
        match &self.family {
            ProblemFamily::FractionalSum { dim, .. } => *dim,
            ProblemFamily::Anisotropic { dim, .. } => *dim,
            ProblemFamily::Classical { dim } => *dim,
        }
    }

    /// Exponent of the absorption term in Φ: 2 except for the anisotropic
    /// family, which uses p₁.
    pub fn absorption_exponent(&self) -> f64 {
        match &self.family {
            ProblemFamily::Anisotropic { p, .. } => p[0],
            _ => 2.0,
        }
    }

    /// Critical exponent of the family: 2*_{sₙ}, p*, or 2*.
    pub fn critical_exponent(&self) -> f64 {
        let n = self.dim() as f64;
        match &self.family {
            ProblemFamily::FractionalSum { s, .. } => {
                let sn = *s.last().unwrap();
                2.0 * n / (n - 2.0 * sn)
            }
            ProblemFamily::Anisotropic { p, .. } => {
                let inv_sum: f64 = p.iter().map(|pi| 1.0 / pi).sum();
                n / (inv_sum - 1.0)
            }
            ProblemFamily::Classical { .. } => 2.0 * n / (n - 2.0),
        }
    }

    /// Scaling exponents λ₁…λₙ of the quadratic-part functionals.
    pub fn lambdas(&self) -> Vec<f64> {
        let n = self.dim() as f64;
        match &self.family {
            ProblemFamily::FractionalSum { s, .. } => {
                s.iter().map(|si| n - 2.0 * si).collect()
            }
            ProblemFamily::Anisotropic { p, .. } => p.iter().map(|pi| n - pi).collect(),
            ProblemFamily::Classical { .. } => vec![n - 2.0],
        }
    }

    /// λ_Φ = N for all three families.
    pub fn lambda_phi(&self) -> f64 {
        self.dim() as f64
    }

    /// Check exponent admissibility and grid compatibility.
    pub fn validate(&self) -> Result<()> {
        let n = self.dim();
        let q = self.nonlinearity.growth().q;
        match &self.family {
            ProblemFamily::FractionalSum { s, dim } => {
                if s.is_empty() {
                    return Err(Error::NonadmissibleExponents {
                        details: "fractional family needs at least one order".into(),
                    });
                }
                if !s.windows(2).all(|w| w[0] <= w[1]) {
                    return Err(Error::NonadmissibleExponents {
                        details: "fractional orders must be ascending".into(),
                    });
                }
                if s.iter().any(|&si| !(0.0 < si && si < 1.0)) {
                    return Err(Error::NonadmissibleExponents {
                        details: "fractional orders must lie in (0, 1)".into(),
                    });
                }
                let sn = *s.last().unwrap();
                if *dim as f64 <= 2.0 * sn {
                    return Err(Error::NonadmissibleExponents {
                        details: format!("need N > 2 s_n, got N = {dim}, s_n = {sn}"),
                    });
                }
                let q_max = self.critical_exponent() - 1.0;
                if !(q > 1.0 && q < q_max) {
                    return Err(Error::NonadmissibleExponents {
                        details: format!(
                            "growth exponent q = {q} outside (1, 2*_s - 1) = (1, {q_max})"
                        ),
                    });
                }
                if self.grid.kind != GridKind::Box {
                    return Err(Error::NonadmissibleExponents {
                        details: "fractional family needs a box grid".into(),
                    });
                }
            }
            ProblemFamily::Anisotropic { p, dim } => {
                if p.len() != *dim {
                    return Err(Error::NonadmissibleExponents {
                        details: format!("{} exponents for dimension {dim}", p.len()),
                    });
                }
                if !p.windows(2).all(|w| w[0] <= w[1]) {
                    return Err(Error::NonadmissibleExponents {
                        details: "anisotropic exponents must be ascending".into(),
                    });
                }
                if !(p[0] > 1.0 && *p.last().unwrap() < *dim as f64) {
                    return Err(Error::NonadmissibleExponents {
                        details: format!(
                            "need 1 < p_1 <= … <= p_N < N, got p = {p:?}, N = {dim}"
                        ),
                    });
                }
                let p_star = self.critical_exponent();
                if !(q > p[0] && q < p_star) {
                    return Err(Error::NonadmissibleExponents {
                        details: format!(
                            "growth exponent q = {q} outside (p_1, p*) = ({}, {p_star})",
                            p[0]
                        ),
                    });
                }
                if self.grid.kind != GridKind::Box {
                    return Err(Error::NonadmissibleExponents {
                        details: "anisotropic family needs a box grid".into(),
                    });
                }
            }
            ProblemFamily::Classical { dim } => {
                if *dim < 3 {
                    return Err(Error::NonadmissibleExponents {
                        details: format!(
                            "classical family needs N >= 3 so that lambda = N - 2 > 0, got N = {dim}"
                        ),
                    });
                }
                let q_max = self.critical_exponent() - 1.0;
                if !(q > 1.0 && q < q_max) {
                    return Err(Error::NonadmissibleExponents {
                        details: format!(
                            "growth exponent q = {q} outside (1, 2* - 1) = (1, {q_max})"
                        ),
                    });
                }
                if self.grid.kind != GridKind::Radial {
                    return Err(Error::NonadmissibleExponents {
                        details: "classical family needs a radial grid".into(),
                    });
                }
            }
        }
        let _ = n;
        if !(self.grid.extent > 0.0) || self.grid.points < 8 {
            return Err(Error::NonadmissibleExponents {
                details: "grid template needs a positive extent and at least 8 points".into(),
            });
        }
        Ok(())
    }

    /// Materialize the grid template.
    pub fn build_grid(&self) -> Grid {
        match self.grid.kind {
            GridKind::Radial => {
                Grid::Radial(RadialGrid::uniform(self.dim(), self.grid.extent, self.grid.points))
            }
            GridKind::Box => {
                Grid::Box(BoxGrid::symmetric(self.dim(), self.grid.extent, self.grid.points))
            }
        }
    }

    /// One-line echo for reports.
    pub fn description(&self) -> String {
        let grid = match self.grid.kind {
            GridKind::Radial => format!("radial R={} M={}", self.grid.extent, self.grid.points),
            GridKind::Box => format!("box L={} M={}", self.grid.extent, self.grid.points),
        };
        match &self.family {
            ProblemFamily::FractionalSum { s, dim } => format!(
                "fractional N={dim} s={s:?} f={} {grid}",
                self.nonlinearity.name()
            ),
            ProblemFamily::Anisotropic { p, dim } => format!(
                "anisotropic N={dim} p={p:?} f={} {grid}",
                self.nonlinearity.name()
            ),
            ProblemFamily::Classical { dim } => {
                format!("classical N={dim} f={} {grid}", self.nonlinearity.name())
            }
        }
    }

    /// The instance with a different nonlinearity (used by mollification).
    pub fn with_nonlinearity(&self, spec: NonlinearitySpec) -> Self {
        Self {
            family: self.family.clone(),
            nonlinearity: spec,
            grid: self.grid.clone(),
        }
    }
}

fn expect_box(u: &GridFunction) -> Result<&BoxGrid> {
    match u.grid() {
        Grid::Box(b) => Ok(b),
        Grid::Radial(_) => Err(Error::GridMismatch {
            details: "this family evaluates on box grids".into(),
        }),
    }
}

/// Gradient-regularization width for anisotropic exponents below 2.
///
/// Small enough that the regularized energies keep the dilation power
/// laws to well under 1e−6 relative; |s|^{p−1} is continuous at 0 for
/// p > 1, so the width only smooths the secant curvature.
pub const ANISO_DELTA_DEFAULT: f64 = 1e-10;
/// Width after late-stage annealing.
pub const ANISO_DELTA_FINE: f64 = 1e-12;

/// Build the functional family of an instance.
///
/// Exponents are λᵢ = N − 2sᵢ (fractional), N − pᵢ (anisotropic) or N − 2
/// (classical) with λ_Φ = N; gradient hooks and the ambient-norm hook are
/// installed for all three families.
pub fn build_family(inst: &ProblemInstance) -> Result<FunctionalFamily> {
    build_family_with_delta(inst, ANISO_DELTA_DEFAULT)
}

/// As [`build_family`] with an explicit anisotropic regularization width.
pub fn build_family_with_delta(inst: &ProblemInstance, delta: f64) -> Result<FunctionalFamily> {
    inst.validate()?;
    let n = inst.dim() as f64;
    let spec = inst.nonlinearity.clone();
    match &inst.family {
        ProblemFamily::FractionalSum { s, .. } => {
            // seminorms act through the zero-extension on a doubled box:
            // the zero-exterior truncation of the whole-space operator.
            // On the bare torus the constant mode is free and the
            // constrained descent escapes through flattening profiles.
            let template = match inst.build_grid() {
                Grid::Box(b) => b,
                _ => unreachable!(),
            };
            let layout = Arc::new(PaddedLayout::new(&template, 2));
            let cache = Arc::new(FftCache::new(&layout.padded_grid(&template)));
            let padded_semi = {
                let layout = layout.clone();
                let cache = cache.clone();
                move |b: &BoxGrid, values: &[f64], si: f64| -> Result<f64> {
                    let padded = layout.padded_grid(b);
                    if cache.matches(&padded) {
                        fractional_seminorm_padded(&cache, &layout, b, values, si)
                    } else {
                        let local = FftCache::new(&padded);
                        fractional_seminorm_padded(&local, &layout, b, values, si)
                    }
                }
            };
            let mut builder = FunctionalFamily::builder();
            for &si in s {
                let semi = padded_semi.clone();
                let eval: EvalFn = Arc::new(move |u: &GridFunction| {
                    let b = expect_box(u)?;
                    semi(b, u.values(), si).map(|v| 0.5 * v)
                });
                let l_grad = layout.clone();
                let c_grad = cache.clone();
                let grad: GradFn = Arc::new(move |u: &GridFunction| {
                    let b = expect_box(u)?;
                    let padded = l_grad.padded_grid(b);
                    let symbol = symbol_values(&padded, |xi| {
                        let xi2: f64 = xi.iter().map(|&x| x * x).sum();
                        xi2.powf(si)
                    });
                    let field = if c_grad.matches(&padded) {
                        apply_multiplier_padded(&c_grad, &l_grad, b, u.values(), &symbol)
                    } else {
                        let local = FftCache::new(&padded);
                        apply_multiplier_padded(&local, &l_grad, b, u.values(), &symbol)
                    };
                    GridFunction::new(u.grid().clone(), field)
                });
                builder = builder.term_with_grad(n - 2.0 * si, eval, grad);
            }
            let spec_phi = spec.clone();
            let phi: EvalFn = Arc::new(move |u: &GridFunction| {
                let f_part = quad(u, |v| spec_phi.primitive(v))?;
                let mass = quad(u, |v| v * v)?;
                Ok(f_part - 0.5 * mass)
            });
            let spec_grad = spec.clone();
            let phi_grad: GradFn =
                Arc::new(move |u: &GridFunction| u.map(|v| spec_grad.f(v) - v));
            let s_top = *s.last().unwrap();
            let norm_semi = padded_semi.clone();
            let norm: EvalFn = Arc::new(move |u: &GridFunction| {
                let b = expect_box(u)?;
                let semi = norm_semi(b, u.values(), s_top)?;
                Ok((u.l2_w().powi(2) + semi).sqrt())
            });
            builder
                .phi(n, phi)
                .phi_grad(phi_grad)
                .space_norm(norm)
                .build()
        }
        ProblemFamily::Anisotropic { p, .. } => {
            // forward differences closed with zero ghosts at the box
            // edges; the periodic wrap would leave the constant mode free
            let mut builder = FunctionalFamily::builder();
            for (axis, &pi) in p.iter().enumerate() {
                let di = if pi < 2.0 { delta } else { 0.0 };
                let eval: EvalFn = Arc::new(move |u: &GridFunction| {
                    axis_energy_dirichlet(u, axis, pi, di)
                });
                let grad: GradFn = Arc::new(move |u: &GridFunction| {
                    let field = axis_energy_dirichlet_field(u, axis, pi, di)?;
                    GridFunction::new(u.grid().clone(), field)
                });
                builder = builder.term_with_grad(n - pi, eval, grad);
            }
            let p1 = p[0];
            let spec_phi = spec.clone();
            let phi: EvalFn = Arc::new(move |u: &GridFunction| {
                let f_part = quad(u, |v| spec_phi.primitive(v))?;
                let absorb = quad(u, |v| v.abs().powf(p1))?;
                Ok(f_part - absorb / p1)
            });
            let spec_grad = spec.clone();
            let phi_grad: GradFn = Arc::new(move |u: &GridFunction| {
                // |v|^{p−2} v written as sign(v)|v|^{p−1}: finite at v = 0
                let s = spec_grad.clone();
                u.map(move |v| s.f(v) - v.signum() * v.abs().powf(p1 - 1.0))
            });
            let p_norm = p.clone();
            let norm: EvalFn = Arc::new(move |u: &GridFunction| {
                let mass = quad(u, |v| v.abs().powf(p_norm[0]))?.powf(1.0 / p_norm[0]);
                let mut total = mass;
                for (axis, &pi) in p_norm.iter().enumerate() {
                    let e = axis_energy_dirichlet(u, axis, pi, 0.0)?;
                    total += (pi * e).powf(1.0 / pi);
                }
                Ok(total)
            });
            builder
                .phi(n, phi)
                .phi_grad(phi_grad)
                .space_norm(norm)
                .build()
        }
        ProblemFamily::Classical { .. } => {
            // conforming P1 forms: every discrete state carries its true
            // continuum energy, which keeps the discrete Pohozaev
            // infimum above the continuum one (node-lumped forms admit
            // under-resolved origin spikes with fake low energy)
            let eval: EvalFn = Arc::new(radial_p1_dirichlet);
            let grad: GradFn = Arc::new(|u: &GridFunction| {
                let field = radial_p1_dirichlet_field(u)?;
                GridFunction::new(u.grid().clone(), field)
            });
            let spec_phi = spec.clone();
            let phi: EvalFn = Arc::new(move |u: &GridFunction| {
                radial_p1_integral(u, |v| spec_phi.primitive(v) - 0.5 * v * v)
            });
            let spec_grad = spec.clone();
            let phi_grad: GradFn = Arc::new(move |u: &GridFunction| {
                let field = radial_p1_load(u, |v| spec_grad.f(v) - v)?;
                GridFunction::new(u.grid().clone(), field)
            });
            let norm: EvalFn = Arc::new(|u: &GridFunction| {
                let e = radial_p1_dirichlet(u)?;
                let mass = radial_p1_integral(u, |v| v * v)?;
                Ok((mass + 2.0 * e).sqrt())
            });
            FunctionalFamily::builder()
                .term_with_grad(n - 2.0, eval, grad)
                .phi(n, phi)
                .phi_grad(phi_grad)
                .space_norm(norm)
                .build()
        }
    }
}
