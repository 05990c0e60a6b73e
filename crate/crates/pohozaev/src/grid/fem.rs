//! Conforming P1 functionals on radial grids.
//!
//! The classical solver family evaluates its energies through these
//! forms: the exact stiffness of piecewise-linear radial functions and
//! per-cell Gauss quadrature of pointwise integrands against the
//! ω_N r^{N−1} measure. With conforming forms, every discrete state
//! carries its true continuum energy, so the infimum of I over the
//! discrete Pohozaev set is bounded below by the continuum one — the
//! node-lumped forms admit under-resolved origin spikes with spuriously
//! small energy, which a constrained descent will happily find.
//!
//! Everything here is exactly covariant under grid dilation: cells,
//! Gauss points and the r^{N−1} weight all scale with the radii.

use super::{unit_sphere_area, Grid, GridFunction, RadialGrid};
use crate::error::{Error, Result};
use crate::par;

/// 4-point Gauss–Legendre rule on [0, 1] (exact through degree 7).
const GAUSS_X: [f64; 4] = [
    0.069_431_844_202_973_71,
    0.330_009_478_207_571_87,
    0.669_990_521_792_428_1,
    0.930_568_155_797_026_3,
];
const GAUSS_W: [f64; 4] = [
    0.173_927_422_568_726_93,
    0.326_072_577_431_273_07,
    0.326_072_577_431_273_07,
    0.173_927_422_568_726_93,
];

fn radial_of(u: &GridFunction) -> Result<&RadialGrid> {
    match u.grid() {
        Grid::Radial(g) => Ok(g),
        Grid::Box(_) => Err(Error::GridMismatch {
            details: "P1 radial forms need a radial grid".into(),
        }),
    }
}

/// Exact P1 edge stiffness κ_i = ω_N (r_{i+1}^N − r_i^N) / (N Δrᵢ²),
/// including the Dirichlet ghost edge past R (last entry).
pub fn radial_p1_stiffness(g: &RadialGrid) -> Vec<f64> {
    let r = g.radii();
    let dim = g.dim() as f64;
    let omega = unit_sphere_area(g.dim());
    let m = r.len() - 1;
    let mut kappa = Vec::with_capacity(m + 1);
    for i in 0..m {
        let dr = r[i + 1] - r[i];
        kappa.push(omega * (r[i + 1].powf(dim) - r[i].powf(dim)) / (dim * dr * dr));
    }
    let dr = r[m] - r[m - 1];
    let ghost = r[m] + dr;
    kappa.push(omega * (ghost.powf(dim) - r[m].powf(dim)) / (dim * dr * dr));
    kappa
}

/// ψ(u) = (1/2) ∫ |u'|² ω_N r^{N−1} dr of the P1 interpolant, with the
/// Dirichlet ghost cell closing the domain.
pub fn radial_p1_dirichlet(u: &GridFunction) -> Result<f64> {
    let g = radial_of(u)?;
    let v = u.values();
    let kappa = radial_p1_stiffness(g);
    let m = v.len() - 1;
    let mut terms = Vec::with_capacity(m + 1);
    for i in 0..m {
        let diff = v[i + 1] - v[i];
        terms.push(0.5 * kappa[i] * diff * diff);
    }
    terms.push(0.5 * kappa[m] * v[m] * v[m]);
    let e = par::pairwise_sum(&terms);
    if !e.is_finite() {
        return Err(Error::NonFiniteValue {
            context: "P1 radial dirichlet energy".into(),
        });
    }
    Ok(e)
}

/// Dual field of [`radial_p1_dirichlet`] for the ⟨·,·⟩_w pairing.
pub fn radial_p1_dirichlet_field(u: &GridFunction) -> Result<Vec<f64>> {
    let g = radial_of(u)?;
    let v = u.values();
    let w = g.weights();
    let kappa = radial_p1_stiffness(g);
    let m = v.len() - 1;
    let mut grad = vec![0.0; v.len()];
    for i in 0..m {
        let diff = v[i + 1] - v[i];
        grad[i] -= kappa[i] * diff;
        grad[i + 1] += kappa[i] * diff;
    }
    grad[m] += kappa[m] * v[m];
    for i in 0..grad.len() {
        grad[i] /= w[i];
    }
    Ok(grad)
}

/// ∫ F(u) ω_N r^{N−1} dr of the P1 interpolant by per-cell Gauss points,
/// including the Dirichlet ghost cell where u falls linearly to zero.
pub fn radial_p1_integral<F: Fn(f64) -> f64 + Sync>(
    u: &GridFunction,
    integrand: F,
) -> Result<f64> {
    let g = radial_of(u)?;
    let r = g.radii();
    let v = u.values();
    let dim = g.dim() as f64;
    let omega = unit_sphere_area(g.dim());
    let m = v.len() - 1;
    let nm1 = dim - 1.0;
    let cell = |a: f64, b: f64, va: f64, vb: f64| -> Result<f64> {
        let dr = b - a;
        let mut acc = 0.0;
        for (x, wq) in GAUSS_X.iter().zip(GAUSS_W) {
            let rq = a + x * dr;
            let uq = va + x * (vb - va);
            let fq = integrand(uq);
            if !fq.is_finite() {
                return Err(Error::NonFiniteValue {
                    context: "P1 cell quadrature".into(),
                });
            }
            acc += wq * fq * rq.powf(nm1);
        }
        Ok(acc * omega * dr)
    };
    // the r = 0 cell and the ghost cell carry the same rule
    let mut total = 0.0;
    for i in 0..m {
        total += cell(r[i], r[i + 1], v[i], v[i + 1])?;
    }
    let dr = r[m] - r[m - 1];
    total += cell(r[m], r[m] + dr, v[m], 0.0)?;
    if r[0] > 0.0 {
        // inner stub of a grid that does not start at the origin
        total += cell(0.0, r[0], v[0], v[0])?;
    }
    Ok(total)
}

/// Load vector of d/du ∫ F(u): L_k = ∫ F'(u) φ_k ω r^{N−1} dr over the
/// P1 hats, returned as a dual field (divided by the node weights).
pub fn radial_p1_load<F: Fn(f64) -> f64 + Sync>(
    u: &GridFunction,
    derivative: F,
) -> Result<Vec<f64>> {
    let g = radial_of(u)?;
    let r = g.radii();
    let v = u.values();
    let w = g.weights();
    let dim = g.dim() as f64;
    let omega = unit_sphere_area(g.dim());
    let m = v.len() - 1;
    let nm1 = dim - 1.0;
    let mut load = vec![0.0; v.len()];
    let mut cell = |a: f64, b: f64, va: f64, vb: f64, ia: Option<usize>, ib: Option<usize>| {
        let dr = b - a;
        let mut la = 0.0;
        let mut lb = 0.0;
        for (x, wq) in GAUSS_X.iter().zip(GAUSS_W) {
            let rq = a + x * dr;
            let uq = va + x * (vb - va);
            let gq = derivative(uq) * rq.powf(nm1);
            la += wq * gq * (1.0 - x);
            lb += wq * gq * x;
        }
        if let Some(i) = ia {
            load[i] += la * omega * dr;
        }
        if let Some(i) = ib {
            load[i] += lb * omega * dr;
        }
    };
    for i in 0..m {
        cell(r[i], r[i + 1], v[i], v[i + 1], Some(i), Some(i + 1));
    }
    let dr = r[m] - r[m - 1];
    cell(r[m], r[m] + dr, v[m], 0.0, Some(m), None);
    if r[0] > 0.0 {
        cell(0.0, r[0], v[0], v[0], Some(0), None);
    }
    for i in 0..load.len() {
        load[i] /= w[i];
    }
    Ok(load)
}
