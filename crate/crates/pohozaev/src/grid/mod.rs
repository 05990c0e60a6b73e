//! Discrete function spaces: radial and box grids with measure weights,
//! quadrature, and sampled functions.
//!
//! Radial grids carry the measure ω_N r^{N−1} dr as exact shell volumes
//! around each node, so the weight sum is the ball volume to machine
//! precision and quadrature of radial profiles is second order (spectrally
//! accurate for smooth even profiles in N = 1, where the shell rule
//! coincides with the trapezoid rule on [−R, R]).
//!
//! Box grids are uniform, symmetric about the origin and treated as
//! periodic (the right endpoint is excluded), which is what the spectral
//! fractional operators expect.

mod deriv;
mod fem;
mod io;
mod rearrange;
mod spectral;

pub use deriv::{
    anisotropic_energy, axis_energy_conservative, axis_energy_dirichlet,
    axis_energy_dirichlet_field, axis_energy_gradient_field, centered_axis_derivative,
    dirichlet_energy, forward_axis_derivative, radial_derivative,
    radial_dirichlet_conservative, radial_dirichlet_gradient_field,
    radial_stiffness_coefficients, reg_abs,
};
pub use fem::{
    radial_p1_dirichlet, radial_p1_dirichlet_field, radial_p1_integral, radial_p1_load,
    radial_p1_stiffness,
};
pub use io::{read_grid_function, write_grid_function};
pub use rearrange::{
    decreasing_rearrangement_cells, embed_radial_in_box, level_set_volume, symmetrize,
    symmetrize_to_same_grid,
};
pub use spectral::{
    apply_multiplier, apply_multiplier_padded, fractional_gradient_field, fractional_seminorm,
    fractional_seminorm_padded, fractional_seminorm_with, symbol_values, FftCache, PaddedLayout,
};

use crate::error::{Error, Result};
use crate::par;

/// Surface area of the unit sphere S^{N−1} in ℝ^N.
///
/// ω_N = 2 π^{N/2} / Γ(N/2); N = 1 gives 2 (two half-lines), N = 2 gives
/// 2π, N = 3 gives 4π.
pub fn unit_sphere_area(dim: usize) -> f64 {
    assert!(dim >= 1, "dimension must be at least 1");
    let n = dim as f64;
    2.0 * std::f64::consts::PI.powf(n / 2.0) / gamma_half_integer(dim)
}

/// Γ(n/2) for integer n ≥ 1 by the recursion Γ(x+1) = x Γ(x).
fn gamma_half_integer(n: usize) -> f64 {
    let even = n.is_multiple_of(2);
    let mut x = if even { 1.0 } else { std::f64::consts::PI.sqrt() };
    let mut k = if even { 2 } else { 1 };
    while k < n {
        x *= k as f64 / 2.0;
        k += 2;
    }
    x
}

/// Volume of the ball of radius `r` in ℝ^N.
pub fn ball_volume(dim: usize, r: f64) -> f64 {
    unit_sphere_area(dim) * r.powi(dim as i32) / dim as f64
}

/// Radial grid on [0, R]: nodes r_0 = 0 < … < r_M = R with quadrature
/// weights equal to the exact volume of the shell around each node.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    dim: usize,
    radii: Vec<f64>,
    weights: Vec<f64>,
}

impl RadialGrid {
    /// Uniform grid with `m` intervals (m + 1 nodes) on [0, r_max].
    pub fn uniform(dim: usize, r_max: f64, m: usize) -> Self {
        assert!(m >= 2, "radial grid needs at least 2 intervals");
        assert!(r_max > 0.0);
        let dr = r_max / m as f64;
        let radii: Vec<f64> = (0..=m).map(|i| i as f64 * dr).collect();
        Self::from_radii(dim, radii)
    }

    /// Grid from explicit strictly increasing radii starting at 0.
    ///
    /// Node i owns the shell between the midpoints to its neighbours;
    /// the first and last shells are clipped at 0 and R, so the weights
    /// sum exactly to |B_R|.
    pub fn from_radii(dim: usize, radii: Vec<f64>) -> Self {
        assert!(radii.len() >= 3, "radial grid needs at least 3 nodes");
        assert!(radii[0] == 0.0, "radial grid must start at r = 0");
        assert!(
            radii.windows(2).all(|w| w[1] > w[0]),
            "radii must be strictly increasing"
        );
        let omega = unit_sphere_area(dim);
        let n = dim as f64;
        let vol = |r: f64| omega * r.powf(n) / n;
        let m = radii.len() - 1;
        let mut weights = Vec::with_capacity(radii.len());
        let mut lower = 0.0;
        for i in 0..=m {
            let upper = if i == m {
                vol(radii[m])
            } else {
                vol(0.5 * (radii[i] + radii[i + 1]))
            };
            weights.push(upper - lower);
            lower = upper;
        }
        Self { dim, radii, weights }
    }

    /// Grid with explicit shell weights (used by the rearrangement, whose
    /// cells must match the sorted input cells exactly). Radii need not
    /// start at zero and may be nonuniform.
    pub fn with_weights(dim: usize, radii: Vec<f64>, weights: Vec<f64>) -> Self {
        assert_eq!(radii.len(), weights.len());
        assert!(radii.len() >= 3, "radial grid needs at least 3 nodes");
        assert!(
            radii.windows(2).all(|w| w[1] > w[0]),
            "radii must be strictly increasing"
        );
        assert!(weights.iter().all(|&w| w > 0.0), "weights must be positive");
        Self { dim, radii, weights }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn r_max(&self) -> f64 {
        *self.radii.last().unwrap()
    }

    /// Node spacing; radial operators assume uniform grids.
    pub fn dr(&self) -> f64 {
        self.radii[1] - self.radii[0]
    }

    /// Grid dilated by t: radii scale by t, shell volumes by t^N.
    pub fn dilated(&self, t: f64) -> Self {
        let tn = t.powf(self.dim as f64);
        Self {
            dim: self.dim,
            radii: self.radii.iter().map(|&r| t * r).collect(),
            weights: self.weights.iter().map(|&w| tn * w).collect(),
        }
    }
}

/// Uniform symmetric box grid on Π [−L_j, L_j), periodic for spectral use.
///
/// Axis j has `points[j]` nodes x_k = (k − M_j/2) h_j; the half extent is
/// derived as L_j = h_j M_j / 2 so spacing is the single source of truth.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxGrid {
    points: Vec<usize>,
    spacing: Vec<f64>,
    periodic: bool,
}

impl BoxGrid {
    /// Symmetric box [−half_extent, half_extent)^N with `m` nodes per axis.
    pub fn symmetric(dim: usize, half_extent: f64, m: usize) -> Self {
        assert!(dim >= 1);
        assert!(m >= 4 && m.is_multiple_of(2), "box grids need an even node count >= 4");
        assert!(half_extent > 0.0);
        let h = 2.0 * half_extent / m as f64;
        Self {
            points: vec![m; dim],
            spacing: vec![h; dim],
            periodic: true,
        }
    }

    /// Box with explicit per-axis node counts and spacings.
    pub fn with_spacing(points: Vec<usize>, spacing: Vec<f64>) -> Self {
        assert_eq!(points.len(), spacing.len());
        assert!(!points.is_empty());
        assert!(points.iter().all(|&m| m >= 4 && m.is_multiple_of(2)));
        assert!(spacing.iter().all(|&h| h > 0.0 && h.is_finite()));
        Self { points, spacing, periodic: true }
    }

    pub fn dim(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[usize] {
        &self.points
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn periodic(&self) -> bool {
        self.periodic
    }

    pub fn len(&self) -> usize {
        self.points.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn half_extent(&self, axis: usize) -> f64 {
        self.spacing[axis] * self.points[axis] as f64 / 2.0
    }

    /// Volume of one cell, Π h_j.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.iter().product()
    }

    /// Coordinate of node index k along `axis`.
    pub fn coord(&self, axis: usize, k: usize) -> f64 {
        (k as f64 - self.points[axis] as f64 / 2.0) * self.spacing[axis]
    }

    /// Row-major strides for the flattened value vector.
    pub fn strides(&self) -> Vec<usize> {
        let mut s = vec![1usize; self.points.len()];
        for i in (0..self.points.len().saturating_sub(1)).rev() {
            s[i] = s[i + 1] * self.points[i + 1];
        }
        s
    }

    /// Multi-index of flat index `flat`.
    pub fn unflatten(&self, mut flat: usize) -> Vec<usize> {
        let strides = self.strides();
        let mut idx = vec![0usize; self.points.len()];
        for (i, &s) in strides.iter().enumerate() {
            idx[i] = flat / s;
            flat %= s;
        }
        idx
    }

    /// |x| of the node at flat index `flat`.
    pub fn radius_of(&self, flat: usize) -> f64 {
        let idx = self.unflatten(flat);
        let mut r2 = 0.0;
        for (axis, &k) in idx.iter().enumerate() {
            let x = self.coord(axis, k);
            r2 += x * x;
        }
        r2.sqrt()
    }

    pub fn dilated(&self, t: f64) -> Self {
        Self {
            points: self.points.clone(),
            spacing: self.spacing.iter().map(|&h| t * h).collect(),
            periodic: self.periodic,
        }
    }
}

/// Either grid kind.
#[derive(Debug, Clone, PartialEq)]
pub enum Grid {
    Radial(RadialGrid),
    Box(BoxGrid),
}

impl Grid {
    pub fn dim(&self) -> usize {
        match self {
            Grid::Radial(g) => g.dim(),
            Grid::Box(g) => g.dim(),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Grid::Radial(g) => g.len(),
            Grid::Box(g) => g.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Quadrature weight of node `i`.
    pub fn weight(&self, i: usize) -> f64 {
        match self {
            Grid::Radial(g) => g.weights()[i],
            Grid::Box(g) => {
                let _ = i;
                g.cell_volume()
            }
        }
    }

    /// All quadrature weights, materialized.
    pub fn weights_vec(&self) -> Vec<f64> {
        match self {
            Grid::Radial(g) => g.weights().to_vec(),
            Grid::Box(g) => vec![g.cell_volume(); g.len()],
        }
    }

    /// Total measure of the truncated domain.
    pub fn total_volume(&self) -> f64 {
        match self {
            Grid::Radial(g) => par::pairwise_sum(g.weights()),
            Grid::Box(g) => g.cell_volume() * g.len() as f64,
        }
    }

    pub fn dilated(&self, t: f64) -> Self {
        match self {
            Grid::Radial(g) => Grid::Radial(g.dilated(t)),
            Grid::Box(g) => Grid::Box(g.dilated(t)),
        }
    }
}

/// A sampled function on a grid.
///
/// `monotone` marks membership in the radial cone X^r (nonnegative,
/// nonincreasing in radius); it is set by the symmetrization and checked
/// by `assert_monotone`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
    monotone: bool,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch {
                details: format!(
                    "{} values for a grid with {} nodes",
                    values.len(),
                    grid.len()
                ),
            });
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFiniteValue {
                context: "grid function values".into(),
            });
        }
        Ok(Self { grid, values, monotone: false })
    }

    pub fn zeros(grid: Grid) -> Self {
        let n = grid.len();
        Self { grid, values: vec![0.0; n], monotone: true }
    }

    /// Sample a radial profile f(r) on a radial grid.
    pub fn from_radial_profile<F: Fn(f64) -> f64>(grid: RadialGrid, f: F) -> Result<Self> {
        let values: Vec<f64> = grid.radii().iter().map(|&r| f(r)).collect();
        Self::new(Grid::Radial(grid), values)
    }

    /// Sample a pointwise function of the coordinates on a box grid.
    pub fn from_box_profile<F: Fn(&[f64]) -> f64 + Sync>(grid: BoxGrid, f: F) -> Result<Self> {
        let n = grid.len();
        let g = &grid;
        let values = par::map_indices(n, |flat| {
            let idx = g.unflatten(flat);
            let x: Vec<f64> = idx
                .iter()
                .enumerate()
                .map(|(axis, &k)| g.coord(axis, k))
                .collect();
            f(&x)
        });
        Self::new(Grid::Box(grid), values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        self.monotone = false;
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn monotone(&self) -> bool {
        self.monotone
    }

    pub fn set_monotone(&mut self, flag: bool) {
        if flag {
            debug_assert!(self.check_monotone(), "monotone flag on a non-monotone function");
        }
        self.monotone = flag;
    }

    /// True when the function is nonnegative and nonincreasing in radius.
    pub fn check_monotone(&self) -> bool {
        match &self.grid {
            Grid::Radial(_) => {
                self.values.iter().all(|&v| v >= 0.0)
                    && self.values.windows(2).all(|w| w[1] <= w[0] + 1e-14 * w[0].abs().max(1e-300))
            }
            Grid::Box(_) => false,
        }
    }

    /// Pointwise map, preserving the grid. Errors if the image is non-finite.
    pub fn map<F: Fn(f64) -> f64 + Sync + Send>(&self, f: F) -> Result<Self> {
        let values = par::map_values(&self.values, f);
        Self::new(self.grid.clone(), values)
    }

    /// Pointwise linear combination a·self + b·other on a shared grid.
    pub fn axpy(&self, a: f64, other: &GridFunction, b: f64) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch {
                details: "axpy on different grids".into(),
            });
        }
        let values: Vec<f64> = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&x, &y)| a * x + b * y)
            .collect();
        Self::new(self.grid.clone(), values)
    }

    pub fn scale_values(&self, a: f64) -> Result<Self> {
        self.map(|v| a * v)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, &v| m.max(v.abs()))
    }

    /// Weighted L² norm √(Σ wᵢ uᵢ²).
    pub fn l2_w(&self) -> f64 {
        match &self.grid {
            Grid::Radial(g) => {
                par::pairwise_dot3(g.weights(), &self.values, &self.values).sqrt()
            }
            Grid::Box(g) => {
                // uniform weights: cell volume factored out of the sum
                let mut acc = 0.0;
                for chunk in self.values.chunks(1 << 12) {
                    let mut local = 0.0;
                    for &v in chunk {
                        local += v * v;
                    }
                    acc += local;
                }
                (acc * g.cell_volume()).sqrt()
            }
        }
    }

    /// Weighted inner product Σ wᵢ uᵢ vᵢ.
    pub fn inner_w(&self, other: &GridFunction) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch {
                details: "inner product on different grids".into(),
            });
        }
        Ok(match &self.grid {
            Grid::Radial(g) => par::pairwise_dot3(g.weights(), &self.values, &other.values),
            Grid::Box(g) => {
                let w = g.cell_volume();
                let mut acc = 0.0;
                for chunk_pair in self
                    .values
                    .chunks(1 << 12)
                    .zip(other.values.chunks(1 << 12))
                {
                    let mut local = 0.0;
                    for (&a, &b) in chunk_pair.0.iter().zip(chunk_pair.1) {
                        local += a * b;
                    }
                    acc += local;
                }
                acc * w
            }
        })
    }
}

/// Quadrature of `integrand(u(x))` with the grid's measure weights.
pub fn quad<F: Fn(f64) -> f64 + Sync + Send>(u: &GridFunction, integrand: F) -> Result<f64> {
    let mapped = par::map_values(u.values(), &integrand);
    if !mapped.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFiniteValue {
            context: "quadrature integrand".into(),
        });
    }
    Ok(match u.grid() {
        Grid::Radial(g) => {
            let w = g.weights();
            fn rec(w: &[f64], m: &[f64]) -> f64 {
                if w.len() <= 32 {
                    let mut s = 0.0;
                    for i in 0..w.len() {
                        s += w[i] * m[i];
                    }
                    return s;
                }
                let mid = w.len() / 2;
                rec(&w[..mid], &m[..mid]) + rec(&w[mid..], &m[mid..])
            }
            rec(w, &mapped)
        }
        Grid::Box(g) => g.cell_volume() * par::pairwise_sum(&mapped),
    })
}

/// Linear interpolation of a radial function at radius `r` (clamped).
pub fn interp_radial(radii: &[f64], values: &[f64], r: f64) -> f64 {
    if r <= radii[0] {
        return values[0];
    }
    if r >= *radii.last().unwrap() {
        return *values.last().unwrap();
    }
    let j = match radii.binary_search_by(|x| x.partial_cmp(&r).unwrap()) {
        Ok(j) => return values[j],
        Err(j) => j,
    };
    let (r0, r1) = (radii[j - 1], radii[j]);
    let s = (r - r0) / (r1 - r0);
    values[j - 1] * (1.0 - s) + values[j] * s
}

/// Multilinear interpolation of a box-grid function at a point, clamped
/// to the domain.
pub fn interp_box(u: &GridFunction, x: &[f64]) -> f64 {
    let g = match u.grid() {
        Grid::Box(g) => g,
        Grid::Radial(_) => panic!("interp_box needs a box grid"),
    };
    let dim = g.dim();
    assert_eq!(x.len(), dim);
    let strides = g.strides();
    let mut base = vec![0usize; dim];
    let mut frac = vec![0.0f64; dim];
    for axis in 0..dim {
        let m = g.points()[axis];
        let h = g.spacing()[axis];
        // continuous index of x along the axis
        let s = x[axis] / h + m as f64 / 2.0;
        let clamped = s.clamp(0.0, (m - 1) as f64);
        let k = (clamped.floor() as usize).min(m - 2);
        base[axis] = k;
        frac[axis] = clamped - k as f64;
    }
    let mut acc = 0.0;
    for corner in 0..(1usize << dim) {
        let mut w = 1.0;
        let mut flat = 0usize;
        for axis in 0..dim {
            let hi = (corner >> axis) & 1 == 1;
            w *= if hi { frac[axis] } else { 1.0 - frac[axis] };
            flat += (base[axis] + usize::from(hi)) * strides[axis];
        }
        acc += w * u.values()[flat];
    }
    acc
}

/// Resample a radial function onto another radial grid by linear
/// interpolation in radius.
pub fn resample_radial(u: &GridFunction, target: &RadialGrid) -> Result<GridFunction> {
    let g = match u.grid() {
        Grid::Radial(g) => g,
        Grid::Box(_) => {
            return Err(Error::GridMismatch {
                details: "resample_radial needs a radial input".into(),
            })
        }
    };
    let vals: Vec<f64> = target
        .radii()
        .iter()
        .map(|&r| interp_radial(g.radii(), u.values(), r))
        .collect();
    let mono = u.monotone();
    let mut out = GridFunction::new(Grid::Radial(target.clone()), vals)?;
    if mono {
        out.set_monotone(true);
    }
    Ok(out)
}
