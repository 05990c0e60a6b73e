//! Fourier-symbol machinery on periodic box grids: the fractional
//! seminorm ∫ |ξ|^{2s} |û|² dξ with Plancherel-consistent normalization,
//! multiplier application for gradient fields and preconditioners.
//!
//! With the unnormalized DFT c_k of the samples, the discretization is
//!   ∫ |ξ|^{2s} |û|² dξ ≈ (Πh / ΠM) Σ_k |ξ_k|^{2s} |c_k|²,
//! which reduces to Σ u² Πh at s = 0 (discrete Plancherel) and scales
//! exactly as t^{N−2s} under grid dilation.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftDirection, FftPlanner};

use super::{BoxGrid, Grid, GridFunction};
use crate::error::{Error, Result};
use crate::par;

/// Planned 1-D transforms for every axis of a box layout.
///
/// Plans depend only on the per-axis point counts, so one cache serves a
/// grid and all its dilates. Plans are Send + Sync; a cache is built once
/// per family or operation and confined to that task.
pub struct FftCache {
    points: Vec<usize>,
    strides: Vec<usize>,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
}

impl FftCache {
    pub fn new(grid: &BoxGrid) -> Self {
        let mut planner = FftPlanner::new();
        let forward = grid
            .points()
            .iter()
            .map(|&m| planner.plan_fft(m, FftDirection::Forward))
            .collect();
        let inverse = grid
            .points()
            .iter()
            .map(|&m| planner.plan_fft(m, FftDirection::Inverse))
            .collect();
        Self {
            points: grid.points().to_vec(),
            strides: grid.strides(),
            forward,
            inverse,
        }
    }

    /// True when `grid` has the point layout this cache was planned for.
    pub fn matches(&self, grid: &BoxGrid) -> bool {
        self.points == grid.points()
    }

    fn len(&self) -> usize {
        self.points.iter().product()
    }

    fn transform_axis(&self, data: &mut [Complex<f64>], axis: usize, dir: FftDirection) {
        let m = self.points[axis];
        let stride = self.strides[axis];
        let n = data.len();
        let n_lines = n / m;
        let plan = match dir {
            FftDirection::Forward => &self.forward[axis],
            FftDirection::Inverse => &self.inverse[axis],
        };
        // Gather each line along the axis into a scratch buffer, transform,
        // scatter back. Lines are independent.
        let lines: Vec<Vec<Complex<f64>>> = par::map_indices(n_lines, |line| {
            let base = (line / stride) * stride * m + (line % stride);
            let mut buf: Vec<Complex<f64>> = (0..m).map(|j| data[base + j * stride]).collect();
            plan.process(&mut buf);
            buf
        });
        for (line, buf) in lines.into_iter().enumerate() {
            let base = (line / stride) * stride * m + (line % stride);
            for (j, v) in buf.into_iter().enumerate() {
                data[base + j * stride] = v;
            }
        }
    }

    /// Unnormalized N-D DFT of real samples.
    pub fn forward(&self, values: &[f64]) -> Vec<Complex<f64>> {
        assert_eq!(values.len(), self.len(), "sample count does not match plan");
        let mut data: Vec<Complex<f64>> =
            values.iter().map(|&v| Complex::new(v, 0.0)).collect();
        for axis in 0..self.points.len() {
            self.transform_axis(&mut data, axis, FftDirection::Forward);
        }
        data
    }

    /// Inverse N-D DFT with 1/ΠM normalization, real part.
    pub fn inverse_real(&self, mut spectrum: Vec<Complex<f64>>) -> Vec<f64> {
        for axis in 0..self.points.len() {
            self.transform_axis(&mut spectrum, axis, FftDirection::Inverse);
        }
        let scale = 1.0 / self.len() as f64;
        spectrum.into_iter().map(|c| c.re * scale).collect()
    }
}

/// Signed frequency index: k̃ ∈ [−M/2, M/2).
#[inline]
fn signed_index(k: usize, m: usize) -> i64 {
    if k < m / 2 {
        k as i64
    } else {
        k as i64 - m as i64
    }
}

/// Frequency vector ξ of the node at `flat` (2π k̃ / (M h) per axis).
fn frequency(grid: &BoxGrid, flat: usize) -> Vec<f64> {
    let idx = grid.unflatten(flat);
    idx.iter()
        .enumerate()
        .map(|(axis, &k)| {
            let m = grid.points()[axis];
            let h = grid.spacing()[axis];
            2.0 * std::f64::consts::PI * signed_index(k, m) as f64 / (m as f64 * h)
        })
        .collect()
}

/// Precomputed symbol values m(ξ) on the frequency lattice of `grid`.
pub fn symbol_values<F: Fn(&[f64]) -> f64 + Sync + Send>(grid: &BoxGrid, f: F) -> Vec<f64> {
    par::map_indices(grid.len(), |flat| f(&frequency(grid, flat)))
}

/// Fraction of the Nyquist range used by the node at `flat`
/// (max over axes of |k̃| / (M/2)).
fn nyquist_fraction(grid: &BoxGrid, flat: usize) -> f64 {
    let idx = grid.unflatten(flat);
    idx.iter()
        .enumerate()
        .map(|(axis, &k)| {
            let m = grid.points()[axis];
            signed_index(k, m).unsigned_abs() as f64 / (m as f64 / 2.0)
        })
        .fold(0.0, f64::max)
}

/// ∫ |ξ|^{2s} |û|² dξ on a box grid (this is 2 ψ_s in the convention that
/// omits the normalization constant of the singular-integral form).
///
/// Errors with GridTooCoarse when the top third of the spectrum carries
/// more than 1% of the value (aliasing guard).
pub fn fractional_seminorm(u: &GridFunction, s: f64) -> Result<f64> {
    let grid = match u.grid() {
        Grid::Box(g) => g,
        Grid::Radial(_) => {
            return Err(Error::GridMismatch {
                details: "fractional seminorm needs a box grid (embed radial inputs first)".into(),
            })
        }
    };
    assert!((0.0..1.0).contains(&s), "fractional order must lie in [0, 1)");
    let cache = FftCache::new(grid);
    fractional_seminorm_with(&cache, grid, u.values(), s)
}

/// Seminorm with a caller-owned transform cache (hot path for families).
pub fn fractional_seminorm_with(
    cache: &FftCache,
    grid: &BoxGrid,
    values: &[f64],
    s: f64,
) -> Result<f64> {
    let spectrum = cache.forward(values);
    let norm = grid.cell_volume() / grid.len() as f64;
    let contributions: Vec<f64> = par::map_indices(spectrum.len(), |flat| {
        let xi = frequency(grid, flat);
        let xi2: f64 = xi.iter().map(|&x| x * x).sum();
        let c = spectrum[flat];
        norm * xi2.powf(s) * (c.re * c.re + c.im * c.im)
    });
    let total = par::pairwise_sum(&contributions);
    if !total.is_finite() {
        return Err(Error::NonFiniteValue {
            context: "fractional seminorm".into(),
        });
    }
    if total > 0.0 {
        let top: Vec<f64> = par::map_indices(contributions.len(), |flat| {
            if nyquist_fraction(grid, flat) > 2.0 / 3.0 {
                contributions[flat]
            } else {
                0.0
            }
        });
        let top_share = par::pairwise_sum(&top) / total;
        if top_share > 0.01 {
            return Err(Error::GridTooCoarse {
                details: format!(
                    "top third of the spectrum carries {:.2}% of the s = {s} seminorm",
                    100.0 * top_share
                ),
            });
        }
    }
    Ok(total)
}

/// Apply a Fourier multiplier: real(IDFT(m ⊙ DFT(u))).
///
/// With m = |ξ|^{2s} this is the dual field of ψ_s(u) = (1/2)∫|ξ|^{2s}|û|²
/// for the quadrature pairing; with m = 1/(1 + symbol) it is a
/// preconditioner solve.
pub fn apply_multiplier(cache: &FftCache, values: &[f64], symbol: &[f64]) -> Vec<f64> {
    let mut spectrum = cache.forward(values);
    for (c, &m) in spectrum.iter_mut().zip(symbol) {
        *c *= m;
    }
    cache.inverse_real(spectrum)
}

/// Zero-extension layout: the box grid embedded centrally in a box
/// enlarged by an integer factor per axis, values zero outside.
///
/// The solver families evaluate their seminorms on this layout: it
/// realizes the zero-exterior truncation of the whole-space operator, so
/// a profile spreading toward a constant pays the edge cost instead of
/// slipping into the free constant mode of the torus.
pub struct PaddedLayout {
    factor: usize,
    inner: Vec<usize>,
}

impl PaddedLayout {
    pub fn new(grid: &BoxGrid, factor: usize) -> Self {
        assert!(factor >= 1);
        Self { factor, inner: grid.points().to_vec() }
    }

    /// The enlarged grid matching `grid`'s spacing.
    pub fn padded_grid(&self, grid: &BoxGrid) -> BoxGrid {
        BoxGrid::with_spacing(
            grid.points().iter().map(|&m| m * self.factor).collect(),
            grid.spacing().to_vec(),
        )
    }

    /// Scatter box samples into the center of the padded lattice.
    pub fn extend(&self, grid: &BoxGrid, values: &[f64]) -> Vec<f64> {
        let dim = grid.dim();
        let padded_points: Vec<usize> =
            self.inner.iter().map(|&m| m * self.factor).collect();
        let mut padded_strides = vec![1usize; dim];
        for i in (0..dim.saturating_sub(1)).rev() {
            padded_strides[i] = padded_strides[i + 1] * padded_points[i + 1];
        }
        let total: usize = padded_points.iter().product();
        let mut out = vec![0.0; total];
        let strides = grid.strides();
        for (flat, &v) in values.iter().enumerate() {
            let mut rem = flat;
            let mut target = 0usize;
            for axis in 0..dim {
                let k = rem / strides[axis];
                rem %= strides[axis];
                let offset = (padded_points[axis] - self.inner[axis]) / 2;
                target += (k + offset) * padded_strides[axis];
            }
            out[target] = v;
        }
        out
    }

    /// Gather the center of the padded lattice back onto the box.
    pub fn restrict(&self, grid: &BoxGrid, padded: &[f64]) -> Vec<f64> {
        let dim = grid.dim();
        let padded_points: Vec<usize> =
            self.inner.iter().map(|&m| m * self.factor).collect();
        let mut padded_strides = vec![1usize; dim];
        for i in (0..dim.saturating_sub(1)).rev() {
            padded_strides[i] = padded_strides[i + 1] * padded_points[i + 1];
        }
        let strides = grid.strides();
        let n: usize = self.inner.iter().product();
        (0..n)
            .map(|flat| {
                let mut rem = flat;
                let mut source = 0usize;
                for axis in 0..dim {
                    let k = rem / strides[axis];
                    rem %= strides[axis];
                    let offset = (padded_points[axis] - self.inner[axis]) / 2;
                    source += (k + offset) * padded_strides[axis];
                }
                padded[source]
            })
            .collect()
    }
}

/// Seminorm of the zero-extended samples on the padded lattice.
pub fn fractional_seminorm_padded(
    cache: &FftCache,
    layout: &PaddedLayout,
    grid: &BoxGrid,
    values: &[f64],
    s: f64,
) -> Result<f64> {
    let padded_grid = layout.padded_grid(grid);
    let extended = layout.extend(grid, values);
    fractional_seminorm_with(cache, &padded_grid, &extended, s)
}

/// Multiplier applied through the zero-extension: restrict(IDFT(m · DFT(extend(u)))).
pub fn apply_multiplier_padded(
    cache: &FftCache,
    layout: &PaddedLayout,
    grid: &BoxGrid,
    values: &[f64],
    symbol: &[f64],
) -> Vec<f64> {
    let extended = layout.extend(grid, values);
    let full = apply_multiplier(cache, &extended, symbol);
    layout.restrict(grid, &full)
}

/// Dual field of ψ_s(u) = (1/2) ∫ |ξ|^{2s} |û|² dξ.
pub fn fractional_gradient_field(u: &GridFunction, s: f64) -> Result<Vec<f64>> {
    let grid = match u.grid() {
        Grid::Box(g) => g,
        Grid::Radial(_) => {
            return Err(Error::GridMismatch {
                details: "fractional gradient needs a box grid".into(),
            })
        }
    };
    let cache = FftCache::new(grid);
    let symbol = symbol_values(grid, |xi| {
        let xi2: f64 = xi.iter().map(|&x| x * x).sum();
        xi2.powf(s)
    });
    Ok(apply_multiplier(&cache, u.values(), &symbol))
}
