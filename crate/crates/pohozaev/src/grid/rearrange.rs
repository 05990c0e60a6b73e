//! Schwartz symmetrization on sampled grids.
//!
//! The decreasing rearrangement of u⁺ is built by sorting sample values
//! in descending order against cumulative cell volumes, which is exactly
//! equimeasurable at cell resolution. The radial output samples the
//! piecewise-linear reconstruction (breakpoints at the volume mass
//! centers of the sorted cells) at the mass centers of its own cells, so
//! a nonnegative radial nonincreasing input is reproduced exactly.

use super::{unit_sphere_area, Grid, GridFunction, RadialGrid};
use crate::error::{Error, Result};

/// Monotone piecewise-linear evaluation of (xs strictly increasing,
/// ys nonincreasing) at q, clamped at the ends. Exact on breakpoint hits.
fn interp_decreasing(xs: &[f64], ys: &[f64], q: f64) -> f64 {
    if q <= xs[0] {
        return ys[0];
    }
    if q >= *xs.last().unwrap() {
        return *ys.last().unwrap();
    }
    match xs.binary_search_by(|x| x.partial_cmp(&q).unwrap()) {
        Ok(j) => ys[j],
        Err(j) => {
            let s = (q - xs[j - 1]) / (xs[j] - xs[j - 1]);
            ys[j - 1] * (1.0 - s) + ys[j] * s
        }
    }
}

/// Radially symmetric decreasing rearrangement of u⁺ = max(u, 0).
///
/// Box inputs land on a radial grid whose shells are exactly the sorted
/// input cells (radii at the volume mass centers), so every quadrature
/// Σ w G(q) agrees with Σ w G(u⁺) to rounding. Radial inputs keep their
/// own grid: the sorted profile is read back at the nodes' volume mass
/// centers through its monotone piecewise-linear reconstruction, which
/// reproduces a nonincreasing input exactly. The output carries the
/// monotone flag.
pub fn symmetrize(u: &GridFunction) -> Result<GridFunction> {
    let n = u.len();
    let positive: Vec<f64> = u.values().iter().map(|&v| v.max(0.0)).collect();
    let weights = u.grid().weights_vec();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| positive[b].partial_cmp(&positive[a]).unwrap());

    match u.grid() {
        // exact representation: shells are the sorted cells
        Grid::Box(_) => decreasing_rearrangement_cells(u),
        Grid::Radial(g) => {
            // breakpoints of the rearranged profile in the enclosed-volume
            // coordinate: sorted value k sits at the mass center of its cell
            let mut xs = Vec::with_capacity(n);
            let mut ys = Vec::with_capacity(n);
            let mut cum = 0.0;
            for &i in &order {
                let w = weights[i];
                xs.push(cum + 0.5 * w);
                ys.push(positive[i]);
                cum += w;
            }
            let ow = g.weights();
            let mut q = Vec::with_capacity(ow.len());
            let mut c = 0.0;
            for &w in ow {
                q.push(interp_decreasing(&xs, &ys, c + 0.5 * w));
                c += w;
            }
            // guard against rounding bumps; a no-op for exact constructions
            for j in 1..q.len() {
                if q[j] > q[j - 1] {
                    q[j] = q[j - 1];
                }
            }
            let mut out = GridFunction::new(Grid::Radial(g.clone()), q)?;
            out.set_monotone(true);
            Ok(out)
        }
    }
}

/// The decreasing rearrangement of u⁺ in its exact cell representation:
/// a radial function whose shells are the sorted input cells, so every
/// quadrature Σ w G(·) agrees with the input's to rounding, for any
/// input grid kind.
pub fn decreasing_rearrangement_cells(u: &GridFunction) -> Result<GridFunction> {
    let n = u.len();
    let positive: Vec<f64> = u.values().iter().map(|&v| v.max(0.0)).collect();
    let weights = u.grid().weights_vec();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| positive[b].partial_cmp(&positive[a]).unwrap());

    let dim = u.grid().dim();
    let omega = unit_sphere_area(dim);
    let inv_dim = 1.0 / dim as f64;
    let mut radii = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    let mut ws = Vec::with_capacity(n);
    let mut cum = 0.0;
    for &i in &order {
        let w = weights[i];
        let center = cum + 0.5 * w;
        radii.push((dim as f64 * center / omega).powf(inv_dim));
        ys.push(positive[i]);
        ws.push(w);
        cum += w;
    }
    let grid = RadialGrid::with_weights(dim, radii, ws);
    let mut out = GridFunction::new(Grid::Radial(grid), ys)?;
    out.set_monotone(true);
    Ok(out)
}

/// Measure of the superlevel set {u > c} in the grid's quadrature.
pub fn level_set_volume(u: &GridFunction, c: f64) -> f64 {
    let weights = u.grid().weights_vec();
    let mut total = 0.0;
    for (v, w) in u.values().iter().zip(weights) {
        if *v > c {
            total += w;
        }
    }
    total
}

/// Sample a radial function on a box grid as a function of |x|.
pub fn embed_radial_in_box(u: &GridFunction, target: &super::BoxGrid) -> Result<GridFunction> {
    let g = match u.grid() {
        Grid::Radial(g) => g,
        Grid::Box(_) => {
            return Err(Error::GridMismatch {
                details: "embed_radial_in_box needs a radial input".into(),
            })
        }
    };
    if g.dim() != target.dim() {
        return Err(Error::GridMismatch {
            details: format!(
                "radial dimension {} vs box dimension {}",
                g.dim(),
                target.dim()
            ),
        });
    }
    let radii = g.radii();
    let values = u.values();
    let n = target.len();
    let t = target.clone();
    let out = crate::par::map_indices(n, |flat| {
        super::interp_radial(radii, values, t.radius_of(flat))
    });
    GridFunction::new(Grid::Box(target.clone()), out)
}

/// Rearrangement pipeline for arbitrary grids: symmetrize, and re-embed
/// into the original box when the input lived on one, so the output is
/// comparable with the input under the same functionals.
pub fn symmetrize_to_same_grid(u: &GridFunction) -> Result<GridFunction> {
    let sym = symmetrize(u)?;
    match u.grid() {
        Grid::Radial(_) => Ok(sym),
        Grid::Box(b) => embed_radial_in_box(&sym, b),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{quad, BoxGrid, GridFunction, RadialGrid};

    #[test]
    fn fixes_radial_decreasing_input_exactly() {
        let g = RadialGrid::uniform(3, 10.0, 512);
        let mut u = GridFunction::from_radial_profile(g, |r| (-r * r / 2.0).exp()).unwrap();
        u.set_monotone(true);
        let q = symmetrize(&u).unwrap();
        assert!(q.monotone());
        for (a, b) in u.values().iter().zip(q.values()) {
            assert!(
                (a - b).abs() <= 1e-9 * a.abs().max(1.0),
                "rearrangement moved a fixed point: {a} vs {b}"
            );
        }
    }

    #[test]
    fn two_bump_profile_preserves_distribution_function() {
        let g = RadialGrid::uniform(1, 20.0, 4096);
        let u = GridFunction::from_radial_profile(g, |r| {
            0.8 * (-(r - 3.0) * (r - 3.0)).exp() + (-(r - 8.0) * (r - 8.0) / 2.0).exp()
        })
        .unwrap();
        let q = symmetrize(&u).unwrap();
        let max_cell = u
            .grid()
            .weights_vec()
            .into_iter()
            .fold(0.0_f64, f64::max)
            .max(q.grid().weights_vec().into_iter().fold(0.0_f64, f64::max));
        let peak = u.max_abs();
        for level in 1..=20 {
            let c = peak * level as f64 / 21.0;
            let before = level_set_volume(&u, c);
            let after = level_set_volume(&q, c);
            assert!(
                (before - after).abs() <= 2.0 * max_cell + 1e-12,
                "level {c}: {before} vs {after}"
            );
        }
    }

    #[test]
    fn equimeasurability_of_integrals() {
        // smooth non-monotone radial sample; the same-grid read-back is
        // second order, so a fine grid keeps both integrals within 1e−6
        let g = RadialGrid::uniform(2, 15.0, 16384);
        let u = GridFunction::from_radial_profile(g, |r| {
            (-(r - 2.0) * (r - 2.0) / 4.0).exp() + 0.7 * (-(r - 6.0) * (r - 6.0) / 6.0).exp()
                - 0.2 * (-r * r / 8.0).exp()
        })
        .unwrap();
        let q = symmetrize(&u).unwrap();
        let plus = u.map(|v| v.max(0.0)).unwrap();
        for (name, f) in [
            ("u^2", Box::new(|v: f64| v * v) as Box<dyn Fn(f64) -> f64 + Sync + Send>),
            ("F(u)", Box::new(|v: f64| v.powi(4) / 4.0)),
        ] {
            let a = quad(&plus, &f).unwrap();
            let b = quad(&q, &f).unwrap();
            assert!(
                ((a - b) / a.abs().max(1e-300)).abs() < 1e-6,
                "{name}: {a} vs {b}"
            );
        }
    }

    #[test]
    fn box_input_rearrangement_is_exactly_equimeasurable() {
        let g = BoxGrid::symmetric(2, 6.0, 64);
        let u = GridFunction::from_box_profile(g, |x| {
            (-(x[0] - 1.0) * (x[0] - 1.0) - x[1] * x[1]).exp()
        })
        .unwrap();
        let q = symmetrize(&u).unwrap();
        let out_vol = q.grid().total_volume();
        let in_vol = u.grid().total_volume();
        assert!(((out_vol - in_vol) / in_vol).abs() < 1e-12);
        for f in [|v: f64| v * v, |v: f64| v.powi(4)] {
            let a = quad(&u, f).unwrap();
            let b = quad(&q, f).unwrap();
            assert!(((a - b) / a).abs() < 1e-13, "{a} vs {b}");
        }
    }

    #[test]
    fn negative_part_is_dropped() {
        let g = RadialGrid::uniform(1, 10.0, 256);
        let u = GridFunction::from_radial_profile(g, |r| -1.0 - r).unwrap();
        let q = symmetrize(&u).unwrap();
        assert!(q.values().iter().all(|&v| v == 0.0));
        assert!(q.monotone());
    }

    #[test]
    fn embed_roundtrip_of_radial_profile() {
        let rg = RadialGrid::uniform(2, 14.0, 8192);
        let u = GridFunction::from_radial_profile(rg, |r| (-r * r / 3.0).exp()).unwrap();
        let bg = BoxGrid::symmetric(2, 10.0, 128);
        let e = embed_radial_in_box(&u, &bg).unwrap();
        // center node of the box sits at radius 0
        let center = bg.len() / 2 + 64;
        let r_center = bg.radius_of(center);
        let expected = (-r_center * r_center / 3.0_f64).exp();
        assert!((e.values()[center] - expected).abs() < 1e-6);
    }

    #[test]
    fn ball_volume_helper_consistency() {
        let v = crate::grid::ball_volume(2, 2.0);
        assert!((v - 4.0 * std::f64::consts::PI).abs() < 1e-12);
    }
}
