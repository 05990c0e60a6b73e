//! Property tests for the structural invariants: projection uniqueness
//! and idempotence, rearrangement equimeasurability, serialization
//! round trips.

use proptest::prelude::*;
use std::sync::Arc;

use pohozaev::grid::{
    decreasing_rearrangement_cells, level_set_volume, quad, read_grid_function,
    write_grid_function, Grid, GridFunction, RadialGrid,
};
use pohozaev::variational::{DilationAction, EvalFn, FunctionalFamily, Tolerances};
use pohozaev::{project_to_pohozaev, ProblemInstance};

fn abstract_family(lambdas: Vec<f64>, psis: Vec<f64>, lambda_phi: f64, phi: f64) -> FunctionalFamily {
    let mut b = FunctionalFamily::builder();
    for (lam, val) in lambdas.into_iter().zip(psis) {
        let eval: EvalFn = Arc::new(move |_: &GridFunction| Ok(val));
        b = b.term(lam, eval);
    }
    b.phi(lambda_phi, Arc::new(move |_: &GridFunction| Ok(phi)))
        .build()
        .unwrap()
}

fn any_state() -> GridFunction {
    let g = RadialGrid::uniform(1, 4.0, 32);
    GridFunction::from_radial_profile(g, |r| (-r).exp()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// The fiber root exists, is unique (single sign change of K), and
    /// the projected point dominates the fiber. Coefficient ranges keep
    /// t* inside the solver's bracket window [2^-60, 2^60]; draws outside
    /// it are the documented BracketNotFound regime.
    #[test]
    fn fiber_root_unique_and_dominant(
        lambdas in prop::collection::vec(0.05f64..2.0, 1..4),
        psis in prop::collection::vec(0.1f64..10.0, 4),
        extra in 0.3f64..2.0,
        phi in 0.1f64..10.0,
    ) {
        let n = lambdas.len();
        let lambda_phi = lambdas.iter().cloned().fold(f64::MIN, f64::max) + extra;
        let fam = abstract_family(lambdas, psis[..n].to_vec(), lambda_phi, phi);
        let u = any_state();
        let coeff = fam.fiber_coefficients(&u).unwrap();
        let t_star = coeff.t_star(1e-12).unwrap();
        prop_assert!(t_star > 0.0);
        // single sign change over a wide log grid
        let mut prev = 0i8;
        let mut changes = 0;
        for i in 0..600 {
            let t = 10f64.powf(-3.0 + 6.0 * i as f64 / 599.0);
            let k = coeff.k(t);
            let sign = if k > 0.0 { 1 } else if k < 0.0 { -1 } else { 0 };
            if sign != 0 {
                if prev != 0 && sign != prev { changes += 1; }
                prev = sign;
            }
            prop_assert!(coeff.h(t) <= coeff.h(t_star) * (1.0 + 1e-10) + 1e-10);
        }
        prop_assert_eq!(changes, 1);
    }

    /// Projection is idempotent in t: re-projecting the projected state
    /// returns t* = 1.
    #[test]
    fn projection_idempotent(
        lam in 0.1f64..1.9,
        psi in 0.05f64..5.0,
        extra in 0.1f64..2.0,
        phi in 0.05f64..5.0,
    ) {
        // honest scaling family over the cached coefficients
        let lambda_phi = lam + extra;
        let g = RadialGrid::uniform(1, 4.0, 32);
        let base = GridFunction::from_radial_profile(g, |r| (-r * r).exp()).unwrap();
        let base_l2 = base.l2_w();
        // ψ(u) scales like t^lam when evaluated on the dilated grid
        let psi_eval: EvalFn = {
            let b = base_l2;
            Arc::new(move |u: &GridFunction| {
                let scale = u.grid().total_volume() / 8.0; // |B_4| in 1-D = 8
                Ok(psi * scale.powf(lam) * (u.l2_w() / (b * scale.sqrt())).powi(2))
            })
        };
        let phi_eval: EvalFn = {
            let b = base_l2;
            Arc::new(move |u: &GridFunction| {
                let scale = u.grid().total_volume() / 8.0;
                Ok(phi * scale.powf(lambda_phi) * (u.l2_w() / (b * scale.sqrt())).powi(2))
            })
        };
        let fam = FunctionalFamily::builder()
            .term(lam, psi_eval)
            .phi(lambda_phi, phi_eval)
            .build()
            .unwrap();
        let tols = Tolerances::default();
        let (t1, state) = project_to_pohozaev(&fam, &base, &tols).unwrap();
        prop_assert!(t1 > 0.0);
        let (t2, _) = project_to_pohozaev(&fam, &state.u, &tols).unwrap();
        prop_assert!((t2 - 1.0).abs() < 1e-10, "re-projection t* = {}", t2);
    }

    /// The rearrangement's exact cell representation preserves every
    /// power integral and superlevel volume, and is monotone.
    #[test]
    fn rearrangement_preserves_measures(
        values in prop::collection::vec(-3.0f64..5.0, 66),
        p in 1.2f64..4.0,
    ) {
        let g = RadialGrid::uniform(2, 5.0, 65);
        let u = GridFunction::new(Grid::Radial(g), values).unwrap();
        let cells = decreasing_rearrangement_cells(&u).unwrap();
        prop_assert!(cells.monotone());
        let plus = u.map(|v| v.max(0.0)).unwrap();
        let a = quad(&plus, |v| v.powf(p).abs()).unwrap();
        let b = quad(&cells, |v| v.powf(p).abs()).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        for c in [0.1, 1.0, 2.5] {
            let va = level_set_volume(&plus, c);
            let vb = level_set_volume(&cells, c);
            prop_assert!((va - vb).abs() <= 1e-12 * va.max(1.0));
        }
    }

    /// Grid-function CSV round trips are bit-exact.
    #[test]
    fn grid_csv_roundtrip(values in prop::collection::vec(-1e12f64..1e12, 33)) {
        let g = RadialGrid::uniform(3, 7.5, 32);
        let u = GridFunction::new(Grid::Radial(g), values).unwrap();
        let mut buf = Vec::new();
        write_grid_function(&u, &mut buf).unwrap();
        let back = read_grid_function(&buf[..]).unwrap();
        prop_assert_eq!(u.values(), back.values());
        prop_assert_eq!(u.grid(), back.grid());
    }

    /// Dilation power laws hold for the real classical family on any t.
    #[test]
    fn scaling_law_random_t(t in 0.05f64..8.0) {
        let mut inst = ProblemInstance::classical_cubic();
        inst.grid.points = 256;
        let fam = pohozaev::build_family(&inst).unwrap();
        let grid = match inst.build_grid() {
            Grid::Radial(g) => g,
            _ => unreachable!(),
        };
        let u = GridFunction::from_radial_profile(grid, |r| 2.0 * (-r * r / 3.0).exp()).unwrap();
        let act = DilationAction;
        let ut = act.apply(t, &u);
        let psi = fam.psi(0, &u).unwrap();
        let psi_t = fam.psi(0, &ut).unwrap();
        prop_assert!((psi_t - t.powf(1.0) * psi).abs() <= 1e-10 * psi.abs().max(1e-300) * t.max(1.0));
        let phi = fam.phi(&u).unwrap();
        let phi_t = fam.phi(&ut).unwrap();
        prop_assert!((phi_t - t.powi(3) * phi).abs() <= 1e-10 * phi.abs().max(1e-300) * t.powi(3).max(1.0));
    }
}
