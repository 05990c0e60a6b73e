//! Acceptance suite: one test per criterion, each printing a pass line
//! with its measured margins (visible with `--nocapture`). Tolerances
//! are pinned in the assertions.

use pohozaev::grid::{
    decreasing_rearrangement_cells, dirichlet_energy, fractional_seminorm, quad, symmetrize,
    symmetrize_to_same_grid, Grid, GridFunction, RadialGrid,
};
use pohozaev::sampler::{SampleConfig, Sampler};
use pohozaev::solver::{residual_field, Preconditioner};
use pohozaev::variational::{eval_k, DilationAction, Tolerances};
use pohozaev::{
    build_family, initial_guess, minimize, pohozaev_identity_check, project_to_pohozaev,
    shooting_oracle, solve_discontinuous, Error, NonlinearitySpec, ProblemInstance, SolverOptions,
};

fn default_families() -> Vec<(&'static str, ProblemInstance)> {
    vec![
        ("classical", ProblemInstance::classical_cubic()),
        ("fractional", ProblemInstance::fractional_1d(vec![0.2, 0.4])),
        ("anisotropic", ProblemInstance::anisotropic_2d(vec![1.6, 1.9])),
    ]
}

fn sample_cfg(inst: &ProblemInstance) -> SampleConfig {
    SampleConfig::for_extent(inst.grid.extent)
}

/// Criterion 1: ψᵢ(u_t) = t^{λᵢ}ψᵢ(u) and Φ(u_t) = t^{λ_Φ}Φ(u) to 1e−6
/// on 200 seeded samples × 4 dilation factors per family, and the
/// closed-form fiber evaluation matches direct dilation to 1e−8.
#[test]
fn criterion_01_scaling_law_suite() {
    let act = DilationAction;
    let factors = [0.5, 1.0, 2.0, 3.7];
    for (name, inst) in default_families() {
        let fam = build_family(&inst).unwrap();
        let grid = inst.build_grid();
        let mut sampler = Sampler::new(101);
        let cfg = sample_cfg(&inst);
        let lambdas = fam.lambdas();
        let mut worst = 0.0f64;
        for _ in 0..200 {
            let u = sampler.sample_on(&grid, &cfg);
            let psis = fam.psis(&u).unwrap();
            let phi = fam.phi(&u).unwrap();
            for &t in &factors {
                let ut = act.apply(t, &u);
                let psis_t = fam.psis(&ut).unwrap();
                for ((&p, &pt), &lam) in psis.iter().zip(&psis_t).zip(&lambdas) {
                    let expected = t.powf(lam) * p;
                    worst = worst.max((pt - expected).abs() / expected.abs().max(1e-300));
                }
                let phi_t = fam.phi(&ut).unwrap();
                let expected = t.powf(fam.lambda_phi()) * phi;
                worst = worst.max((phi_t - expected).abs() / expected.abs().max(1e-300));
            }
        }
        assert!(worst <= 1e-6, "[1] {name}: scaling error {worst:e}");

        // closed-form fiber values against direct dilation
        let mut worst_fiber = 0.0f64;
        for _ in 0..20 {
            let u = sampler.admissible_for(&fam, &grid, &cfg).unwrap();
            let coeff = fam.fiber_coefficients(&u).unwrap();
            for &t in &factors {
                let direct = fam.eval_i(&act.apply(t, &u)).unwrap();
                let closed = coeff.h(t);
                worst_fiber =
                    worst_fiber.max((direct - closed).abs() / direct.abs().max(1e-300));
            }
        }
        assert!(
            worst_fiber <= 1e-8,
            "[1] {name}: fiber expansion error {worst_fiber:e}"
        );
        println!("[1] {name}: scaling {worst:.2e}, fiber expansion {worst_fiber:.2e} — pass");
    }
}

/// Criterion 2: for 100 seeded admissible inputs per family, the located
/// t* has |K(u_{t*})| ≤ 1e−8 relative, h(t*) dominates a 10³-point scan,
/// and K changes sign exactly once along the fiber.
/// Criterion 3: the on-manifold identity gap is ≤ 1e−7 for every state.
#[test]
fn criteria_02_03_projection_suite_and_identity() {
    let tols = Tolerances::default();
    for (name, inst) in default_families() {
        let fam = build_family(&inst).unwrap();
        let grid = inst.build_grid();
        let mut sampler = Sampler::new(202);
        let cfg = sample_cfg(&inst);
        let mut worst_k = 0.0f64;
        let mut worst_gap = 0.0f64;
        for _ in 0..100 {
            let u = sampler.admissible_for(&fam, &grid, &cfg).unwrap();
            let coeff = fam.fiber_coefficients(&u).unwrap();
            let (t_star, state) = project_to_pohozaev(&fam, &u, &tols).unwrap();
            assert!(state.on_manifold);
            let k_rel = coeff.k(t_star).abs() / coeff.k_scale(t_star).max(f64::MIN_POSITIVE);
            worst_k = worst_k.max(k_rel);

            // 10³-point log scan spanning three decades on either side
            // of the located maximizer
            let scan: Vec<f64> = (0..1000)
                .map(|i| t_star * 10f64.powf(-3.0 + 6.0 * i as f64 / 999.0))
                .collect();
            let h_star = coeff.h(t_star);
            let mut sign_changes = 0usize;
            let mut prev_sign = 0i8;
            for &t in &scan {
                assert!(
                    coeff.h(t) <= h_star * (1.0 + 1e-12) + 1e-12,
                    "[2] {name}: h({t}) exceeds h(t*)"
                );
                let k = coeff.k(t);
                let sign = if k > 0.0 {
                    1
                } else if k < 0.0 {
                    -1
                } else {
                    0
                };
                if sign != 0 {
                    if prev_sign != 0 && sign != prev_sign {
                        sign_changes += 1;
                    }
                    prev_sign = sign;
                }
            }
            assert_eq!(sign_changes, 1, "[2] {name}: K sign changes {sign_changes} times");

            let gap = pohozaev_identity_check(&fam, &state).unwrap();
            worst_gap = worst_gap.max(gap);
        }
        assert!(worst_k <= 1e-8, "[2] {name}: |K| relative {worst_k:e}");
        assert!(worst_gap <= 1e-7, "[3] {name}: identity gap {worst_gap:e}");
        println!("[2][3] {name}: |K|rel {worst_k:.2e}, identity gap {worst_gap:.2e} — pass");
    }
}

/// Criterion 4: the classical N = 3 cubic ground-state energy matches the
/// radial shooting oracle within 0.5% at the default grid (R = 20,
/// M = 4096), and the discrepancy shrinks at least 2× when M doubles.
#[test]
fn criterion_04_classical_oracle_equivalence() {
    let oracle = shooting_oracle(3, &NonlinearitySpec::cubic()).unwrap();
    // frozen oracle values (independent radial integration)
    assert!((oracle.u0 - 4.337_387_68).abs() < 1e-4, "oracle u0 {}", oracle.u0);
    assert!(
        (oracle.energy - 18.897_251_3).abs() < 1e-4,
        "oracle energy {}",
        oracle.energy
    );
    assert!(oracle.pohozaev_residual(3) < 1e-4);

    let mut gaps = Vec::new();
    for m in [4096usize, 8192] {
        let mut inst = ProblemInstance::classical_cubic();
        inst.grid.points = m;
        let fam = build_family(&inst).unwrap();
        let grid = inst.build_grid();
        let u0 = initial_guess(&inst, &grid).unwrap();
        let report = minimize(&inst, &fam, &u0, &SolverOptions::default()).unwrap();
        assert!(report.converged(), "M = {m} did not converge");
        assert!(report.el_residual <= 1e-6);
        let gap = (report.energy - oracle.energy).abs() / oracle.energy;
        gaps.push(gap);
    }
    assert!(gaps[0] <= 5e-3, "[4] gap at M=4096: {:e}", gaps[0]);
    assert!(
        gaps[0] / gaps[1] >= 2.0,
        "[4] doubling shrink {:.2} < 2 (gaps {:e} -> {:e})",
        gaps[0] / gaps[1],
        gaps[0],
        gaps[1]
    );
    println!(
        "[4] classical vs oracle: gap {:.2e} -> {:.2e} (shrink {:.2}) — pass",
        gaps[0],
        gaps[1],
        gaps[0] / gaps[1]
    );
}

/// Criterion 5: fractional N = 1, s₁ = s₂ = s ∈ {0.2, 0.3, 0.4}: the
/// final iterate satisfies the independently assembled doubled-single-
/// operator Euler–Lagrange residual ≤ 1e−5 in the dual norm; the energy
/// is positive and stable to 1e−3 relative under grid doubling.
#[test]
fn criterion_05_fractional_consistency() {
    use pohozaev::grid::{apply_multiplier_padded, symbol_values, FftCache, PaddedLayout};
    for s in [0.2, 0.3, 0.4] {
        let opts = SolverOptions { tol_el: 5e-6, ..SolverOptions::default() };
        let mut energies = Vec::new();
        for m in [2048usize, 4096] {
            let mut inst = ProblemInstance::fractional_1d(vec![s, s]);
            inst.grid.points = m;
            let fam = build_family(&inst).unwrap();
            let grid = inst.build_grid();
            let u0 = initial_guess(&inst, &grid).unwrap();
            let report = minimize(&inst, &fam, &u0, &opts).unwrap();
            assert!(report.converged(), "s = {s}, M = {m} did not converge");
            assert!(report.energy > 0.0);
            energies.push(report.energy);

            if m == 2048 {
                // independent assembly of 2(−Δ)^s u + u − f(u)
                let u = &report.u;
                let b = match u.grid() {
                    Grid::Box(b) => b.clone(),
                    _ => unreachable!(),
                };
                let layout = PaddedLayout::new(&b, 2);
                let padded = layout.padded_grid(&b);
                let cache = FftCache::new(&padded);
                let symbol = symbol_values(&padded, |xi| (xi[0] * xi[0]).powf(s));
                let frac = apply_multiplier_padded(&cache, &layout, &b, u.values(), &symbol);
                let spec = inst.nonlinearity.clone();
                let res: Vec<f64> = frac
                    .iter()
                    .zip(u.values())
                    .map(|(&lap, &v)| 2.0 * lap + v - spec.f(v))
                    .collect();
                let pre = Preconditioner::build(&inst).unwrap();
                let dual = pre.dual_norm(u.grid(), &res, 1.0).unwrap();
                assert!(dual <= 1e-5, "[5] s = {s}: doubled-operator residual {dual:e}");
                println!("[5] s = {s}: doubled-operator residual {dual:.2e}");
            }
        }
        let stability = (energies[0] - energies[1]).abs() / energies[0];
        assert!(
            stability <= 1e-3,
            "[5] s = {s}: energy moved {stability:e} under doubling"
        );
        println!(
            "[5] s = {s}: energy {:.6} stable to {stability:.2e} under doubling — pass",
            energies[1]
        );
    }
}

/// Criterion 6: anisotropic N = 2. With p = (1.7, 1.7) the solution is
/// axis-swap invariant to 1e−6 in sup norm; with p = (1.6, 1.9) the axis
/// energies differ and the Pohozaev residual is ≤ 1e−6.
#[test]
fn criterion_06_anisotropic_symmetry() {
    let opts = SolverOptions { tol_el: 1e-5, ..SolverOptions::default() };

    let inst = ProblemInstance::anisotropic_2d(vec![1.7, 1.7]);
    let fam = build_family(&inst).unwrap();
    let grid = inst.build_grid();
    let u0 = initial_guess(&inst, &grid).unwrap();
    let report = minimize(&inst, &fam, &u0, &opts).unwrap();
    let b = match report.u.grid() {
        Grid::Box(b) => b.clone(),
        _ => unreachable!(),
    };
    let m = b.points()[0];
    let vals = report.u.values();
    let mut swap_dev = 0.0f64;
    for i in 0..m {
        for j in 0..m {
            swap_dev = swap_dev.max((vals[i * m + j] - vals[j * m + i]).abs());
        }
    }
    assert!(report.k_residual <= 1e-6);
    assert!(swap_dev <= 1e-6, "[6] swap deviation {swap_dev:e}");
    println!("[6] p = (1.7, 1.7): swap deviation {swap_dev:.2e} — pass");

    let inst = ProblemInstance::anisotropic_2d(vec![1.6, 1.9]);
    let fam = build_family(&inst).unwrap();
    let grid = inst.build_grid();
    let u0 = initial_guess(&inst, &grid).unwrap();
    let report = minimize(&inst, &fam, &u0, &opts).unwrap();
    let psis = fam.psis(&report.u).unwrap();
    let split = (psis[0] - psis[1]).abs() / psis[0].max(psis[1]);
    assert!(
        split > 1e-2,
        "[6] axis energies unexpectedly equal: {psis:?}"
    );
    assert!(
        report.k_residual <= 1e-6,
        "[6] Pohozaev residual {:e}",
        report.k_residual
    );
    println!(
        "[6] p = (1.6, 1.9): axis energies {:.4}/{:.4}, |K|rel {:.2e} — pass",
        psis[0], psis[1], report.k_residual
    );
}

/// Criterion 7: Pólya–Szegő and equimeasurability on 200 seeded samples
/// per grid family: ψ(Q(u)) ≤ ψ(u)(1 + 1e−6) for the gradient-type
/// energy of each grid kind, and ∫|Q(u)|^p = ∫|u⁺|^p to 1e−6 for
/// p ∈ {2, p₁, q} on the rearrangement's exact cell representation.
#[test]
fn criterion_07_polya_szego_suite() {
    // radial family: Dirichlet energy on a fine radial grid
    {
        let grid = Grid::Radial(RadialGrid::uniform(3, 20.0, 16384));
        let mut sampler = Sampler::new(707);
        let cfg = SampleConfig::for_extent(20.0);
        let mut worst_ps = f64::MIN;
        let mut worst_eq = 0.0f64;
        for _ in 0..200 {
            let u = sampler.sample_on(&grid, &cfg);
            let q = symmetrize(&u).unwrap();
            let e_u = dirichlet_energy(&u).unwrap();
            let e_q = dirichlet_energy(&q).unwrap();
            worst_ps = worst_ps.max((e_q - e_u * (1.0 + 1e-6)) / e_u.max(1e-300));
            worst_eq = worst_eq.max(equimeasurability_gap(&u));
        }
        assert!(worst_ps <= 0.0, "[7] radial: P-S excess {worst_ps:e}");
        assert!(worst_eq <= 1e-6, "[7] radial: equimeasurability {worst_eq:e}");
        println!("[7] radial family: P-S margin {worst_ps:.2e}, equimeasurability {worst_eq:.2e} — pass");
    }
    // box family: fractional seminorm through the embedding pipeline
    {
        let inst = ProblemInstance::fractional_1d(vec![0.3]);
        let grid = inst.build_grid();
        let mut sampler = Sampler::new(708);
        let cfg = SampleConfig::for_extent(20.0);
        let mut worst_ps = f64::MIN;
        let mut worst_eq = 0.0f64;
        for _ in 0..200 {
            let u = sampler.sample_on(&grid, &cfg);
            let q = symmetrize_to_same_grid(&u).unwrap();
            let e_u = fractional_seminorm(&u, 0.3).unwrap();
            let e_q = fractional_seminorm(&q, 0.3).unwrap();
            worst_ps = worst_ps.max((e_q - e_u * (1.0 + 1e-6)) / e_u.max(1e-300));
            worst_eq = worst_eq.max(equimeasurability_gap(&u));
        }
        assert!(worst_ps <= 0.0, "[7] box: P-S excess {worst_ps:e}");
        assert!(worst_eq <= 1e-6, "[7] box: equimeasurability {worst_eq:e}");
        println!("[7] box family: P-S margin {worst_ps:.2e}, equimeasurability {worst_eq:.2e} — pass");
    }
}

/// Relative gap of ∫|Q(u)|^p vs ∫|u⁺|^p over p ∈ {2, 1.6, 3}, with Q in
/// its exact cell representation.
fn equimeasurability_gap(u: &GridFunction) -> f64 {
    let cells = decreasing_rearrangement_cells(u).unwrap();
    let plus = u.map(|v| v.max(0.0)).unwrap();
    let mut worst = 0.0f64;
    for p in [2.0, 1.6, 3.0] {
        let a = quad(&plus, |v| v.abs().powf(p)).unwrap();
        let b = quad(&cells, |v| v.abs().powf(p)).unwrap();
        worst = worst.max((a - b).abs() / a.abs().max(1e-300));
    }
    worst
}

/// Criterion 8: cubic-plus-jump benchmark. The differential-inclusion
/// violation measure at ε = 1e−4 is below 1e−3 of the solution support
/// volume and decreases monotonically along the ε-schedule.
#[test]
fn criterion_08_discontinuous_inclusion() {
    let mut inst = ProblemInstance::classical_cubic_jump(1.0, 1.0);
    // the smallest mollification shell must stay resolvable
    inst.grid.points = 16384;
    let opts = SolverOptions::default();
    let schedule = [1e-1, 1e-2, 1e-3, 1e-4];
    let report = solve_discontinuous(&inst, &schedule, &opts, 1e-3).unwrap();
    let violations: Vec<f64> = report.stages.iter().map(|s| s.violation_measure).collect();
    for w in violations.windows(2) {
        assert!(
            w[1] < w[0],
            "[8] violation did not decrease: {violations:?}"
        );
    }
    let support = pohozaev::grid::level_set_volume(&report.report.u, report.report.u.max_abs() * 1e-8);
    let last = *violations.last().unwrap();
    assert!(
        last <= 1e-3 * support,
        "[8] violation {last:e} vs 1e-3 support {:e}",
        1e-3 * support
    );
    // energies settle along the schedule
    let n = report.stages.len();
    let settle = (report.stages[n - 1].energy - report.stages[n - 2].energy).abs()
        / report.stages[n - 1].energy.abs();
    assert!(settle < 1e-3, "[8] energies not settling: {settle:e}");
    println!(
        "[8] violations {:?} (support 1e-3 = {:.3e}), energy settle {settle:.1e} — pass",
        violations,
        1e-3 * support
    );
}

/// Criterion 9: directional derivatives of I match central finite
/// differences to relative 1e−5 on 20 seeded pairs per smooth family.
#[test]
fn criterion_09_gradient_checks() {
    for (name, inst) in default_families() {
        let fam = build_family(&inst).unwrap();
        let grid = inst.build_grid();
        let mut sampler = Sampler::new(909);
        let cfg = sample_cfg(&inst);
        let mut worst = 0.0f64;
        for _ in 0..20 {
            let u = sampler.admissible_for(&fam, &grid, &cfg).unwrap();
            let v = sampler.sample_on(&grid, &cfg);
            let rho = residual_field(&fam, &u).unwrap();
            let pairing = rho.inner_w(&v).unwrap();
            let eps = 1e-5;
            let up = u.axpy(1.0, &v, eps).unwrap();
            let um = u.axpy(1.0, &v, -eps).unwrap();
            let fd = (fam.eval_i(&up).unwrap() - fam.eval_i(&um).unwrap()) / (2.0 * eps);
            let rel = (pairing - fd).abs() / fd.abs().max(1e-8);
            worst = worst.max(rel);
        }
        assert!(worst <= 1e-5, "[9] {name}: gradient mismatch {worst:e}");
        println!("[9] {name}: worst directional-derivative mismatch {worst:.2e} — pass");
    }
}

/// Criterion 10: hypothesis harness. Classical and fractional families
/// pass every non-surrogate check; a corrupted family (λ list permuted)
/// fails with a witness. The anisotropic family passes every hard check
/// except (X₆), whose failure is itself a documented continuum fact (the
/// euclidean rearrangement equalizes axis energies, so the thin axis's
/// energy strictly increases) and must come with a witness.
#[test]
fn criterion_10_hypothesis_harness() {
    use pohozaev::hypotheses::{check_family, check_instance};

    for (name, inst) in [
        ("classical", ProblemInstance::classical_cubic()),
        ("fractional", ProblemInstance::fractional_1d(vec![0.2, 0.4])),
    ] {
        let report = check_instance(&inst, 1010, 40).unwrap();
        let failures = report.hard_failures();
        assert!(
            failures.is_empty(),
            "[10] {name}: hard failures {:?}",
            failures
        );
        println!("[10] {name}: all hard checks pass ({} entries) — pass", report.entries.len());
    }

    {
        let inst = ProblemInstance::anisotropic_2d(vec![1.6, 1.9]);
        let report = check_instance(&inst, 1010, 40).unwrap();
        let failures = report.hard_failures();
        assert_eq!(
            failures.len(),
            1,
            "[10] anisotropic: expected exactly the X6 defect, got {failures:?}"
        );
        assert!(failures[0].name.starts_with("X6"));
        assert!(
            failures[0].witness.is_some(),
            "[10] anisotropic X6 failure carries no witness"
        );
        println!(
            "[10] anisotropic: hard checks pass except the documented X6 defect \
             (axis-energy equalization), witness: {} — pass",
            failures[0].witness.as_deref().unwrap()
        );
    }

    // corrupted λ list: permute the exponents of the fractional family
    {
        use pohozaev::variational::{EvalFn, FunctionalFamily};
        use std::sync::Arc;
        let mut inst = ProblemInstance::fractional_1d(vec![0.2, 0.4]);
        inst.grid.points = 512;
        let good = build_family(&inst).unwrap();
        let lambdas = good.lambdas();
        let n = good.n_terms();
        let mut builder = FunctionalFamily::builder();
        for i in 0..n {
            let f = good.clone();
            let eval: EvalFn = Arc::new(move |u: &GridFunction| f.psi(i, u));
            builder = builder.term(lambdas[(i + 1) % n], eval);
        }
        let phi_src = good.clone();
        let corrupted = builder
            .phi(good.lambda_phi(), Arc::new(move |u: &GridFunction| phi_src.phi(u)))
            .build()
            .unwrap();
        let report = check_family(&inst, &corrupted, 1010, 10).unwrap();
        let x1 = report
            .entries
            .iter()
            .find(|e| e.name.starts_with("X1"))
            .unwrap();
        assert!(!x1.pass, "[10] corrupted lambdas passed X1");
        assert!(x1.witness.is_some(), "[10] corrupted-family failure carries no witness");
        println!(
            "[10] corrupted lambda list fails X1 with witness: {} — pass",
            x1.witness.as_deref().unwrap()
        );
    }
}

/// The located t* agrees with a dense-scan oracle of the fiber to four
/// significant digits (Gaussian state, single fractional order).
#[test]
fn fiber_maximizer_matches_dense_scan() {
    let inst = ProblemInstance::fractional_1d(vec![0.25]);
    let fam = build_family(&inst).unwrap();
    let grid = match inst.build_grid() {
        Grid::Box(b) => b.clone(),
        _ => unreachable!(),
    };
    let gaussian = GridFunction::from_box_profile(grid, |x| (-x[0] * x[0] / 2.0).exp()).unwrap();
    // amplitude high enough that Φ > 0
    let mut u = gaussian;
    let mut amp = 1.0;
    loop {
        let c = u.scale_values(amp).unwrap();
        if fam.phi(&c).unwrap() > 0.0 {
            u = c;
            break;
        }
        amp *= 1.5;
    }
    let coeff = fam.fiber_coefficients(&u).unwrap();
    let t_star = coeff.t_star(1e-12).unwrap();

    // dense scan over 10⁴ points bracketing the maximizer, refined by a
    // parabolic fit through the top three samples
    let lo = t_star / 10.0;
    let hi = t_star * 10.0;
    let n = 10_000;
    let ts: Vec<f64> = (0..n)
        .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
        .collect();
    let hs: Vec<f64> = ts.iter().map(|&t| coeff.h(t)).collect();
    let (i_max, _) = hs
        .iter()
        .enumerate()
        .fold((0, f64::MIN), |acc, (i, &h)| if h > acc.1 { (i, h) } else { acc });
    let (x0, x1, x2) = (ts[i_max - 1], ts[i_max], ts[i_max + 1]);
    let (y0, y1, y2) = (hs[i_max - 1], hs[i_max], hs[i_max + 1]);
    let denom = (x1 - x0) * (y1 - y2) - (x1 - x2) * (y1 - y0);
    let scan_t = x1
        - 0.5 * ((x1 - x0) * (x1 - x0) * (y1 - y2) - (x1 - x2) * (x1 - x2) * (y1 - y0)) / denom;
    let rel = (scan_t - t_star).abs() / t_star;
    assert!(rel < 5e-5, "dense-scan t* {scan_t} vs root {t_star} (rel {rel:e})");
}

/// Determinism: identical seeds and options give bit-identical energies
/// and iteration counts.
#[test]
fn determinism_of_solves() {
    let inst = ProblemInstance::fractional_1d(vec![0.3, 0.3]);
    let fam = build_family(&inst).unwrap();
    let grid = inst.build_grid();
    let u0 = initial_guess(&inst, &grid).unwrap();
    let opts = SolverOptions { tol_el: 5e-6, ..SolverOptions::default() };
    let a = minimize(&inst, &fam, &u0, &opts).unwrap();
    let b = minimize(&inst, &fam, &u0, &opts).unwrap();
    assert_eq!(a.iterations, b.iterations);
    assert!(a.energy == b.energy, "energies differ: {} vs {}", a.energy, b.energy);
    assert_eq!(a.u.values(), b.u.values());
}

/// Scale invariance of the reported minimum: restarting from a dilated
/// initial guess moves the final energy by less than 1e−3 relative.
#[test]
fn scale_invariance_of_minimum() {
    let inst = ProblemInstance::classical_cubic();
    let fam = build_family(&inst).unwrap();
    let grid = inst.build_grid();
    let u0 = initial_guess(&inst, &grid).unwrap();
    let act = DilationAction;
    let opts = SolverOptions::default();
    let base = minimize(&inst, &fam, &u0, &opts).unwrap();
    for t in [0.5, 2.0] {
        let dilated = act.apply(t, &u0);
        let rep = minimize(&inst, &fam, &dilated, &opts).unwrap();
        let rel = (rep.energy - base.energy).abs() / base.energy;
        assert!(rel < 1e-3, "t = {t}: energy moved {rel:e}");
    }
}

/// The interpolated oracle profile is a near-solution of the discrete
/// system: its residual is small at default resolution and halves under
/// refinement; a generic state has a residual above tolerance.
#[test]
fn oracle_profile_residuals() {
    let spec = NonlinearitySpec::cubic();
    let oracle = shooting_oracle(3, &spec).unwrap();
    let mut residuals = Vec::new();
    for m in [4096usize, 8192] {
        let mut inst = ProblemInstance::classical_cubic();
        inst.grid.points = m;
        let fam = build_family(&inst).unwrap();
        let grid = match inst.build_grid() {
            Grid::Radial(g) => g,
            _ => unreachable!(),
        };
        let u = GridFunction::from_radial_profile(grid, |r| oracle.at(r)).unwrap();
        let r = pohozaev::el_residual(&inst, &fam, &u).unwrap();
        residuals.push(r);
    }
    assert!(residuals[0] <= 1e-3, "residual {:e}", residuals[0]);
    assert!(residuals[0] / residuals[1] >= 2.0, "{residuals:?}");

    // a generic admissible state is far from critical
    let inst = ProblemInstance::classical_cubic();
    let fam = build_family(&inst).unwrap();
    let grid = inst.build_grid();
    let mut sampler = Sampler::new(4242);
    let u = sampler
        .admissible_for(&fam, &grid, &SampleConfig::for_extent(20.0))
        .unwrap();
    let r = pohozaev::el_residual(&inst, &fam, &u).unwrap();
    assert!(r > 1e-3, "random state residual {r:e} unexpectedly small");
}

/// Small-ball positivity of K (the Pohozaev radius at sampled level) and
/// positivity of the reported minimum.
#[test]
fn pohozaev_radius_small_ball() {
    for (name, inst) in default_families() {
        let fam = build_family(&inst).unwrap();
        let grid = inst.build_grid();
        let mut sampler = Sampler::new(55);
        let cfg = sample_cfg(&inst).nonnegative();
        for _ in 0..500 {
            let u = sampler.sample_on(&grid, &cfg);
            let norm = fam.space_norm(&u).unwrap();
            if norm == 0.0 {
                continue;
            }
            let small = u.scale_values(1e-2 / norm).unwrap();
            let k = eval_k(&fam, &small).unwrap();
            assert!(k > 0.0, "{name}: K = {k:e} on the small ball");
        }
    }
}

/// A continuous spec pushed through the mollified path gives the same
/// answer as the direct solve.
#[test]
fn mollified_path_is_identity_for_continuous_specs() {
    let mut inst = ProblemInstance::classical_cubic();
    inst.grid.points = 2048;
    let opts = SolverOptions::default();
    let direct = {
        let fam = build_family(&inst).unwrap();
        let grid = inst.build_grid();
        let u0 = initial_guess(&inst, &grid).unwrap();
        minimize(&inst, &fam, &u0, &opts).unwrap()
    };
    let staged = solve_discontinuous(&inst, &[1e-2, 1e-3], &opts, 1e-3).unwrap();
    let rel = (staged.report.energy - direct.energy).abs() / direct.energy.abs();
    assert!(rel <= 1e-10, "mollified identity path moved the energy by {rel:e}");
    // for a continuous f the interval degenerates to {f(u)}: the reported
    // violation is exactly the set where the assembled residual exceeds
    // the tolerance, reproduced here by an independent accumulation
    let u = &staged.report.u;
    let fam = build_family(&inst).unwrap();
    let mut lhs = fam.psi_grad(0, u).unwrap();
    lhs = lhs.axpy(1.0, &u.map(|v| v).unwrap(), 1.0).unwrap();
    let weights = u.grid().weights_vec();
    let mut expected = 0.0;
    for ((&l, &v), w) in lhs.values().iter().zip(u.values()).zip(weights) {
        if (l - inst.nonlinearity.f(v)).abs() > 1e-3 {
            expected += w;
        }
    }
    let reported = staged.stages.last().unwrap().violation_measure;
    assert!(
        (reported - expected).abs() <= 1e-12 * expected.max(1.0),
        "violation {reported} vs independent {expected}"
    );
}

/// Phi-nonpositive starts are rejected before any iteration.
#[test]
fn solver_rejects_nonpositive_phi() {
    let inst = ProblemInstance::classical_cubic();
    let fam = build_family(&inst).unwrap();
    let grid = match inst.build_grid() {
        Grid::Radial(g) => g,
        _ => unreachable!(),
    };
    let tiny = GridFunction::from_radial_profile(grid, |r| 1e-3 * (-r * r).exp()).unwrap();
    let err = minimize(&inst, &fam, &tiny, &SolverOptions::default()).unwrap_err();
    assert!(matches!(err, Error::PhiNonpositive { .. }));
}
