//! Statistical verification of the abstract hypotheses for a built
//! family: scaling laws (X₁)(X₂)(X₄)(X₅), the symmetrization cone
//! (X₆)–(X₈), and sampled surrogates for the compactness-flavored
//! conditions (F₃)–(F₆). Weak-convergence hypotheses cannot be verified
//! on finite grids; their entries are labeled surrogates and do not gate
//! the exit status.

use crate::error::Result;
use crate::grid::{symmetrize_to_same_grid, Grid, GridFunction};
use crate::par;
use crate::sampler::{SampleConfig, Sampler};
use crate::variational::{DilationAction, FunctionalFamily};

/// One hypothesis entry: worst margin over the samples, pass/fail, and a
/// serialized witness on failure.
#[derive(Debug, Clone)]
pub struct HypothesisEntry {
    pub name: String,
    pub samples: usize,
    pub worst_margin: f64,
    pub pass: bool,
    pub surrogate: bool,
    pub witness: Option<String>,
}

/// Whole checklist with the seed that reproduces it bit-for-bit.
#[derive(Debug, Clone)]
pub struct HypothesisReport {
    pub seed: u64,
    pub entries: Vec<HypothesisEntry>,
}

impl HypothesisReport {
    /// Hard (non-surrogate) failures.
    pub fn hard_failures(&self) -> Vec<&HypothesisEntry> {
        self.entries
            .iter()
            .filter(|e| !e.pass && !e.surrogate)
            .collect()
    }

    pub fn all_hard_pass(&self) -> bool {
        self.hard_failures().is_empty()
    }

    pub fn write_text<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "seed = {}", self.seed)?;
        for e in &self.entries {
            writeln!(
                w,
                "{} | samples={} margin={:e} {}{}",
                e.name,
                e.samples,
                e.worst_margin,
                if e.pass { "pass" } else { "FAIL" },
                if e.surrogate { " (surrogate)" } else { "" }
            )?;
            if let Some(witness) = &e.witness {
                writeln!(w, "    witness: {witness}")?;
            }
        }
        Ok(())
    }
}

fn entry(
    name: impl Into<String>,
    samples: usize,
    worst_margin: f64,
    pass: bool,
    surrogate: bool,
    witness: Option<String>,
) -> HypothesisEntry {
    HypothesisEntry {
        name: name.into(),
        samples,
        worst_margin,
        pass,
        surrogate,
        witness,
    }
}

/// Scaling checks (X₁), (X₂), (X₄), (X₅) on sampled admissible inputs.
///
/// Power-law relative errors over a log grid of dilation factors, the
/// exact zero at t = 0, and a discrete continuity modulus at t = 1.
pub fn check_scalings(
    fam: &FunctionalFamily,
    act: &DilationAction,
    grid: &Grid,
    sampler: &mut Sampler,
    n_samples: usize,
) -> Result<Vec<HypothesisEntry>> {
    let cfg = sample_config_for(grid);
    let samples: Vec<GridFunction> = (0..n_samples)
        .map(|_| sampler.sample_on(grid, &cfg))
        .collect();
    let t_grid = [0.5, 1.0, 2.0, 3.7];
    let lambdas = fam.lambdas();
    let lambda_phi = fam.lambda_phi();

    struct Worst {
        err: f64,
        witness: Option<String>,
    }

    let per_sample: Vec<Result<(Worst, Worst)>> = par::map_slice(&samples, |u| {
        let psis = fam.psis(u)?;
        let phi = fam.phi(u)?;
        let mut w_psi = Worst { err: 0.0, witness: None };
        let mut w_phi = Worst { err: 0.0, witness: None };
        for &t in &t_grid {
            let ut = act.apply(t, u);
            let psis_t = fam.psis(&ut)?;
            for (i, (&p, &pt)) in psis.iter().zip(&psis_t).enumerate() {
                let expected = t.powf(lambdas[i]) * p;
                let scale = expected.abs().max(1e-300);
                let err = (pt - expected).abs() / scale;
                if err > w_psi.err {
                    w_psi.err = err;
                    w_psi.witness =
                        Some(format!("psi_{} at t = {t}: {pt:e} vs {expected:e}", i + 1));
                }
            }
            let phi_t = fam.phi(&ut)?;
            let expected = t.powf(lambda_phi) * phi;
            let err = (phi_t - expected).abs() / expected.abs().max(1e-300);
            if err > w_phi.err {
                w_phi.err = err;
                w_phi.witness = Some(format!("Phi at t = {t}: {phi_t:e} vs {expected:e}"));
            }
        }
        Ok((w_psi, w_phi))
    });

    let mut worst_psi = Worst { err: 0.0, witness: None };
    let mut worst_phi = Worst { err: 0.0, witness: None };
    for r in per_sample {
        let (wp, wf) = r?;
        if wp.err > worst_psi.err {
            worst_psi = wp;
        }
        if wf.err > worst_phi.err {
            worst_phi = wf;
        }
    }

    let tol = 1e-6;
    let mut entries = vec![
        entry(
            "X1: psi_i(u_t) = t^{lambda_i} psi_i(u)",
            n_samples,
            worst_psi.err,
            worst_psi.err <= tol,
            false,
            (worst_psi.err > tol).then(|| worst_psi.witness.clone().unwrap_or_default()),
        ),
        entry(
            "X2: Phi(u_t) = t^{lambda_Phi} Phi(u)",
            n_samples,
            worst_phi.err,
            worst_phi.err <= tol,
            false,
            (worst_phi.err > tol).then(|| worst_phi.witness.clone().unwrap_or_default()),
        ),
    ];

    // (X₄): ∗(0, u) = 0 exactly
    let mut x4_worst = 0.0f64;
    for u in samples.iter().take(8) {
        let z = act.apply(0.0, u);
        x4_worst = x4_worst.max(z.max_abs());
    }
    entries.push(entry(
        "X4: *(0, u) = 0",
        8.min(n_samples),
        x4_worst,
        x4_worst == 0.0,
        false,
        None,
    ));

    // (X₅): discrete continuity modulus of t ↦ u_t at t = 1, measured by
    // resampling u(·/t) onto the base grid; the difference must shrink
    // with the increment
    let mut modulus = 0.0f64;
    let mut shrink_ok = true;
    for u in samples.iter().take(4) {
        let base_norm = u.l2_w().max(1e-300);
        let mut prev = f64::INFINITY;
        for &dt in &[1e-1, 1e-2, 1e-3] {
            let diff = dilation_difference(u, 1.0 + dt)? / base_norm;
            modulus = modulus.max(diff / dt);
            if diff > prev * 1.5 {
                shrink_ok = false;
            }
            prev = diff;
        }
    }
    entries.push(entry(
        "X5: t -> u_t continuous at t = 1 (modulus per unit t)",
        4.min(n_samples),
        modulus,
        shrink_ok && modulus.is_finite(),
        false,
        None,
    ));

    // continuity at t → 0⁺: the ambient norm of u_t vanishes with t
    let mut zero_limit_ok = true;
    let mut worst_tail = 0.0f64;
    for u in samples.iter().take(4) {
        let mut prev = f64::INFINITY;
        for &t in &[1e-1, 1e-2, 1e-3] {
            let n = fam.space_norm(&act.apply(t, u))?;
            if n >= prev {
                zero_limit_ok = false;
            }
            prev = n;
        }
        worst_tail = worst_tail.max(prev / fam.space_norm(u)?.max(1e-300));
    }
    // the slowest functional exponent governs the decay, so the norm
    // vanishes like a small fractional power of t (t^{0.1} for a
    // fractional order 0.4 in one dimension); the check is monotone
    // decay strictly below the base norm, with the tail as the margin
    entries.push(entry(
        "X5: ||u_t|| -> 0 as t -> 0+",
        4.min(n_samples),
        worst_tail,
        zero_limit_ok && worst_tail < 1.0,
        false,
        None,
    ));

    Ok(entries)
}

/// ‖u_t − u‖ on u's own grid, with u_t(x) = u(x/t) by interpolation.
fn dilation_difference(u: &GridFunction, t: f64) -> Result<f64> {
    match u.grid() {
        Grid::Radial(g) => {
            let radii = g.radii();
            let w = g.weights();
            let mut sum = 0.0;
            for (i, &r) in radii.iter().enumerate() {
                let d = crate::grid::interp_radial(radii, u.values(), r / t) - u.values()[i];
                sum += w[i] * d * d;
            }
            Ok(sum.sqrt())
        }
        Grid::Box(b) => {
            let n = b.len();
            let mut sum = 0.0;
            for flat in 0..n {
                let idx = b.unflatten(flat);
                let x: Vec<f64> = idx
                    .iter()
                    .enumerate()
                    .map(|(axis, &k)| b.coord(axis, k) / t)
                    .collect();
                let d = crate::grid::interp_box(u, &x) - u.values()[flat];
                sum += d * d;
            }
            Ok((sum * b.cell_volume()).sqrt())
        }
    }
}

/// Cone checks (X₆), (X₇), (X₈) on nonnegative samples.
pub fn check_cone<Q>(
    fam: &FunctionalFamily,
    q_map: &Q,
    grid: &Grid,
    sampler: &mut Sampler,
    n_samples: usize,
) -> Result<Vec<HypothesisEntry>>
where
    Q: Fn(&GridFunction) -> Result<GridFunction> + Sync,
{
    let cfg = sample_config_for(grid).nonnegative();
    let samples: Vec<GridFunction> = (0..n_samples)
        .map(|_| sampler.sample_on(grid, &cfg))
        .collect();

    // Q round-trips through the symmetrization node read-back (and, for
    // box grids, an embedding back onto the lattice); together with the
    // quadrature-frame mismatch of conforming families (whose Φ is a
    // cell rule, for which no grid rearrangement is exactly
    // equimeasurable) the floor at default resolutions sits near 3e−4
    // relative. The inequalities are checked with 1e−3 slack; structural
    // violations fail at O(1), and the tight 1e−6 equimeasurability is
    // pinned in the acceptance suite on the shared lumped frame.
    const CONE_SLACK: f64 = 1e-3;

    let per_sample: Vec<Result<(f64, f64, Option<String>)>> = par::map_slice(&samples, |u| {
        let qu = q_map(u)?;
        let psis = fam.psis(u)?;
        let psis_q = fam.psis(&qu)?;
        let mut worst_psi_excess = f64::MIN;
        let mut witness = None;
        for (i, (&p, &pq)) in psis.iter().zip(&psis_q).enumerate() {
            let excess = (pq - p) / p.abs().max(1e-300);
            if excess > worst_psi_excess {
                worst_psi_excess = excess;
                witness = Some(format!("psi_{}: Q(u) gives {pq:e} vs {p:e}", i + 1));
            }
        }
        let phi = fam.phi(u)?;
        // Φ is pure quadrature: evaluate Q(u) in its exact cell
        // representation, where equimeasurability holds to rounding
        let cells = crate::grid::decreasing_rearrangement_cells(u)?;
        let phi_q = fam.phi(&cells)?;
        // (X₇) is an inequality; for nonnegative u the rearrangement is
        // equimeasurable, so we track the relative deficit
        let phi_deficit = (phi - phi_q) / phi.abs().max(1.0);
        Ok((worst_psi_excess, phi_deficit, witness))
    });

    let mut worst_psi = f64::MIN;
    let mut psi_witness = None;
    let mut worst_phi = f64::MIN;
    for r in per_sample {
        let (pe, pd, wit) = r?;
        if pe > worst_psi {
            worst_psi = pe;
            psi_witness = wit;
        }
        worst_phi = worst_phi.max(pd);
    }

    let mut entries = vec![
        entry(
            "X6: psi_i(Q(u)) <= psi_i(u) (1 + 1e-3)",
            n_samples,
            worst_psi,
            worst_psi <= CONE_SLACK,
            false,
            (worst_psi > CONE_SLACK).then(|| psi_witness.unwrap_or_default()),
        ),
        entry(
            "X7: Phi(Q(u)) >= Phi(u) - 1e-3 rel",
            n_samples,
            worst_phi,
            worst_phi <= CONE_SLACK,
            false,
            None,
        ),
    ];

    // (X₈): dilation keeps the monotone cone marker
    let act = DilationAction;
    let mut x8_ok = true;
    for u in samples.iter().take(4) {
        let qu = q_map(u)?;
        if let Grid::Radial(_) = qu.grid() {
            let dilated = act.apply(3.0, &qu);
            if qu.monotone() && !dilated.monotone() {
                x8_ok = false;
            }
        }
    }
    entries.push(entry(
        "X8: u in X^r implies u_t in X^r",
        4.min(n_samples),
        if x8_ok { 0.0 } else { 1.0 },
        x8_ok,
        false,
        None,
    ));

    Ok(entries)
}

/// Sampled surrogates for (F₃)–(F₆).
///
/// (F₃) is the small-ball positivity sweep of K (hard check); (F₄) fits
/// the norm bound on Φ ≥ 0 samples and drives an amplitude-decay
/// sequence; (F₅)/(F₆) are evaluated on named weakly-null-like sequences
/// and labeled surrogates.
pub fn check_compactness_surrogates(
    fam: &FunctionalFamily,
    grid: &Grid,
    sampler: &mut Sampler,
    n_samples: usize,
) -> Result<Vec<HypothesisEntry>> {
    let cfg = sample_config_for(grid).nonnegative();
    let mut entries = Vec::new();

    // (F₃): K > 0 on 0 < ‖u‖ ≤ 1e−2 of the sample scale
    {
        let samples: Vec<GridFunction> = (0..n_samples)
            .map(|_| sampler.sample_on(grid, &cfg))
            .collect();
        let per: Vec<Result<(f64, Option<String>)>> = par::map_slice(&samples, |u| {
            let norm = fam.space_norm(u)?;
            if norm == 0.0 {
                return Ok((f64::INFINITY, None));
            }
            let small = u.scale_values(1e-2 / norm)?;
            let k = crate::variational::eval_k(fam, &small)?;
            let witness = (k <= 0.0).then(|| format!("K = {k:e} at ||u|| = 1e-2"));
            Ok((k, witness))
        });
        let mut worst = f64::INFINITY;
        let mut witness = None;
        for r in per {
            let (k, wit) = r?;
            if k < worst {
                worst = k;
                witness = wit;
            }
        }
        entries.push(entry(
            "F3: K(u) > 0 on the small ball",
            n_samples,
            worst,
            worst > 0.0,
            false,
            witness,
        ));
    }

    // (F₄) part 1: amplitude-decay sequence drives the norm to zero
    {
        let u = sampler.sample_on(grid, &cfg);
        let mut norms = Vec::new();
        for k in 0..8 {
            let scaled = u.scale_values(2f64.powi(-k))?;
            let j = fam.eval_j(&scaled)?;
            let n = fam.space_norm(&scaled)?;
            norms.push((j, n));
        }
        let decreasing = norms.windows(2).all(|w| w[1].0 < w[0].0 && w[1].1 < w[0].1);
        let last = norms.last().unwrap();
        entries.push(entry(
            "F4: J -> 0 forces ||u|| -> 0 (amplitude decay)",
            8,
            last.1,
            decreasing && last.1 < norms[0].1 * 0.1,
            false,
            None,
        ));
    }

    // (F₄) part 2: fitted bound ||u||² <= C (J + J^{c/2}) on Φ ≥ 0 samples
    {
        let mut worst_ratio = 0.0f64;
        let mut used = 0usize;
        for _ in 0..n_samples {
            if let Ok(u) = sampler.admissible_for(fam, grid, &cfg) {
                let j = fam.eval_j(&u)?;
                let n = fam.space_norm(&u)?;
                if j > 0.0 {
                    let bound = j + j.powf(1.5);
                    worst_ratio = worst_ratio.max(n * n / bound);
                    used += 1;
                }
            }
        }
        entries.push(entry(
            "F4: fitted C3 in ||u||^2 <= C3 (J + J^{3/2}) on Phi >= 0 samples",
            used,
            worst_ratio,
            worst_ratio.is_finite() && used > 0,
            true,
            None,
        ));
    }

    // (F₅) surrogate: spreading radial sequence with decaying amplitude,
    // pointwise limit 0, so limsup Φ(u_k) ≤ Φ(0) = 0 is expected
    {
        let u = sampler.sample_on(grid, &cfg);
        let act = DilationAction;
        let mut phis = Vec::new();
        for k in 1..=5 {
            let spread = act.apply(1.5f64.powi(k), &u.scale_values(0.5f64.powi(k))?);
            phis.push(fam.phi(&spread)?);
        }
        let tail = *phis.last().unwrap();
        entries.push(entry(
            "F5 (surrogate): limsup Phi(u_k) <= Phi(limit) on a spreading sequence",
            phis.len(),
            tail,
            tail <= 1e-6,
            true,
            None,
        ));
    }

    // (F₆) surrogate: translating bump against its pointwise limit 0
    {
        let mut worst = 0.0f64;
        for k in 1..=5 {
            let shift = k as f64;
            let translated = translated_bump(grid, shift)?;
            let psis = fam.psis(&translated)?;
            // ψᵢ(limit) = ψᵢ(0) = 0 must not exceed the sampled values
            for &p in &psis {
                worst = worst.max(0.0 - p - 1e-6);
            }
        }
        entries.push(entry(
            "F6 (surrogate): psi_i(limit) <= liminf psi_i(u_k) on translates",
            5,
            worst,
            worst <= 0.0,
            true,
            None,
        ));
    }

    Ok(entries)
}

fn translated_bump(grid: &Grid, shift: f64) -> Result<GridFunction> {
    match grid {
        Grid::Radial(g) => {
            GridFunction::from_radial_profile(g.clone(), move |r| {
                (-(r - shift) * (r - shift)).exp()
            })
        }
        Grid::Box(b) => GridFunction::from_box_profile(b.clone(), move |x| {
            let mut d2 = (x[0] - shift) * (x[0] - shift);
            for &xi in &x[1..] {
                d2 += xi * xi;
            }
            (-d2).exp()
        }),
    }
}

fn sample_config_for(grid: &Grid) -> SampleConfig {
    let extent = match grid {
        Grid::Radial(g) => g.r_max(),
        Grid::Box(b) => b.half_extent(0),
    };
    SampleConfig::for_extent(extent)
}

/// Run the full checklist for a problem instance: exponent revalidation,
/// scalings, cone and compactness surrogates, merged into one report.
pub fn check_instance(
    inst: &crate::problems::ProblemInstance,
    seed: u64,
    n_samples: usize,
) -> Result<HypothesisReport> {
    check_family(inst, &crate::problems::build_family(inst)?, seed, n_samples)
}

/// As [`check_instance`] for a caller-supplied (possibly corrupted)
/// family over the instance's grid.
pub fn check_family(
    inst: &crate::problems::ProblemInstance,
    fam: &FunctionalFamily,
    seed: u64,
    n_samples: usize,
) -> Result<HypothesisReport> {
    let grid = inst.build_grid();
    let mut entries = Vec::new();

    // (X₃) is revalidated independently of the family construction
    let lambdas = fam.lambdas();
    let max_lambda = lambdas.iter().fold(f64::MIN, |m, &l| m.max(l));
    let x3 = max_lambda > 0.0 && max_lambda < fam.lambda_phi();
    entries.push(entry(
        "X3: 0 < max(lambda_i) < lambda_Phi",
        1,
        fam.lambda_phi() - max_lambda,
        x3,
        false,
        (!x3).then(|| format!("lambdas = {lambdas:?}, lambda_Phi = {}", fam.lambda_phi())),
    ));

    let act = DilationAction;
    let mut sampler = Sampler::new(seed);
    entries.extend(check_scalings(fam, &act, &grid, &mut sampler, n_samples)?);
    entries.extend(check_cone(
        fam,
        &|u| symmetrize_to_same_grid(u),
        &grid,
        &mut sampler,
        n_samples,
    )?);
    entries.extend(check_compactness_surrogates(fam, &grid, &mut sampler, n_samples)?);

    Ok(HypothesisReport { seed, entries })
}
