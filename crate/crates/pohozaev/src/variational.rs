//! The abstract variational framework: functional families with power
//! scaling laws under dilation, the Pohozaev operator K, fiber maps
//! t ↦ I(u_t) and the unique projection onto the Pohozaev set.
//!
//! A family consists of quadratic-type functionals ψ₁…ψₙ with scaling
//! exponents λ₁…λₙ and a term Φ with exponent λ_Φ, subject to
//! 0 < max λᵢ < λ_Φ. Along the dilation orbit the energy is the explicit
//! power sum h(t) = Σ t^{λᵢ} ψᵢ(u) − t^{λ_Φ} Φ(u), which is what the
//! fiber and projection routines evaluate — no re-sampling involved.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::GridFunction;

/// Evaluation hook u ↦ ℝ.
pub type EvalFn = Arc<dyn Fn(&GridFunction) -> Result<f64> + Send + Sync>;
/// Gradient hook u ↦ dual field (paired through the grid quadrature).
pub type GradFn = Arc<dyn Fn(&GridFunction) -> Result<GridFunction> + Send + Sync>;

/// Relative tolerances used by the projection and manifold checks.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    /// |K(u)| ≤ tol_k · (Σ λᵢψᵢ(u) + λ_Φ |Φ(u)|) counts as on-manifold.
    pub tol_k: f64,
    /// Relative tolerance on the fiber root t*.
    pub tol_t: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { tol_k: 1e-10, tol_t: 1e-12 }
    }
}

/// One quadratic-part term: exponent λ, evaluator, optional gradient.
#[derive(Clone)]
pub struct FamilyTerm {
    pub lambda: f64,
    pub eval: EvalFn,
    pub grad: Option<GradFn>,
}

/// The tuple (ψ₁…ψₙ, Φ, λ₁…λₙ, λ_Φ) with optional gradient hooks and an
/// optional ambient-norm hook (used by the hypothesis harness).
#[derive(Clone)]
pub struct FunctionalFamily {
    terms: Vec<FamilyTerm>,
    lambda_phi: f64,
    phi: EvalFn,
    phi_grad: Option<GradFn>,
    space_norm: Option<EvalFn>,
}

impl std::fmt::Debug for FunctionalFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FunctionalFamily")
            .field("lambdas", &self.lambdas())
            .field("lambda_phi", &self.lambda_phi)
            .field("has_gradients", &self.has_gradients())
            .finish()
    }
}

/// Builder for [`FunctionalFamily`].
#[derive(Default)]
pub struct FamilyBuilder {
    terms: Vec<FamilyTerm>,
    phi: Option<(f64, EvalFn)>,
    phi_grad: Option<GradFn>,
    space_norm: Option<EvalFn>,
}

impl FamilyBuilder {
    pub fn term(mut self, lambda: f64, eval: EvalFn) -> Self {
        self.terms.push(FamilyTerm { lambda, eval, grad: None });
        self
    }

    pub fn term_with_grad(mut self, lambda: f64, eval: EvalFn, grad: GradFn) -> Self {
        self.terms.push(FamilyTerm { lambda, eval, grad: Some(grad) });
        self
    }

    pub fn phi(mut self, lambda_phi: f64, eval: EvalFn) -> Self {
        self.phi = Some((lambda_phi, eval));
        self
    }

    pub fn phi_grad(mut self, grad: GradFn) -> Self {
        self.phi_grad = Some(grad);
        self
    }

    pub fn space_norm(mut self, norm: EvalFn) -> Self {
        self.space_norm = Some(norm);
        self
    }

    /// Validates the exponent hypothesis 0 < max λᵢ < λ_Φ.
    pub fn build(self) -> Result<FunctionalFamily> {
        let (lambda_phi, phi) = self.phi.ok_or_else(|| Error::NonadmissibleExponents {
            details: "family needs a Phi term".into(),
        })?;
        if self.terms.is_empty() {
            return Err(Error::NonadmissibleExponents {
                details: "family needs at least one quadratic-part term".into(),
            });
        }
        let lambda_max = self.terms.iter().fold(f64::MIN, |m, t| m.max(t.lambda));
        if !(lambda_max > 0.0 && lambda_max < lambda_phi) {
            return Err(Error::NonadmissibleExponents {
                details: format!(
                    "need 0 < max(lambda_i) < lambda_phi, got max = {lambda_max}, \
                     lambda_phi = {lambda_phi}"
                ),
            });
        }
        Ok(FunctionalFamily {
            terms: self.terms,
            lambda_phi,
            phi,
            phi_grad: self.phi_grad,
            space_norm: self.space_norm,
        })
    }
}

impl FunctionalFamily {
    pub fn builder() -> FamilyBuilder {
        FamilyBuilder::default()
    }

    pub fn n_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn lambdas(&self) -> Vec<f64> {
        self.terms.iter().map(|t| t.lambda).collect()
    }

    pub fn lambda_phi(&self) -> f64 {
        self.lambda_phi
    }

    pub fn psi(&self, i: usize, u: &GridFunction) -> Result<f64> {
        (self.terms[i].eval)(u)
    }

    /// All ψᵢ(u) at once.
    pub fn psis(&self, u: &GridFunction) -> Result<Vec<f64>> {
        self.terms.iter().map(|t| (t.eval)(u)).collect()
    }

    pub fn phi(&self, u: &GridFunction) -> Result<f64> {
        (self.phi)(u)
    }

    /// J(u) = Σ ψᵢ(u).
    pub fn eval_j(&self, u: &GridFunction) -> Result<f64> {
        Ok(self.psis(u)?.iter().sum())
    }

    /// I(u) = J(u) − Φ(u).
    pub fn eval_i(&self, u: &GridFunction) -> Result<f64> {
        Ok(self.eval_j(u)? - self.phi(u)?)
    }

    pub fn psi_grad(&self, i: usize, u: &GridFunction) -> Result<GridFunction> {
        match &self.terms[i].grad {
            Some(g) => g(u),
            None => Err(Error::MissingGradient {
                name: format!("psi_{}", i + 1),
            }),
        }
    }

    pub fn phi_gradient(&self, u: &GridFunction) -> Result<GridFunction> {
        match &self.phi_grad {
            Some(g) => g(u),
            None => Err(Error::MissingGradient { name: "Phi".into() }),
        }
    }

    pub fn has_gradients(&self) -> bool {
        self.phi_grad.is_some() && self.terms.iter().all(|t| t.grad.is_some())
    }

    /// Ambient norm ‖u‖; defaults to √(J(u) + ∫u²) when no hook is set.
    pub fn space_norm(&self, u: &GridFunction) -> Result<f64> {
        match &self.space_norm {
            Some(norm) => norm(u),
            None => {
                let j = self.eval_j(u)?;
                Ok((j + u.l2_w() * u.l2_w()).sqrt())
            }
        }
    }

    /// Scalar coefficients (ψ₁(u)…ψₙ(u), Φ(u)) cached for fiber work.
    pub fn fiber_coefficients(&self, u: &GridFunction) -> Result<FiberCoefficients> {
        let psis = self.psis(u)?;
        let phi = self.phi(u)?;
        if !psis.iter().all(|p| p.is_finite()) || !phi.is_finite() {
            return Err(Error::NonFiniteValue {
                context: "fiber coefficients".into(),
            });
        }
        Ok(FiberCoefficients {
            lambdas: self.lambdas(),
            lambda_phi: self.lambda_phi,
            psis,
            phi,
        })
    }
}

/// The dilation action ∗(t, u): coordinates rescale by t, values are
/// carried along, so u_t(x) = u(x/t); ∗(0, u) = 0 on the original grid.
#[derive(Debug, Clone, Copy, Default)]
pub struct DilationAction;

impl DilationAction {
    /// u_t by analytic coordinate resampling. `apply(1, u)` returns a
    /// bit-identical copy; `apply(0, u)` the zero function.
    pub fn apply(&self, t: f64, u: &GridFunction) -> GridFunction {
        assert!(t >= 0.0, "dilation parameter must be nonnegative");
        if t == 0.0 {
            return GridFunction::zeros(u.grid().clone());
        }
        if t == 1.0 {
            return u.clone();
        }
        let mono = u.monotone();
        let mut out = GridFunction::new(u.grid().dilated(t), u.values().to_vec())
            .expect("dilation preserves finiteness");
        if mono {
            out.set_monotone(true);
        }
        out
    }
}

/// Cached scalar data of one fiber: exponents and functional values at
/// the base point. All fiber evaluations are closed-form power sums.
#[derive(Debug, Clone)]
pub struct FiberCoefficients {
    pub lambdas: Vec<f64>,
    pub lambda_phi: f64,
    pub psis: Vec<f64>,
    pub phi: f64,
}

impl FiberCoefficients {
    /// h(t) = I(u_t) = Σ t^{λᵢ} ψᵢ − t^{λ_Φ} Φ.
    pub fn h(&self, t: f64) -> f64 {
        if t == 0.0 {
            return 0.0;
        }
        let mut v = 0.0;
        for (lam, psi) in self.lambdas.iter().zip(&self.psis) {
            v += t.powf(*lam) * psi;
        }
        v - t.powf(self.lambda_phi) * self.phi
    }

    /// K(u_t) = Σ λᵢ t^{λᵢ} ψᵢ − λ_Φ t^{λ_Φ} Φ = t h'(t).
    pub fn k(&self, t: f64) -> f64 {
        if t == 0.0 {
            return 0.0;
        }
        let mut v = 0.0;
        for (lam, psi) in self.lambdas.iter().zip(&self.psis) {
            v += lam * t.powf(*lam) * psi;
        }
        v - self.lambda_phi * t.powf(self.lambda_phi) * self.phi
    }

    /// Scale Σ λᵢ t^{λᵢ} ψᵢ + λ_Φ t^{λ_Φ} |Φ| used for relative K residuals.
    pub fn k_scale(&self, t: f64) -> f64 {
        let mut v = 0.0;
        for (lam, psi) in self.lambdas.iter().zip(&self.psis) {
            v += lam * t.powf(*lam) * psi.abs();
        }
        v + self.lambda_phi * t.powf(self.lambda_phi) * self.phi.abs()
    }

    /// Monotone reformulation: after dividing K(u_t) = 0 by t^{λmax} and
    /// grouping the λmax terms, the root equation reads m(t) = c with m
    /// strictly increasing on (0, ∞). Returns c − m(t) (decreasing in t)
    /// and its derivative.
    fn monotone_residual(&self, t: f64) -> (f64, f64) {
        let lambda_max = self.lambdas.iter().fold(f64::MIN, |m, &l| m.max(l));
        let mut value = 0.0;
        let mut slope = 0.0;
        for (lam, psi) in self.lambdas.iter().zip(&self.psis) {
            if *lam == lambda_max {
                value += lam * psi;
            } else {
                let e = lam - lambda_max;
                value += lam * t.powf(e) * psi;
                slope += lam * e * t.powf(e - 1.0) * psi;
            }
        }
        let e = self.lambda_phi - lambda_max;
        value -= self.lambda_phi * t.powf(e) * self.phi;
        slope -= self.lambda_phi * e * t.powf(e - 1.0) * self.phi;
        (value, slope)
    }

    /// The unique t* > 0 with K(u_{t*}) = 0, by geometric bracket
    /// expansion from t = 1 and bisection refined with safeguarded
    /// Newton steps, to relative tolerance `tol_t`.
    pub fn t_star(&self, tol_t: f64) -> Result<f64> {
        if self.phi <= 0.0 {
            return Err(Error::PhiNonpositive { value: self.phi });
        }
        let f = |t: f64| self.monotone_residual(t).0;
        // f is decreasing: positive left of the root, negative right of it.
        let mut lo = 1.0_f64;
        let mut hi = 1.0_f64;
        let f1 = f(1.0);
        if f1 > 0.0 {
            loop {
                hi *= 2.0;
                if f(hi) <= 0.0 {
                    lo = hi / 2.0;
                    break;
                }
                if hi > 2f64.powi(60) {
                    return Err(Error::BracketNotFound {
                        details: "no sign change while expanding upward".into(),
                    });
                }
            }
        } else if f1 < 0.0 {
            loop {
                lo /= 2.0;
                if f(lo) >= 0.0 {
                    hi = lo * 2.0;
                    break;
                }
                if lo < 2f64.powi(-60) {
                    return Err(Error::BracketNotFound {
                        details: "no sign change while expanding downward".into(),
                    });
                }
            }
        } else {
            return Ok(1.0);
        }

        let mut t = 0.5 * (lo + hi);
        for _ in 0..200 {
            let (val, slope) = self.monotone_residual(t);
            if val > 0.0 {
                lo = t;
            } else if val < 0.0 {
                hi = t;
            } else {
                return Ok(t);
            }
            let mut next = if slope != 0.0 { t - val / slope } else { t };
            if !(next > lo && next < hi) || !next.is_finite() {
                next = 0.5 * (lo + hi);
            }
            if (next - t).abs() <= tol_t * t.abs() {
                return Ok(next);
            }
            t = next;
        }
        Ok(t)
    }
}

/// Sampled fiber t ↦ h(t) = I(u_t) with the located maximizer.
#[derive(Debug, Clone)]
pub struct FiberProfile {
    pub t_samples: Vec<f64>,
    pub h_values: Vec<f64>,
    pub k_values: Vec<f64>,
    pub t_star: f64,
    pub h_star: f64,
    /// |K(u_{t*})| (an energy-sized residual).
    pub k_residual: f64,
}

/// Pohozaev operator K(u) = Σ λᵢ ψᵢ(u) − λ_Φ Φ(u).
pub fn eval_k(fam: &FunctionalFamily, u: &GridFunction) -> Result<f64> {
    let coeff = fam.fiber_coefficients(u)?;
    let k = coeff.k(1.0);
    if !k.is_finite() {
        return Err(Error::NonFiniteValue { context: "K(u)".into() });
    }
    Ok(k)
}

/// Fiber profile over a t grid, by the closed-form power expansion.
///
/// Requires Φ(u) > 0 (otherwise the fiber has no interior maximum).
pub fn fiber(
    fam: &FunctionalFamily,
    _act: &DilationAction,
    u: &GridFunction,
    t_grid: &[f64],
) -> Result<FiberProfile> {
    let coeff = fam.fiber_coefficients(u)?;
    if coeff.phi <= 0.0 {
        return Err(Error::PhiNonpositive { value: coeff.phi });
    }
    assert!(
        t_grid.iter().all(|&t| t > 0.0),
        "fiber sample points must be positive"
    );
    let t_star = coeff.t_star(Tolerances::default().tol_t)?;
    let h_values: Vec<f64> = t_grid.iter().map(|&t| coeff.h(t)).collect();
    let k_values: Vec<f64> = t_grid.iter().map(|&t| coeff.k(t)).collect();
    Ok(FiberProfile {
        t_samples: t_grid.to_vec(),
        h_values,
        k_values,
        t_star,
        h_star: coeff.h(t_star),
        k_residual: coeff.k(t_star).abs(),
    })
}

/// A state together with its Pohozaev data.
#[derive(Debug, Clone)]
pub struct PohozaevState {
    pub u: GridFunction,
    pub on_manifold: bool,
    pub k_value: f64,
    pub i_value: f64,
}

impl PohozaevState {
    /// Evaluate K and I at `u` and mark manifold membership by the
    /// relative tolerance `tols.tol_k`.
    pub fn evaluate(fam: &FunctionalFamily, u: GridFunction, tols: &Tolerances) -> Result<Self> {
        let coeff = fam.fiber_coefficients(&u)?;
        let k = coeff.k(1.0);
        let i = coeff.h(1.0);
        let scale = coeff.k_scale(1.0);
        let nontrivial = coeff.psis.iter().any(|&p| p != 0.0) || coeff.phi != 0.0;
        Ok(Self {
            u,
            on_manifold: nontrivial && k.abs() <= tols.tol_k * scale.max(f64::MIN_POSITIVE),
            k_value: k,
            i_value: i,
        })
    }
}

/// Unique projection u ↦ u_{t*} onto the Pohozaev set.
///
/// Requires Φ(u) > 0 and at least one ψᵢ(u) > 0; the root is found via
/// the monotone reformulation of K(u_t) = 0. The returned state carries
/// the fiber-expansion values K(u_{t*}) and I(u_{t*}) (exact under the
/// scaling laws, so also correct for abstract families whose evaluators
/// do not resample).
pub fn project_to_pohozaev(
    fam: &FunctionalFamily,
    u: &GridFunction,
    tols: &Tolerances,
) -> Result<(f64, PohozaevState)> {
    let coeff = fam.fiber_coefficients(u)?;
    if coeff.phi <= 0.0 {
        return Err(Error::PhiNonpositive { value: coeff.phi });
    }
    let t_star = coeff.t_star(tols.tol_t)?;
    let act = DilationAction;
    let projected = act.apply(t_star, u);
    let k = coeff.k(t_star);
    let scale = coeff.k_scale(t_star);
    let state = PohozaevState {
        u: projected,
        on_manifold: k.abs() <= tols.tol_k * scale.max(f64::MIN_POSITIVE),
        k_value: k,
        i_value: coeff.h(t_star),
    };
    Ok((t_star, state))
}

/// Relative gap in the on-manifold identity
/// I(u) = Σ (1 − λᵢ/λ_Φ) ψᵢ(u), valid exactly on the Pohozaev set.
pub fn pohozaev_identity_check(fam: &FunctionalFamily, st: &PohozaevState) -> Result<f64> {
    if !st.on_manifold {
        let coeff = fam.fiber_coefficients(&st.u)?;
        return Err(Error::NotOnManifold {
            k_value: st.k_value,
            scale: coeff.k_scale(1.0),
        });
    }
    let psis = fam.psis(&st.u)?;
    let reduced: f64 = fam
        .lambdas()
        .iter()
        .zip(&psis)
        .map(|(lam, psi)| (1.0 - lam / fam.lambda_phi) * psi)
        .sum();
    let i = fam.eval_i(&st.u)?;
    Ok((i - reduced).abs() / i.abs().max(f64::EPSILON))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Grid, RadialGrid};

    fn constant_family(psis: Vec<(f64, f64)>, lambda_phi: f64, phi: f64) -> FunctionalFamily {
        // abstract family with u-independent functionals, for closed forms
        let mut b = FunctionalFamily::builder();
        for (lam, val) in psis {
            b = b.term(lam, Arc::new(move |_: &GridFunction| Ok(val)));
        }
        b.phi(lambda_phi, Arc::new(move |_: &GridFunction| Ok(phi)))
            .build()
            .unwrap()
    }

    fn any_u() -> GridFunction {
        let g = RadialGrid::uniform(1, 5.0, 32);
        GridFunction::from_radial_profile(g, |r| (-r).exp()).unwrap()
    }

    #[test]
    fn eval_k_single_term_arithmetic() {
        let fam = constant_family(vec![(1.0, 1.0)], 2.0, 1.0);
        assert!((eval_k(&fam, &any_u()).unwrap() - (-1.0)).abs() < 1e-15);
    }

    #[test]
    fn eval_k_zero_function_is_zero() {
        // ψ(0) = Φ(0) = 0 for honest functionals
        let fam = FunctionalFamily::builder()
            .term(1.0, Arc::new(|u: &GridFunction| Ok(u.l2_w() * u.l2_w())))
            .phi(
                2.0,
                Arc::new(|u: &GridFunction| crate::grid::quad(u, |v| v.powi(4))),
            )
            .build()
            .unwrap();
        let zero = GridFunction::zeros(Grid::Radial(RadialGrid::uniform(1, 5.0, 32)));
        assert_eq!(eval_k(&fam, &zero).unwrap(), 0.0);
    }

    #[test]
    fn single_term_fiber_has_quadratic_closed_form() {
        // h(t) = t − t²: t* = 1/2, h(t*) = 1/4
        let fam = constant_family(vec![(1.0, 1.0)], 2.0, 1.0);
        let t_grid: Vec<f64> = (1..=100).map(|i| i as f64 * 0.02).collect();
        let prof = fiber(&fam, &DilationAction, &any_u(), &t_grid).unwrap();
        assert!((prof.t_star - 0.5).abs() < 1e-12);
        assert!((prof.h_star - 0.25).abs() < 1e-12);
        // h(0) = 0 and the tail has gone negative at the largest sample
        assert!(prof.h_values.last().unwrap() < &0.0);
        assert!(prof.h_values.iter().all(|&h| h <= prof.h_star + 1e-14));
    }

    #[test]
    fn two_term_fiber_factorable_cubic() {
        // t + 2t² = 3t³ at t = 1; h(1) = 1 + 1 − 1 = 1
        let fam = constant_family(vec![(1.0, 1.0), (2.0, 1.0)], 3.0, 1.0);
        let t_grid: Vec<f64> = (1..=60).map(|i| i as f64 * 0.05).collect();
        let prof = fiber(&fam, &DilationAction, &any_u(), &t_grid).unwrap();
        assert!((prof.t_star - 1.0).abs() < 1e-12, "t* = {}", prof.t_star);
        assert!((prof.h_star - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fiber_requires_positive_phi() {
        let fam = constant_family(vec![(1.0, 1.0)], 2.0, -0.5);
        let err = fiber(&fam, &DilationAction, &any_u(), &[1.0]).unwrap_err();
        assert!(matches!(err, Error::PhiNonpositive { .. }));
    }

    #[test]
    fn projection_single_term_closed_form() {
        // t* = (λψ / (λ_Φ Φ))^{1/(λ_Φ−λ)} = 1/2
        let fam = constant_family(vec![(1.0, 1.0)], 2.0, 1.0);
        let (t, st) = project_to_pohozaev(&fam, &any_u(), &Tolerances::default()).unwrap();
        assert!((t - 0.5).abs() < 1e-12);
        assert!(st.on_manifold);
    }

    #[test]
    fn projection_two_term_root() {
        let fam = constant_family(vec![(1.0, 1.0), (2.0, 1.0)], 3.0, 1.0);
        let (t, _) = project_to_pohozaev(&fam, &any_u(), &Tolerances::default()).unwrap();
        assert!((t - 1.0).abs() < 1e-12);
    }

    #[test]
    fn projection_rejects_nonpositive_phi() {
        let fam = constant_family(vec![(1.0, 1.0)], 2.0, 0.0);
        let err = project_to_pohozaev(&fam, &any_u(), &Tolerances::default()).unwrap_err();
        assert!(matches!(err, Error::PhiNonpositive { .. }));
    }

    #[test]
    fn projection_without_positive_psi_has_no_bracket() {
        let fam = constant_family(vec![(1.0, 0.0)], 2.0, 1.0);
        let err = project_to_pohozaev(&fam, &any_u(), &Tolerances::default()).unwrap_err();
        assert!(matches!(err, Error::BracketNotFound { .. }));
    }

    #[test]
    fn identity_check_single_term() {
        // at t* = 1/2: I = 1/4 and (1 − 1/2)·ψ(u_{t*}) = (1/2)(1/2) = 1/4
        let fam = constant_family(vec![(1.0, 0.5)], 2.0, 0.25);
        // that family is already "projected": K = 0.5·1 − 2·0.25·… at t=1
        let st = PohozaevState::evaluate(&fam, any_u(), &Tolerances::default()).unwrap();
        assert!(st.on_manifold, "K = {}", st.k_value);
        let gap = pohozaev_identity_check(&fam, &st).unwrap();
        assert!(gap < 1e-14);
    }

    #[test]
    fn identity_check_rejects_off_manifold_states() {
        let fam = constant_family(vec![(1.0, 1.0)], 2.0, 1.0);
        let st = PohozaevState::evaluate(&fam, any_u(), &Tolerances::default()).unwrap();
        assert!(!st.on_manifold);
        let err = pohozaev_identity_check(&fam, &st).unwrap_err();
        assert!(matches!(err, Error::NotOnManifold { .. }));
    }

    #[test]
    fn dilation_identity_and_zero() {
        let act = DilationAction;
        let u = any_u();
        let same = act.apply(1.0, &u);
        assert_eq!(u.values(), same.values());
        assert_eq!(u.grid(), same.grid());
        let zero = act.apply(0.0, &u);
        assert!(zero.values().iter().all(|&v| v == 0.0));
        assert_eq!(zero.grid(), u.grid());
    }

    #[test]
    fn lambda_max_ties_are_grouped() {
        // two terms sharing the maximal exponent
        let fam = constant_family(vec![(1.5, 2.0), (1.5, 1.0)], 2.0, 3.0);
        let (t, st) = project_to_pohozaev(&fam, &any_u(), &Tolerances::default()).unwrap();
        // K(t) = 1.5(2+1)t^{1.5} − 2·3·t² = 0 → t^{0.5} = 4.5/6
        let expected = (4.5_f64 / 6.0).powi(2);
        assert!((t - expected).abs() < 1e-12, "{t} vs {expected}");
        assert!(st.on_manifold);
    }
}
