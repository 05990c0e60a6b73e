//! Nonlinearity specifications: pointwise f with growth data, jump
//! points and Clarke envelopes, plus validation, mollification and the
//! differential-inclusion check.
//!
//! All builtins vanish on s < 0 (the nonnegative-solution convention),
//! and carry closed-form primitives F = ∫₀^s f and H = ∫₀^s F so the
//! mollified f_ε and F_ε are exact window averages.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::GridFunction;

pub type PointwiseFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Constants of the growth bound |f(s)| ≤ A|s| + B|s|^q.
#[derive(Debug, Clone, Copy)]
pub struct GrowthBounds {
    pub a: f64,
    pub b: f64,
    pub q: f64,
}

/// A nonlinearity with envelopes and (optional) closed-form primitives.
#[derive(Clone)]
pub struct NonlinearitySpec {
    name: String,
    f: PointwiseFn,
    f_lower: PointwiseFn,
    f_upper: PointwiseFn,
    primitive: Option<PointwiseFn>,
    growth: GrowthBounds,
    jump_points: Vec<f64>,
    tau: f64,
}

impl std::fmt::Debug for NonlinearitySpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NonlinearitySpec")
            .field("name", &self.name)
            .field("growth", &self.growth)
            .field("jump_points", &self.jump_points)
            .field("tau", &self.tau)
            .finish()
    }
}

impl NonlinearitySpec {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        f: PointwiseFn,
        f_lower: PointwiseFn,
        f_upper: PointwiseFn,
        primitive: Option<PointwiseFn>,
        growth: GrowthBounds,
        jump_points: Vec<f64>,
        tau: f64,
    ) -> Self {
        Self {
            name: name.into(),
            f,
            f_lower,
            f_upper,
            primitive,
            growth,
            jump_points,
            tau,
        }
    }

    /// The smooth benchmark f(s) = s³ on s ≥ 0.
    pub fn cubic() -> Self {
        let f: PointwiseFn = Arc::new(|s| if s > 0.0 { s * s * s } else { 0.0 });
        Self {
            name: "cubic".into(),
            f_lower: f.clone(),
            f_upper: f.clone(),
            f,
            primitive: Some(Arc::new(|s| if s > 0.0 { s.powi(4) / 4.0 } else { 0.0 })),
            growth: GrowthBounds { a: 1.0, b: 1.0, q: 3.0 },
            jump_points: Vec::new(),
            tau: 2.0,
        }
    }

    /// Power law f(s) = s^q on s ≥ 0 for q > 1; the fractional benchmark
    /// uses q = 2.2 so that (f₂) holds down to s = 0.2 in one dimension.
    pub fn power(q: f64) -> Self {
        assert!(q > 1.0, "power nonlinearity needs q > 1");
        let f: PointwiseFn = Arc::new(move |s| if s > 0.0 { s.powf(q) } else { 0.0 });
        // G(τ) = τ^{q+1}/(q+1) − τ²/2 > 0 once τ^{q−1} > (q+1)/2
        let tau = 2.0 * ((q + 1.0) / 2.0).powf(1.0 / (q - 1.0));
        Self {
            name: format!("power({q})"),
            f_lower: f.clone(),
            f_upper: f.clone(),
            f,
            primitive: Some(Arc::new(move |s| {
                if s > 0.0 {
                    s.powf(q + 1.0) / (q + 1.0)
                } else {
                    0.0
                }
            })),
            growth: GrowthBounds { a: 1.0, b: 1.0, q },
            jump_points: Vec::new(),
            tau,
        }
    }

    /// Discontinuous benchmark f(s) = s³ + height·𝟙{s ≥ a} on s ≥ 0.
    pub fn cubic_jump(a: f64, height: f64) -> Self {
        assert!(a > 0.0 && height > 0.0);
        let f: PointwiseFn = Arc::new(move |s| {
            if s <= 0.0 {
                0.0
            } else {
                s * s * s + if s >= a { height } else { 0.0 }
            }
        });
        let f_lower: PointwiseFn = Arc::new(move |s| {
            if s <= 0.0 {
                0.0
            } else {
                s * s * s + if s > a { height } else { 0.0 }
            }
        });
        let f_upper = f.clone();
        Self {
            name: format!("cubic-jump({a},{height})"),
            f,
            f_lower,
            f_upper,
            primitive: Some(Arc::new(move |s| {
                if s <= 0.0 {
                    0.0
                } else {
                    s.powi(4) / 4.0 + height * (s - a).max(0.0)
                }
            })),
            growth: GrowthBounds { a: 1.0 + height / a, b: 1.0, q: 3.0 },
            jump_points: vec![a],
            tau: 2.0_f64.max(1.5 * a),
        }
    }

    /// Piecewise-polynomial nonlinearity from a table: pieces on
    /// [0, b₁), [b₁, b₂), …, [b_p, ∞), ascending coefficients.
    pub fn piecewise_poly(breakpoints: Vec<f64>, pieces: Vec<Vec<f64>>, tau: f64) -> Result<Self> {
        let poly = PiecewisePoly::new(breakpoints.clone(), pieces)?;
        let name = format!("table({} pieces)", poly.pieces.len());
        let primitive = poly.antiderivative();
        let jumps: Vec<f64> = breakpoints
            .iter()
            .copied()
            .filter(|&b| {
                let left = poly.eval_piece(poly.piece_left_of(b), b);
                let right = poly.eval(b);
                (left - right).abs() > 1e-12 * left.abs().max(right.abs()).max(1.0)
            })
            .collect();
        let growth = poly.growth_estimate();
        let p_eval = poly.clone();
        let p_low = poly.clone();
        let p_high = poly.clone();
        let prim = primitive.clone();
        Ok(Self {
            name,
            f: Arc::new(move |s| p_eval.eval(s)),
            f_lower: Arc::new(move |s| p_low.envelope(s).0),
            f_upper: Arc::new(move |s| p_high.envelope(s).1),
            primitive: Some(Arc::new(move |s| prim.eval(s))),
            growth,
            jump_points: jumps,
            tau,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn f(&self, s: f64) -> f64 {
        (self.f)(s)
    }

    pub fn f_lower(&self, s: f64) -> f64 {
        (self.f_lower)(s)
    }

    pub fn f_upper(&self, s: f64) -> f64 {
        (self.f_upper)(s)
    }

    pub fn growth(&self) -> GrowthBounds {
        self.growth
    }

    pub fn jump_points(&self) -> &[f64] {
        &self.jump_points
    }

    pub fn has_jumps(&self) -> bool {
        !self.jump_points.is_empty()
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// F(s) = ∫₀^s f; closed form when available, adaptive quadrature
    /// split at jump points otherwise.
    pub fn primitive(&self, s: f64) -> f64 {
        match &self.primitive {
            Some(p) => p(s),
            None => integrate_with_jumps(self.f.as_ref(), 0.0, s, &self.jump_points, 1e-12),
        }
    }

    pub fn pointwise(&self) -> PointwiseFn {
        self.f.clone()
    }
}

/// Polynomial pieces on [0, b₁), [b₁, b₂), …, [b_p, ∞); zero on s < 0.
#[derive(Clone, Debug)]
pub struct PiecewisePoly {
    breaks: Vec<f64>,
    pieces: Vec<Vec<f64>>,
}

impl PiecewisePoly {
    pub fn new(breaks: Vec<f64>, pieces: Vec<Vec<f64>>) -> Result<Self> {
        if pieces.len() != breaks.len() + 1 {
            return Err(Error::NonadmissibleExponents {
                details: format!(
                    "piecewise table needs {} pieces for {} breakpoints, got {}",
                    breaks.len() + 1,
                    breaks.len(),
                    pieces.len()
                ),
            });
        }
        if !breaks.windows(2).all(|w| w[1] > w[0]) || breaks.iter().any(|&b| b <= 0.0) {
            return Err(Error::NonadmissibleExponents {
                details: "breakpoints must be positive and strictly increasing".into(),
            });
        }
        Ok(Self { breaks, pieces })
    }

    fn piece_index(&self, s: f64) -> usize {
        self.breaks.iter().take_while(|&&b| s >= b).count()
    }

    fn piece_left_of(&self, b: f64) -> usize {
        self.breaks.iter().take_while(|&&x| b > x).count()
    }

    fn eval_piece(&self, idx: usize, s: f64) -> f64 {
        let mut acc = 0.0;
        for &c in self.pieces[idx].iter().rev() {
            acc = acc * s + c;
        }
        acc
    }

    pub fn eval(&self, s: f64) -> f64 {
        if s < 0.0 {
            return 0.0;
        }
        self.eval_piece(self.piece_index(s), s)
    }

    /// (lower, upper) Clarke envelope: differs from eval only at jumps.
    pub fn envelope(&self, s: f64) -> (f64, f64) {
        if s < 0.0 {
            return (0.0, 0.0);
        }
        let v = self.eval(s);
        for (j, &b) in self.breaks.iter().enumerate() {
            if s == b {
                let left = self.eval_piece(j, s);
                return (left.min(v), left.max(v));
            }
        }
        (v, v)
    }

    /// Piecewise antiderivative with P(0) = 0, continuous at breakpoints.
    pub fn antiderivative(&self) -> PiecewisePoly {
        let mut pieces = Vec::with_capacity(self.pieces.len());
        let mut offset = 0.0;
        let mut lower = 0.0;
        for (j, piece) in self.pieces.iter().enumerate() {
            let mut anti = vec![0.0; piece.len() + 1];
            for (k, &c) in piece.iter().enumerate() {
                anti[k + 1] = c / (k + 1) as f64;
            }
            // constant so the running primitive is continuous
            let at_lower: f64 = anti
                .iter()
                .rev()
                .fold(0.0, |acc, &c| acc * lower + c);
            anti[0] = offset - at_lower;
            let upper = self.breaks.get(j).copied();
            if let Some(b) = upper {
                offset = anti.iter().rev().fold(0.0, |acc, &c| acc * b + c);
                lower = b;
            }
            pieces.push(anti);
        }
        PiecewisePoly { breaks: self.breaks.clone(), pieces }
    }

    /// Conservative growth constants sampled from the coefficients.
    fn growth_estimate(&self) -> GrowthBounds {
        let degree = self
            .pieces
            .iter()
            .map(|p| p.len().saturating_sub(1))
            .max()
            .unwrap_or(1)
            .max(2);
        let coef_sum: f64 = self
            .pieces
            .iter()
            .flat_map(|p| p.iter())
            .map(|c| c.abs())
            .sum();
        GrowthBounds {
            a: coef_sum + 1.0,
            b: coef_sum + 1.0,
            q: degree as f64,
        }
    }
}

/// Adaptive Simpson quadrature.
fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
    }
    #[allow(clippy::too_many_arguments)]
    fn rec(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        tol: f64,
        depth: usize,
    ) -> f64 {
        let (left, lm, flm) = simpson(f, a, fa, m, fm);
        let (right, rm, frm) = simpson(f, m, fm, b, fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        rec(f, a, fa, m, fm, left, lm, flm, tol / 2.0, depth - 1)
            + rec(f, m, fm, b, fb, right, rm, frm, tol / 2.0, depth - 1)
    }
    if a == b {
        return 0.0;
    }
    let (fa, fb) = (f(a), f(b));
    let (whole, m, fm) = simpson(f, a, fa, b, fb);
    rec(f, a, fa, b, fb, whole, m, fm, tol, 40)
}

/// ∫_a^b f split at interior jump points.
pub fn integrate_with_jumps(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    jumps: &[f64],
    tol: f64,
) -> f64 {
    let (lo, hi, sign) = if a <= b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut cuts: Vec<f64> = jumps.iter().copied().filter(|&j| j > lo && j < hi).collect();
    cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let mut total = 0.0;
    let mut left = lo;
    for c in cuts {
        total += adaptive_simpson(f, left, c, tol);
        left = c;
    }
    total += adaptive_simpson(f, left, hi, tol);
    sign * total
}

/// Report of one sampled nonlinearity condition.
#[derive(Debug, Clone)]
pub struct ConditionReport {
    pub name: String,
    pub pass: bool,
    pub margin: f64,
    pub witness: Option<String>,
}

/// Diagnostic report of the sampled conditions (f₁), growth, (f₃), G(τ).
#[derive(Debug, Clone)]
pub struct NonlinearityReport {
    pub conditions: Vec<ConditionReport>,
}

impl NonlinearityReport {
    pub fn all_pass(&self) -> bool {
        self.conditions.iter().all(|c| c.pass)
    }
}

/// Sample the nonlinearity hypotheses.
///
/// `p0` is the absorption exponent of the family (2 for the classical
/// and fractional problems, p₁ for the anisotropic one): (f₁) asks
/// f(s)/s^{p0−1} → 0 at the origin and G(τ) = F(τ) − τ^{p0}/p0 > 0.
pub fn validate_nonlinearity(spec: &NonlinearitySpec, p0: f64) -> NonlinearityReport {
    let mut conditions = Vec::new();

    // (f₁): vanishing relative to s^{p0−1} on a dyadic sequence.
    {
        let ratios: Vec<f64> = (4..=44)
            .map(|k| {
                let s = 2.0_f64.powi(-k);
                (spec.f(s) / s.powf(p0 - 1.0)).abs()
            })
            .collect();
        let first = ratios[0];
        let last = *ratios.last().unwrap();
        let pass = last <= 1e-3 && (first == 0.0 || last <= 0.1 * first.max(1e-12));
        conditions.push(ConditionReport {
            name: "f1: f(s)/s^{p0-1} -> 0 as s -> 0".into(),
            pass,
            margin: last,
            witness: (!pass).then(|| format!("ratio {last:e} at s = 2^-44")),
        });
    }

    // growth (f₂)/(f₇): |f(s)| <= A|s| + B|s|^q on a log grid.
    {
        let g = spec.growth();
        let mut worst = f64::MIN;
        let mut witness = None;
        for i in 0..200 {
            let s = 10f64.powf(-6.0 + 12.0 * i as f64 / 199.0);
            let bound = g.a * s.abs() + g.b * s.abs().powf(g.q);
            let excess = (spec.f(s).abs() - bound) / bound;
            if excess > worst {
                worst = excess;
                if excess > 1e-12 {
                    witness = Some(format!("|f({s:e})| exceeds bound by {excess:e}"));
                }
            }
        }
        conditions.push(ConditionReport {
            name: format!(
                "f7: |f(s)| <= {:.3}|s| + {:.3}|s|^{:.3}",
                g.a, g.b, g.q
            ),
            pass: worst <= 1e-12,
            margin: worst,
            witness,
        });
    }

    // (f₃): positivity for s > 0.
    {
        let mut pass = true;
        let mut witness = None;
        let mut worst = f64::MAX;
        for i in 0..200 {
            let s = 10f64.powf(-6.0 + 12.0 * i as f64 / 199.0);
            let v = spec.f(s);
            worst = worst.min(v);
            if v <= 0.0 {
                pass = false;
                witness.get_or_insert_with(|| format!("f({s:e}) = {v:e}"));
            }
        }
        conditions.push(ConditionReport {
            name: "f3: f(s) > 0 for s > 0".into(),
            pass,
            margin: worst,
            witness,
        });
    }

    // (f₄): G(τ) > 0, with F by adaptive quadrature (independent of the
    // closed-form primitive).
    {
        let tau = spec.tau();
        let f = |s: f64| spec.f(s);
        let f_tau = integrate_with_jumps(&f, 0.0, tau, spec.jump_points(), 1e-12);
        let g_tau = f_tau - tau.powf(p0) / p0;
        conditions.push(ConditionReport {
            name: format!("f4: G(tau) > 0 at tau = {tau}"),
            pass: g_tau > 0.0,
            margin: g_tau,
            witness: (g_tau <= 0.0).then(|| format!("G({tau}) = {g_tau:e}")),
        });
    }

    NonlinearityReport { conditions }
}

/// A continuous surrogate obtained by box-averaging f over [s−ε, s+ε].
#[derive(Clone)]
pub struct MollifiedNonlinearity {
    base: NonlinearitySpec,
    epsilon: f64,
    smooth: NonlinearitySpec,
}

impl std::fmt::Debug for MollifiedNonlinearity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MollifiedNonlinearity")
            .field("base", &self.base)
            .field("epsilon", &self.epsilon)
            .finish()
    }
}

impl MollifiedNonlinearity {
    pub fn base(&self) -> &NonlinearitySpec {
        &self.base
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// The mollified spec (continuous; no jump points).
    pub fn spec(&self) -> &NonlinearitySpec {
        &self.smooth
    }

    pub fn f_eps(&self, s: f64) -> f64 {
        self.smooth.f(s)
    }
}

/// Box-kernel mollification of width ε.
///
/// The jump part Σ hⱼ 𝟙{s ≥ aⱼ} is replaced by its exact window average
/// (the linear ramp over [aⱼ−ε, aⱼ+ε]); the continuous part is left
/// untouched. Hence f_ε equals f exactly at distance ≥ ε from every jump
/// point, takes the midpoint value (f(a−)+f(a+))/2 at the jump, and its
/// primitive is F plus piecewise-quadratic corrections in closed form.
/// A spec without jumps is returned unchanged.
pub fn mollify(spec: &NonlinearitySpec, eps: f64) -> Result<MollifiedNonlinearity> {
    if !spec.has_jumps() {
        return Ok(MollifiedNonlinearity {
            base: spec.clone(),
            epsilon: eps,
            smooth: spec.clone(),
        });
    }
    if !(eps > 0.0) {
        return Err(Error::EpsilonTooLarge {
            eps,
            details: "width must be positive".into(),
        });
    }
    let mut gaps: Vec<f64> = spec.jump_points().iter().map(|a| a.abs()).collect();
    let mut sorted = spec.jump_points().to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for w in sorted.windows(2) {
        gaps.push(w[1] - w[0]);
    }
    let min_gap = gaps.iter().copied().fold(f64::INFINITY, f64::min);
    if eps >= 0.5 * min_gap {
        return Err(Error::EpsilonTooLarge {
            eps,
            details: format!("minimal gap between jump points and 0 is {min_gap:e}"),
        });
    }

    // signed jump heights from one-sided limits just outside the window
    let delta = eps * 1e-9;
    let jumps: Vec<(f64, f64)> = sorted
        .iter()
        .map(|&a| (a, spec.f(a + delta) - spec.f(a - delta)))
        .collect();

    // ramp((s−a)/ε) − step(s−a) and its primitive, both supported in the
    // window
    let ramp_minus_step = move |s: f64, a: f64| -> f64 {
        if (s - a).abs() >= eps {
            0.0
        } else {
            (s - a + eps) / (2.0 * eps) - f64::from(u8::from(s >= a))
        }
    };
    let ramp_primitive_minus_step_primitive = move |s: f64, a: f64| -> f64 {
        if s <= a - eps {
            0.0
        } else {
            let ramp_part = if s >= a + eps {
                s - a
            } else {
                let w = s - a + eps;
                w * w / (4.0 * eps)
            };
            ramp_part - (s - a).max(0.0)
        }
    };

    let base = spec.clone();
    let f_spec = spec.clone();
    let jumps_f = jumps.clone();
    let f_eps: PointwiseFn = Arc::new(move |s| {
        let mut v = f_spec.f(s);
        for &(a, h) in &jumps_f {
            v += h * ramp_minus_step(s, a);
        }
        v
    });
    let prim_spec = spec.clone();
    let jumps_p = jumps.clone();
    let primitive: PointwiseFn = Arc::new(move |s| {
        let mut v = prim_spec.primitive(s);
        for &(a, h) in &jumps_p {
            v += h * ramp_primitive_minus_step_primitive(s, a);
        }
        v
    });
    let g = spec.growth();
    let smooth = NonlinearitySpec {
        name: format!("{}+mollified(eps={eps:e})", spec.name()),
        f: f_eps.clone(),
        f_lower: f_eps.clone(),
        f_upper: f_eps.clone(),
        primitive: Some(primitive),
        growth: GrowthBounds { a: g.a, b: g.b + 1.0, q: g.q },
        jump_points: Vec::new(),
        tau: spec.tau(),
    };
    Ok(MollifiedNonlinearity { base, epsilon: eps, smooth })
}

/// Measure of the set where the Euler–Lagrange residual leaves the
/// Clarke interval: Σ of cell volumes with
/// residual(x) ∉ [f̲(u(x)) − tol, f̄(u(x)) + tol].
pub fn inclusion_check(
    spec: &NonlinearitySpec,
    u: &GridFunction,
    residual: &GridFunction,
    tol: f64,
) -> Result<f64> {
    if u.grid() != residual.grid() {
        return Err(Error::GridMismatch {
            details: "inclusion check: residual on a different grid".into(),
        });
    }
    let weights = u.grid().weights_vec();
    let mut measure = 0.0;
    for ((&uv, &rv), w) in u.values().iter().zip(residual.values()).zip(weights) {
        let lo = spec.f_lower(uv) - tol;
        let hi = spec.f_upper(uv) + tol;
        if rv < lo || rv > hi {
            measure += w;
        }
    }
    Ok(measure)
}
