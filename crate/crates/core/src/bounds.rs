//! Right-hand sides of the weighted trapezoidal inequalities and their
//! verdicts against the measured gap.
//!
//! All bounds here assume a weight `g` that is nonnegative and symmetric
//! about the midpoint of `[a, b]`. Hypotheses on `f` (h-convexity of `|f′|`,
//! derivative bounds, Lipschitz `f′`) are spot-checked and reported as
//! warnings; the bound value is returned regardless.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fejer::{
    holder_factor, check_conjugate, m_abs_integral, m_integral, m_value, trapezoid_gap,
    BoundReport, ProblemSpec,
};
use crate::hconvexity::check_h_convex;
use crate::integrate::{integrate, q_norm};
use crate::kernel::HKernel;

const HYPOTHESIS_GRID: usize = 21;
const SAMPLE_GRID: usize = 201;

/// Constants `m <= f′(x) <= M` on `[a, b]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivBounds {
    pub m_lo: f64,
    pub m_hi: f64,
}

impl DerivBounds {
    pub fn new(m_lo: f64, m_hi: f64) -> Result<Self> {
        if !(m_lo < m_hi) {
            return Err(Error::param(format!("derivative bounds need m < M, got ({m_lo}, {m_hi})")));
        }
        Ok(DerivBounds { m_lo, m_hi })
    }
}

/// Lipschitz constant `K > 0` of `f′`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LipschitzConstant(f64);

impl LipschitzConstant {
    pub fn new(k: f64) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::param(format!("Lipschitz constant must be > 0, got {k}")));
        }
        Ok(LipschitzConstant(k))
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// `f((a+b)/2)∫g`, `∫fg` and `(f(a)+f(b))/2 ∫g`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FejerTriple {
    pub lower: f64,
    pub middle: f64,
    pub upper: f64,
}

impl FejerTriple {
    pub fn left_holds(&self, tol: f64) -> bool {
        self.lower <= self.middle + tol
    }

    pub fn right_holds(&self, tol: f64) -> bool {
        self.middle <= self.upper + tol
    }
}

pub fn fejer_triple(p: &ProblemSpec) -> Result<FejerTriple> {
    p.require_symmetric()?;
    p.require_nonnegative()?;
    let mass = p.weight_integral()?;
    let middle = integrate(|x| Ok(p.f_at(x)? * p.g_at(x)?), p.a, p.b, &p.settings)?;
    Ok(FejerTriple {
        lower: p.f_at(p.midpoint())? * mass,
        middle,
        upper: 0.5 * (p.f_at(p.a)? + p.f_at(p.b)?) * mass,
    })
}

fn require_weight(p: &ProblemSpec) -> Result<()> {
    p.require_symmetric()?;
    p.require_nonnegative()
}

pub(crate) fn hypothesis_warning(p: &ProblemSpec, h: &HKernel) -> Option<String> {
    match check_h_convex(|x| Ok(p.fprime_at(x)?.abs()), h, p.a, p.b, HYPOTHESIS_GRID) {
        Ok(r) if r.passed() => None,
        Ok(r) => Some(format!("|f'| is not {h}-convex on [{}, {}]: {}", p.a, p.b, r.summary())),
        Err(e) => Some(format!("could not check h-convexity of |f'|: {e}")),
    }
}

/// `∫ g(x) S(u(x)) dx` over one half of `[a, b]`, with `S` the cumulative
/// kernel sum and `u` the normalized distance to the near endpoint.
pub(crate) fn half_weight_integral(p: &ProblemSpec, h: &HKernel, right: bool) -> Result<f64> {
    let w = p.width();
    let (lo, hi) = if right { (p.midpoint(), p.b) } else { (p.a, p.midpoint()) };
    integrate(
        |x| {
            let u = if right { (p.b - x) / w } else { (x - p.a) / w };
            Ok(p.g_at(x)? * h.sum_cumulative(u.clamp(0.0, 1.0), &p.settings)?)
        },
        lo,
        hi,
        &p.settings,
    )
}

/// `|gap| <= (b−a)(|f′(a)|+|f′(b)|) ∫ₐ^{(a+b)/2} g(x) S((x−a)/(b−a)) dx`
/// for `|f′|` h-convex.
pub fn bound_h_convex(p: &ProblemSpec, h: &HKernel) -> Result<BoundReport> {
    require_weight(p)?;
    h.ensure_integrable()?;
    let bound = p.width() * p.endpoint_slope_sum()? * half_weight_integral(p, h, false)?;
    let mut r = BoundReport::new(format!("h-convex ({h})"), trapezoid_gap(p)?.abs(), bound);
    r.warnings.extend(hypothesis_warning(p, h));
    Ok(r)
}

/// Same bound with the weight integral taken over the right half.
pub fn bound_h_convex_mirror(p: &ProblemSpec, h: &HKernel) -> Result<BoundReport> {
    require_weight(p)?;
    h.ensure_integrable()?;
    let bound = p.width() * p.endpoint_slope_sum()? * half_weight_integral(p, h, true)?;
    let mut r = BoundReport::new(format!("h-convex mirrored ({h})"), trapezoid_gap(p)?.abs(), bound);
    r.warnings.extend(hypothesis_warning(p, h));
    Ok(r)
}

/// s-convex form with the kernel integral expanded:
/// `(b−a)/(1+s) (|f′(a)|+|f′(b)|) ∫ₐ^{(a+b)/2} g(x) [u^{1+s} − (1−u)^{1+s} + 1] dx`.
pub fn bound_s_convex(p: &ProblemSpec, s: f64) -> Result<BoundReport> {
    if !(s > 0.0 && s <= 1.0) {
        return Err(Error::param(format!("s-convexity needs s in (0, 1], got {s}")));
    }
    require_weight(p)?;
    let w = p.width();
    let e = 1.0 + s;
    let weight = integrate(
        |x| {
            let u = (x - p.a) / w;
            Ok(p.g_at(x)? * (u.powf(e) - (1.0 - u).powf(e) + 1.0))
        },
        p.a,
        p.midpoint(),
        &p.settings,
    )?;
    let bound = w / e * p.endpoint_slope_sum()? * weight;
    let mut r = BoundReport::new(format!("s-convex (s={s})"), trapezoid_gap(p)?.abs(), bound);
    r.warnings.extend(hypothesis_warning(p, &HKernel::Power(s)));
    Ok(r)
}

/// `(|f′(a)|+|f′(b)|) ∫ₐ^{(a+b)/2} g(x)(x−a) dx` for convex `|f′|`.
pub fn bound_convex_left(p: &ProblemSpec) -> Result<BoundReport> {
    require_weight(p)?;
    let weight = integrate(|x| Ok(p.g_at(x)? * (x - p.a)), p.a, p.midpoint(), &p.settings)?;
    let mut r = BoundReport::new(
        "convex (left half)",
        trapezoid_gap(p)?.abs(),
        p.endpoint_slope_sum()? * weight,
    );
    r.warnings.extend(hypothesis_warning(p, &HKernel::Power(1.0)));
    Ok(r)
}

/// `(|f′(a)|+|f′(b)|) ∫_{(a+b)/2}^b g(x)(b−x) dx` for convex `|f′|`.
pub fn bound_convex_right(p: &ProblemSpec) -> Result<BoundReport> {
    require_weight(p)?;
    let weight = integrate(|x| Ok(p.g_at(x)? * (p.b - x)), p.midpoint(), p.b, &p.settings)?;
    let mut r = BoundReport::new(
        "convex (right half)",
        trapezoid_gap(p)?.abs(),
        p.endpoint_slope_sum()? * weight,
    );
    r.warnings.extend(hypothesis_warning(p, &HKernel::Power(1.0)));
    Ok(r)
}

/// Unweighted convex bound `(b−a)(|f′(a)|+|f′(b)|)/8`, applied to the gap
/// normalized by `b − a`. Only meaningful for `g ≡ 1`.
pub fn bound_convex_unweighted(p: &ProblemSpec) -> Result<BoundReport> {
    let w = p.width();
    let mut r = BoundReport::new(
        "convex, unit weight: (b-a)(|f'(a)|+|f'(b)|)/8",
        trapezoid_gap(p)?.abs() / w,
        w * p.endpoint_slope_sum()? / 8.0,
    );
    let unit = (0..=10).all(|i| {
        let x = p.a + w * i as f64 / 10.0;
        p.g_at(x).map_or(false, |v| (v - 1.0).abs() < 1e-12)
    });
    if !unit {
        r.warn("weight is not identically 1; the unweighted form does not apply");
    }
    r.warnings.extend(hypothesis_warning(p, &HKernel::Power(1.0)));
    Ok(r)
}

/// Primary bounded-derivative bound with its `‖g‖∞` and Hölder companions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivativeBoundReports {
    pub primary: BoundReport,
    pub sup_form: BoundReport,
    pub holder_form: BoundReport,
}

impl DerivativeBoundReports {
    pub fn all(&self) -> [&BoundReport; 3] {
        [&self.primary, &self.sup_form, &self.holder_form]
    }
}

/// For `m <= f′ <= M`:
///
/// ```text
/// |gap/(b−a) − (b−a)(m+M)/4 ∫₀¹M| <= (M−m)(b−a)/4 ∫₀¹|M|
///                                 <= (M−m)(b−a)/8 ‖g‖∞
///                                 <= (M−m)(b−a)/2 ‖G‖_q ∫₀¹|t−½|^{1/p}
/// ```
///
/// The companion forms use `(p, q) = holder` and need symmetric `g`.
pub fn bound_bounded_derivative(
    p: &ProblemSpec,
    d: DerivBounds,
    holder: (f64, f64),
) -> Result<DerivativeBoundReports> {
    check_conjugate(holder.0, holder.1)?;
    let w = p.width();
    let spread = d.m_hi - d.m_lo;
    let offset = w * (d.m_lo + d.m_hi) / 4.0 * m_integral(p)?;
    let measured = (trapezoid_gap(p)? / w - offset).abs();

    let mut warnings = Vec::new();
    let mut worst = 0.0f64;
    for i in 0..SAMPLE_GRID {
        let x = p.a + w * i as f64 / (SAMPLE_GRID - 1) as f64;
        let v = p.fprime_at(x)?;
        worst = worst.max(d.m_lo - v).max(v - d.m_hi);
    }
    if worst > 1e-12 {
        warnings.push(format!(
            "f' leaves [{}, {}] on the sample grid by up to {worst:e}",
            d.m_lo, d.m_hi
        ));
    }
    if !p.g_symmetric {
        warnings.push("g is not symmetric; the sup-norm and Hölder forms do not apply".to_string());
    }

    let mut primary = BoundReport::new(
        "bounded derivative",
        measured,
        spread * w / 4.0 * m_abs_integral(p)?,
    );
    let mut sup_form = BoundReport::new(
        "bounded derivative, sup-norm form",
        measured,
        spread * w / 8.0 * p.sup_g()?,
    );
    let norm = q_norm(|s| p.g_param(s), holder.1, &p.settings)?;
    let mut holder_form = BoundReport::new(
        format!("bounded derivative, Hölder form (p={}, q={})", holder.0, holder.1),
        measured,
        spread * w / 2.0 * norm * holder_factor(holder.0),
    );
    for r in [&mut primary, &mut sup_form, &mut holder_form] {
        r.warnings = warnings.clone();
    }
    Ok(DerivativeBoundReports {
        primary,
        sup_form,
        holder_form,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LipschitzBoundReports {
    pub primary: BoundReport,
    pub sup_form: BoundReport,
}

/// For `f′` Lipschitz with constant `K`:
///
/// ```text
/// |gap/(b−a) − (b−a)/2 f′((a+b)/2) ∫₀¹M| <= K(b−a)²/2 ∫₀¹ |t−½||M(t)| dt
///                                        <= K(b−a)² ‖g‖∞ / 12
/// ```
pub fn bound_lipschitz(p: &ProblemSpec, k: LipschitzConstant) -> Result<LipschitzBoundReports> {
    let k = k.get();
    let w = p.width();
    let offset = w / 2.0 * p.fprime_at(p.midpoint())? * m_integral(p)?;
    let measured = (trapezoid_gap(p)? / w - offset).abs();
    let weighted = {
        let integrand = |t: f64| Ok((t - 0.5).abs() * m_value(p, t)?.abs());
        integrate(integrand, 0.0, 0.5, &p.settings)? + integrate(integrand, 0.5, 1.0, &p.settings)?
    };

    let mut warnings = Vec::new();
    let n = 41;
    let xs: Vec<f64> = (0..n).map(|i| p.a + w * i as f64 / (n - 1) as f64).collect();
    let ds = xs.iter().map(|&x| p.fprime_at(x)).collect::<Result<Vec<_>>>()?;
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((ds[i] - ds[j]).abs() - k * (xs[i] - xs[j]).abs());
        }
    }
    if worst > 1e-9 * (1.0 + k) {
        warnings.push(format!("f' violates the Lipschitz constant {k} by up to {worst:e}"));
    }

    let mut primary = BoundReport::new("Lipschitz derivative", measured, k * w * w / 2.0 * weighted);
    let mut sup_form = BoundReport::new(
        "Lipschitz derivative, sup-norm form",
        measured,
        k * w * w * p.sup_g()? / 12.0,
    );
    if !p.g_symmetric {
        sup_form.warn("g is not symmetric; the sup-norm form does not apply");
    }
    primary.warnings.extend(warnings.iter().cloned());
    sup_form.warnings.extend(warnings);
    Ok(LipschitzBoundReports { primary, sup_form })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prob(f: &str, fp: &str, g: &str, a: f64, b: f64) -> ProblemSpec {
        ProblemSpec::parse(f, Some(fp), g, a, b).unwrap()
    }

    fn pw(k: f64) -> HKernel {
        HKernel::new_power(k).unwrap()
    }

    #[test]
    fn triple_examples() {
        let t = fejer_triple(&prob("x^2", "2*x", "1", 0.0, 1.0)).unwrap();
        assert!((t.lower - 0.25).abs() < 1e-15);
        assert!((t.middle - 1.0 / 3.0).abs() < 1e-14);
        assert!((t.upper - 0.5).abs() < 1e-15);
        let t = fejer_triple(&prob("x", "1", "1", 0.0, 1.0)).unwrap();
        assert!((t.lower - 0.5).abs() < 1e-15 && (t.middle - 0.5).abs() < 1e-14);
        assert!((t.upper - 0.5).abs() < 1e-15);
        // ∫₀¹ 6x³(1−x) dx = 6(1/4 − 1/5) = 0.3
        let t = fejer_triple(&prob("x^2", "2*x", "6*x*(1-x)", 0.0, 1.0)).unwrap();
        assert!((t.lower - 0.25).abs() < 1e-14);
        assert!((t.middle - 0.3).abs() < 1e-14);
        assert!((t.upper - 0.5).abs() < 1e-14);
        assert!(t.left_holds(0.0) && t.right_holds(0.0));
    }

    #[test]
    fn h_convex_examples() {
        let r = bound_h_convex(&prob("x^2", "2*x", "1", 0.0, 1.0), &pw(1.0)).unwrap();
        assert!((r.measured - 1.0 / 6.0).abs() < 1e-14);
        assert!((r.bound - 0.25).abs() < 1e-14);
        assert!(r.satisfied && r.warnings.is_empty());

        let c = bound_h_convex(&prob("4", "0", "x*(3-x)", 0.0, 3.0), &pw(0.5)).unwrap();
        assert_eq!(c.measured, 0.0);
        assert_eq!(c.bound, 0.0);

        let s = bound_h_convex(&prob("(2/3)*x^1.5", "x^0.5", "1", 0.0, 1.0), &pw(0.5)).unwrap();
        assert!((s.measured - 1.0 / 15.0).abs() < 1e-12);
        // (1/1.5)[(½)^2.5/2.5 + ½ − (1 − (½)^2.5)/2.5]
        let q = 0.5f64.powf(2.5) / 2.5;
        let oracle = (q + 0.5 - (0.4 - q)) / 1.5;
        assert!((s.bound - oracle).abs() < 1e-9);
        assert!((s.bound - 0.160947).abs() < 1e-6);
        assert!(s.satisfied && s.warnings.is_empty(), "{:?}", s.warnings);
    }

    #[test]
    fn mirror_examples() {
        let sq = prob("x^2", "2*x", "1", 0.0, 1.0);
        let m = bound_h_convex_mirror(&sq, &pw(1.0)).unwrap();
        assert!((m.bound - 0.25).abs() < 1e-14);
        let ex = prob("exp(x)", "exp(x)", "x*(2-x)", 0.0, 2.0);
        let d = bound_h_convex(&ex, &pw(1.0)).unwrap();
        let m = bound_h_convex_mirror(&ex, &pw(1.0)).unwrap();
        assert!((d.bound - m.bound).abs() < 1e-8);
        assert_eq!(bound_h_convex_mirror(&prob("2", "0", "1", 0.0, 1.0), &pw(1.0)).unwrap().measured, 0.0);
    }

    #[test]
    fn requires_symmetric_weight_and_integrable_kernel() {
        let skew = prob("x^2", "2*x", "x", 0.0, 1.0);
        assert!(matches!(bound_h_convex(&skew, &pw(1.0)), Err(Error::SymmetryViolation { .. })));
        let sq = prob("x^2", "2*x", "1", 0.0, 1.0);
        assert!(matches!(
            bound_h_convex(&sq, &pw(-1.0)),
            Err(Error::NonIntegrableKernel { .. })
        ));
    }

    #[test]
    fn s_convex_examples() {
        let r = bound_s_convex(&prob("x^2", "2*x", "1", 0.0, 1.0), 1.0).unwrap();
        assert!((r.bound - 0.25).abs() < 1e-14);
        let r = bound_s_convex(&prob("(2/3)*x^1.5", "x^0.5", "1", 0.0, 1.0), 0.5).unwrap();
        assert!((r.bound - 0.160947).abs() < 1e-6);
        assert_eq!(bound_s_convex(&prob("1", "0", "1", 0.0, 1.0), 0.3).unwrap().measured, 0.0);
        assert!(bound_s_convex(&prob("1", "0", "1", 0.0, 1.0), 1.5).is_err());
        assert!(bound_s_convex(&prob("1", "0", "1", 0.0, 1.0), 0.0).is_err());
    }

    #[test]
    fn convex_examples() {
        let sq = prob("x^2", "2*x", "1", 0.0, 1.0);
        for r in [bound_convex_left(&sq).unwrap(), bound_convex_right(&sq).unwrap()] {
            assert!((r.bound - 0.25).abs() < 1e-14);
        }
        let ex = prob("exp(x)", "exp(x)", "1", 0.0, 2.0);
        let r = bound_convex_left(&ex).unwrap();
        assert!((r.measured - 2.0).abs() < 1e-12);
        // weighted form with g ≡ 1 is (b−a)² slope / 8; dividing by b−a recovers the classical form
        let oracle = 4.0 * (1.0 + 2f64.exp()) / 8.0;
        assert!((r.bound - oracle).abs() < 1e-9);
        assert!((r.bound / ex.width() - 2.097264).abs() < 1e-6);
        assert!(r.satisfied);
        assert!(bound_convex_right(&prob("3*x+1", "3", "1", 0.0, 2.0)).unwrap().measured < 1e-14);
    }

    #[test]
    fn unweighted_recapture() {
        let ex = prob("exp(x)", "exp(x)", "1", 0.0, 2.0);
        let r = bound_convex_unweighted(&ex).unwrap();
        assert!((r.measured - 1.0).abs() < 1e-12);
        assert!((r.bound - 2.0 * (1.0 + 2f64.exp()) / 8.0).abs() < 1e-12);
        assert!(r.warnings.is_empty());
        let w = bound_convex_unweighted(&prob("x^2", "2*x", "x*(1-x)", 0.0, 1.0)).unwrap();
        assert!(!w.warnings.is_empty());
    }

    #[test]
    fn bounded_derivative_examples() {
        let sq = prob("x^2", "2*x", "1", 0.0, 1.0);
        let r = bound_bounded_derivative(&sq, DerivBounds::new(0.0, 2.0).unwrap(), (2.0, 2.0)).unwrap();
        assert!((r.primary.measured - 1.0 / 6.0).abs() < 1e-12);
        assert!((r.primary.bound - 0.25).abs() < 1e-12);
        assert!((r.sup_form.bound - 0.25).abs() < 1e-12);
        assert!(r.all().iter().all(|b| b.satisfied && b.warnings.is_empty()));

        let eps = 1e-3;
        let lin = prob("2*x + 1", "2", "1", 0.0, 1.0);
        let r = bound_bounded_derivative(&lin, DerivBounds::new(2.0 - eps, 2.0 + eps).unwrap(), (2.0, 2.0))
            .unwrap();
        assert!(r.primary.measured < 1e-12 && r.primary.bound <= eps);

        let ex = prob("exp(x)", "exp(x)", "1", 0.0, 2.0);
        let r = bound_bounded_derivative(&ex, DerivBounds::new(1.0, 2f64.exp()).unwrap(), (2.0, 2.0))
            .unwrap();
        assert!((r.primary.measured - 1.0).abs() < 1e-10);
        let oracle = (2f64.exp() - 1.0) * 2.0 / 4.0 * 0.5;
        assert!((r.primary.bound - oracle).abs() < 1e-10 && (oracle - 1.597264).abs() < 1e-6);
        assert!(r.primary.satisfied);

        let bad = bound_bounded_derivative(&ex, DerivBounds::new(1.0, 2.0).unwrap(), (2.0, 2.0)).unwrap();
        assert!(!bad.primary.warnings.is_empty());
        assert!(DerivBounds::new(2.0, 1.0).is_err());
    }

    #[test]
    fn lipschitz_examples() {
        let sq = prob("x^2", "2*x", "1", 0.0, 1.0);
        let r = bound_lipschitz(&sq, LipschitzConstant::new(2.0).unwrap()).unwrap();
        assert!((r.primary.measured - 1.0 / 6.0).abs() < 1e-12);
        // ∫₀¹ |t−½||1−2t| dt = 2∫(t−½)² = 1/6
        assert!((r.primary.bound - 1.0 / 6.0).abs() < 1e-9);
        assert!((r.sup_form.bound - 1.0 / 6.0).abs() < 1e-9);
        assert!(r.primary.satisfied && r.sup_form.satisfied);

        let lin = prob("5*x", "5", "1", 0.0, 1.0);
        assert!(bound_lipschitz(&lin, LipschitzConstant::new(0.3).unwrap()).unwrap().primary.measured < 1e-12);
        assert!(LipschitzConstant::new(0.0).is_err());

        let loose = bound_lipschitz(&sq, LipschitzConstant::new(1.0).unwrap()).unwrap();
        assert!(!loose.primary.warnings.is_empty());
    }

    #[test]
    fn lipschitz_scales_with_squared_width() {
        // f = x² on [0, 2]: gap/(b−a) = 2/3 and K(b−a)²/2 ∫|t−½||1−2t| = 2·4/2·1/6 = 2/3
        let p = prob("x^2", "2*x", "1", 0.0, 2.0);
        let r = bound_lipschitz(&p, LipschitzConstant::new(2.0).unwrap()).unwrap();
        assert!((r.primary.measured - 2.0 / 3.0).abs() < 1e-12);
        assert!((r.primary.bound - 2.0 / 3.0).abs() < 1e-9);
        assert!(r.primary.satisfied);
        // a bound linear in (b−a) would give 1/3 here, below the measured gap
        assert!(r.primary.bound / p.width() < r.primary.measured);
    }

    #[test]
    fn offset_terms_survive_skew_weights() {
        let p = prob("x^2", "2*x", "x + 1", 0.0, 3.0);
        let d = bound_bounded_derivative(&p, DerivBounds::new(0.0, 6.0).unwrap(), (2.0, 2.0)).unwrap();
        assert!(d.primary.satisfied, "{:?}", d.primary);
        let l = bound_lipschitz(&p, LipschitzConstant::new(2.0).unwrap()).unwrap();
        assert!(l.primary.satisfied, "{:?}", l.primary);
        let p = prob("exp(x)", "exp(x)", "x^2 + 1", 0.5, 2.5);
        let d = bound_bounded_derivative(
            &p,
            DerivBounds::new(0.5f64.exp(), 2.5f64.exp()).unwrap(),
            (3.0, 1.5),
        )
        .unwrap();
        assert!(d.primary.satisfied, "{:?}", d.primary);
        let l = bound_lipschitz(&p, LipschitzConstant::new(2.5f64.exp()).unwrap()).unwrap();
        assert!(l.primary.satisfied, "{:?}", l.primary);
    }

    #[test]
    fn scale_equivariance() {
        let base = prob("exp(x)", "exp(x)", "x*(2-x)", 0.0, 2.0);
        let scaled = prob("3.5*exp(x)", "3.5*exp(x)", "x*(2-x)", 0.0, 2.0);
        let r1 = bound_h_convex(&base, &pw(0.5)).unwrap();
        let r2 = bound_h_convex(&scaled, &pw(0.5)).unwrap();
        assert!((r2.measured / r1.measured - 3.5).abs() < 1e-10 * 3.5);
        assert!((r2.bound / r1.bound - 3.5).abs() < 1e-10 * 3.5);
        assert_eq!(r1.satisfied, r2.satisfied);
    }
}
