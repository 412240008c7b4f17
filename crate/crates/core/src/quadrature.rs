//! Weighted composite trapezoidal rule with an a-priori error certificate
//! built from per-subinterval h-convex bounds.

use serde::{Serialize, Serializer};

use crate::bounds::half_weight_integral;
use crate::error::{Error, Result};
use crate::fejer::ProblemSpec;
use crate::hconvexity::check_h_convex;
use crate::integrate::integrate;
use crate::kernel::HKernel;

const REFERENCE_TIGHTENING: f64 = 100.0;
const SPAN_TOL: f64 = 1e-12;

/// Strictly increasing points `x₀ < x₁ < … < xₙ`, `n >= 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    points: Vec<f64>,
}

impl Serialize for Partition {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.points.serialize(s)
    }
}

impl Partition {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::param("a partition needs at least two points"));
        }
        if points.iter().any(|x| !x.is_finite()) || points.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::param("partition points must be finite and strictly increasing"));
        }
        Ok(Partition { points })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Number of subintervals.
    pub fn len(&self) -> usize {
        self.points.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn intervals(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.points.windows(2).map(|w| (w[0], w[1]))
    }

    fn check_span(&self, p: &ProblemSpec) -> Result<()> {
        let lo = self.points[0];
        let hi = *self.points.last().unwrap();
        let tol = SPAN_TOL * (1.0 + p.a.abs().max(p.b.abs()));
        if (lo - p.a).abs() > tol || (hi - p.b).abs() > tol {
            return Err(Error::SpanMismatch {
                lo,
                hi,
                a: p.a,
                b: p.b,
            });
        }
        Ok(())
    }
}

/// `n + 1` equally spaced points on `[a, b]`.
pub fn uniform_partition(a: f64, b: f64, n: usize) -> Result<Partition> {
    if n == 0 {
        return Err(Error::param("uniform partition needs n >= 1"));
    }
    let step = (b - a) / n as f64;
    let points = (0..=n)
        .map(|i| if i == n { b } else { a + step * i as f64 })
        .collect();
    Partition::new(points)
}

/// `T = Σ (f(xᵢ)+f(xᵢ₊₁))/2 · ∫_{xᵢ}^{xᵢ₊₁} g`.
pub fn trapezoid_weighted(p: &ProblemSpec, part: &Partition) -> Result<f64> {
    part.check_span(p)?;
    let mut total = 0.0;
    for (lo, hi) in part.intervals() {
        let mass = integrate(|x| p.g_at(x), lo, hi, &p.settings)?;
        total += 0.5 * (p.f_at(lo)? + p.f_at(hi)?) * mass;
    }
    Ok(total)
}

fn symmetry_warning(sub: &ProblemSpec) -> Option<String> {
    (!sub.g_symmetric).then(|| {
        format!(
            "g is not symmetric on [{}, {}] (defect {:e}); the local bound is not certified there",
            sub.a, sub.b, sub.symmetry_defect
        )
    })
}

fn local_term(sub: &ProblemSpec, h: &HKernel) -> Result<f64> {
    Ok(sub.width() * sub.endpoint_slope_sum()? * half_weight_integral(sub, h, true)?)
}

/// Per-subinterval terms of the certified bound, with a warning for each
/// subinterval where `g` is not locally symmetric.
pub fn error_bound_terms(p: &ProblemSpec, h: &HKernel, part: &Partition) -> Result<(Vec<f64>, Vec<String>)> {
    part.check_span(p)?;
    h.ensure_integrable()?;
    let mut terms = Vec::with_capacity(part.len());
    let mut warnings = Vec::new();
    for (lo, hi) in part.intervals() {
        let sub = p.on_interval(lo, hi)?;
        warnings.extend(symmetry_warning(&sub));
        terms.push(local_term(&sub, h)?);
    }
    Ok((terms, warnings))
}

/// `Σ Δᵢ(|f′(xᵢ)|+|f′(xᵢ₊₁)|) ∫_{midᵢ}^{xᵢ₊₁} g(x) S((xᵢ₊₁−x)/Δᵢ) dx`.
pub fn error_bound_h(p: &ProblemSpec, h: &HKernel, part: &Partition) -> Result<f64> {
    Ok(error_bound_terms(p, h, part)?.0.iter().sum())
}

/// Power-kernel bound with the cumulative kernel expanded in closed form.
pub fn error_bound_power(p: &ProblemSpec, k: f64, part: &Partition) -> Result<f64> {
    if !(k > -1.0) {
        return Err(Error::NonIntegrableKernel { k });
    }
    part.check_span(p)?;
    let e = k + 1.0;
    let mut total = 0.0;
    for (lo, hi) in part.intervals() {
        let d = hi - lo;
        let slope = p.fprime_at(lo)?.abs() + p.fprime_at(hi)?.abs();
        let weight = integrate(
            |x| {
                let r = ((hi - x) / d).max(0.0);
                let l = ((x - lo) / d).max(0.0);
                Ok(p.g_at(x)? * (r.powf(e) - l.powf(e) + 1.0) / e)
            },
            0.5 * (lo + hi),
            hi,
            &p.settings,
        )?;
        total += d * slope * weight;
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuadResult {
    pub value: f64,
    pub error_bound: f64,
    pub reference: f64,
    pub actual_error: f64,
    pub warnings: Vec<String>,
}

impl QuadResult {
    pub fn certified(&self) -> bool {
        self.actual_error <= self.error_bound + 1e-8 * (1.0 + self.error_bound)
    }
}

/// Trapezoid value, its certificate and a reference integral computed at
/// 100× tighter tolerances.
pub fn run_quadrature(p: &ProblemSpec, h: &HKernel, part: &Partition) -> Result<QuadResult> {
    let value = trapezoid_weighted(p, part)?;
    let (terms, mut warnings) = error_bound_terms(p, h, part)?;
    for (lo, hi) in part.intervals() {
        let report = check_h_convex(|x| Ok(p.fprime_at(x)?.abs()), h, lo, hi, 11)?;
        if !report.passed() {
            warnings.push(format!("|f'| is not {h}-convex on [{lo}, {hi}]: {}", report.summary()));
        }
    }
    let tight = p.settings.tightened(REFERENCE_TIGHTENING);
    let reference = integrate(|x| Ok(p.f_at(x)? * p.g_at(x)?), p.a, p.b, &tight)?;
    Ok(QuadResult {
        value,
        error_bound: terms.iter().sum(),
        reference,
        actual_error: (value - reference).abs(),
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Refinement {
    pub partition: Partition,
    pub error_bound: f64,
    pub converged: bool,
    pub warnings: Vec<String>,
}

/// Starting from `{a, b}`, bisects the subinterval with the largest local
/// term (leftmost on ties) until the total bound is at most `tol` or the
/// partition has `max_intervals` pieces.
pub fn adaptive_refine(p: &ProblemSpec, h: &HKernel, tol: f64, max_intervals: usize) -> Result<Refinement> {
    if !(tol > 0.0) {
        return Err(Error::param(format!("tolerance must be > 0, got {tol}")));
    }
    if max_intervals < 2 {
        return Err(Error::param("max_intervals must be at least 2"));
    }
    h.ensure_integrable()?;
    let whole = p.on_interval(p.a, p.b)?;
    let mut points = vec![p.a, p.b];
    let mut terms = vec![local_term(&whole, h)?];
    let mut warnings: Vec<String> = symmetry_warning(&whole).into_iter().collect();

    loop {
        let total: f64 = terms.iter().sum();
        if total <= tol {
            return finish(points, total, true, warnings);
        }
        if terms.len() >= max_intervals {
            return finish(points, total, false, warnings);
        }
        let mut worst = 0;
        for (i, &t) in terms.iter().enumerate() {
            if t > terms[worst] {
                worst = i;
            }
        }
        let (lo, hi) = (points[worst], points[worst + 1]);
        let mid = 0.5 * (lo + hi);
        if !(lo < mid && mid < hi) {
            return finish(points, total, false, warnings);
        }
        let left = p.on_interval(lo, mid)?;
        let right = p.on_interval(mid, hi)?;
        warnings.extend(symmetry_warning(&left));
        warnings.extend(symmetry_warning(&right));
        terms.splice(worst..=worst, [local_term(&left, h)?, local_term(&right, h)?]);
        points.insert(worst + 1, mid);
    }
}

fn finish(points: Vec<f64>, error_bound: f64, converged: bool, warnings: Vec<String>) -> Result<Refinement> {
    Ok(Refinement {
        partition: Partition::new(points)?,
        error_bound,
        converged,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn prob(f: &str, fp: &str, g: &str, a: f64, b: f64) -> ProblemSpec {
        ProblemSpec::parse(f, Some(fp), g, a, b).unwrap()
    }

    fn pw(k: f64) -> HKernel {
        HKernel::new_power(k).unwrap()
    }

    // Composite trapezoid for eˣ on [0, 2] with unit weight, by hand.
    fn exp_trapezoid(n: usize) -> f64 {
        let d = 2.0 / n as f64;
        (0..n).map(|i| 0.5 * d * ((i as f64 * d).exp() + ((i + 1) as f64 * d).exp())).sum()
    }

    fn exp_bound(n: usize) -> f64 {
        let d = 2.0 / n as f64;
        (0..n).map(|i| d * d / 8.0 * ((i as f64 * d).exp() + ((i + 1) as f64 * d).exp())).sum()
    }

    #[test]
    fn partitions() {
        assert_eq!(uniform_partition(0.0, 1.0, 2).unwrap().points(), &[0.0, 0.5, 1.0]);
        assert_eq!(uniform_partition(1.0, 2.0, 1).unwrap().points(), &[1.0, 2.0]);
        assert_eq!(uniform_partition(0.0, 2.0, 4).unwrap().points(), &[0.0, 0.5, 1.0, 1.5, 2.0]);
        assert!(uniform_partition(0.0, 1.0, 0).is_err());
        assert!(Partition::new(vec![0.0, 0.0, 1.0]).is_err());
        assert!(Partition::new(vec![0.0]).is_err());
        let json = serde_json::to_string(&uniform_partition(0.0, 1.0, 2).unwrap()).unwrap();
        assert_eq!(json, "[0.0,0.5,1.0]");
    }

    #[test]
    fn trapezoid_examples() {
        let sq = prob("x^2", "2*x", "1", 0.0, 1.0);
        assert!((trapezoid_weighted(&sq, &uniform_partition(0.0, 1.0, 1).unwrap()).unwrap() - 0.5).abs() < 1e-15);
        assert!((trapezoid_weighted(&sq, &uniform_partition(0.0, 1.0, 2).unwrap()).unwrap() - 0.375).abs() < 1e-15);
        let ex = prob("exp(x)", "exp(x)", "1", 0.0, 2.0);
        let v = trapezoid_weighted(&ex, &uniform_partition(0.0, 2.0, 4).unwrap()).unwrap();
        assert!((v - exp_trapezoid(4)).abs() < 1e-12 && (v - 6.52161).abs() < 1e-5);
        assert!(matches!(
            trapezoid_weighted(&sq, &uniform_partition(0.0, 2.0, 2).unwrap()),
            Err(Error::SpanMismatch { .. })
        ));
    }

    #[test]
    fn bound_examples() {
        let sq = prob("x^2", "2*x", "1", 0.0, 1.0);
        let one = uniform_partition(0.0, 1.0, 1).unwrap();
        let two = uniform_partition(0.0, 1.0, 2).unwrap();
        assert!((error_bound_h(&sq, &pw(1.0), &one).unwrap() - 0.25).abs() < 1e-12);
        assert!((error_bound_h(&sq, &pw(1.0), &two).unwrap() - 0.125).abs() < 1e-12);
        let c = prob("3", "0", "1", 0.0, 1.0);
        assert_eq!(error_bound_h(&c, &pw(0.5), &two).unwrap(), 0.0);
        assert!(matches!(error_bound_power(&sq, -1.0, &two), Err(Error::NonIntegrableKernel { .. })));

        let ex = prob("exp(x)", "exp(x)", "1", 0.0, 2.0);
        let p4 = uniform_partition(0.0, 2.0, 4).unwrap();
        let b = error_bound_power(&ex, 1.0, &p4).unwrap();
        assert!((b - exp_bound(4)).abs() < 1e-12 && (b - 0.81520).abs() < 1e-5);
    }

    #[test]
    fn power_form_matches_kernel_form() {
        let ex = prob("exp(x)", "exp(x)", "1", 0.0, 2.0);
        for k in [-0.5, 0.0, 0.5, 1.0] {
            for n in [1, 3, 8] {
                let part = uniform_partition(0.0, 2.0, n).unwrap();
                let a = error_bound_power(&ex, k, &part).unwrap();
                let b = error_bound_h(&ex, &pw(k), &part).unwrap();
                assert!((a - b).abs() < 1e-9, "k={k} n={n}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn run_examples() {
        let sq = prob("x^2", "2*x", "1", 0.0, 1.0);
        let r = run_quadrature(&sq, &pw(1.0), &uniform_partition(0.0, 1.0, 1).unwrap()).unwrap();
        assert!((r.value - 0.5).abs() < 1e-15 && (r.reference - 1.0 / 3.0).abs() < 1e-13);
        assert!((r.actual_error - 1.0 / 6.0).abs() < 1e-13 && r.certified());

        let ex = prob("exp(x)", "exp(x)", "1", 0.0, 2.0);
        let r = run_quadrature(&ex, &pw(1.0), &uniform_partition(0.0, 2.0, 4).unwrap()).unwrap();
        assert!((r.reference - (2f64.exp() - 1.0)).abs() < 1e-12);
        assert!((r.actual_error - 0.13255).abs() < 1e-5 && (r.error_bound - 0.81520).abs() < 1e-5);
        assert!(r.certified() && r.warnings.is_empty(), "{:?}", r.warnings);

        let lin = prob("3*x - 1", "3", "1", -1.0, 2.0);
        let r = run_quadrature(&lin, &pw(1.0), &uniform_partition(-1.0, 2.0, 5).unwrap()).unwrap();
        assert!(r.actual_error <= 1e-10);
    }

    #[test]
    fn symmetric_weight_does_not_localize() {
        let p = prob("x^2", "2*x", "x*(1-x)", 0.0, 1.0);
        let r = run_quadrature(&p, &pw(1.0), &uniform_partition(0.0, 1.0, 2).unwrap()).unwrap();
        assert_eq!(r.warnings.iter().filter(|w| w.contains("not symmetric")).count(), 2);
    }

    #[test]
    fn refine_examples() {
        let sq = prob("x^2", "2*x", "1", 0.0, 1.0);
        let r = adaptive_refine(&sq, &pw(1.0), 0.3, 100).unwrap();
        assert_eq!(r.partition.points(), &[0.0, 1.0]);
        let r = adaptive_refine(&sq, &pw(1.0), 0.13, 100).unwrap();
        assert_eq!(r.partition.points(), &[0.0, 0.5, 1.0]);
        assert!(r.converged && (r.error_bound - 0.125).abs() < 1e-12);
        let c = prob("7", "0", "1", 2.0, 5.0);
        assert_eq!(adaptive_refine(&c, &pw(1.0), 1e-9, 10).unwrap().partition.points(), &[2.0, 5.0]);
        let capped = adaptive_refine(&sq, &pw(1.0), 1e-6, 5).unwrap();
        assert!(!capped.converged && capped.partition.len() == 5);
        assert!(adaptive_refine(&sq, &pw(1.0), 0.0, 5).is_err());
        assert!(adaptive_refine(&sq, &pw(1.0), 0.1, 1).is_err());
    }

    #[test]
    fn refined_bound_matches_recomputed_bound() {
        let ex = prob("exp(x)", "exp(x)", "1", 0.0, 2.0);
        let r = adaptive_refine(&ex, &pw(1.0), 0.05, 200).unwrap();
        assert!(r.converged && r.error_bound <= 0.05);
        let again = error_bound_h(&ex, &pw(1.0), &r.partition).unwrap();
        assert!((again - r.error_bound).abs() < 1e-12);
    }

    #[test]
    fn bound_halves_with_mesh() {
        let ex = prob("exp(x)", "exp(x)", "1", 0.0, 2.0);
        for n in [2, 4, 8, 16] {
            let a = error_bound_power(&ex, 1.0, &uniform_partition(0.0, 2.0, n).unwrap()).unwrap();
            let b = error_bound_power(&ex, 1.0, &uniform_partition(0.0, 2.0, 2 * n).unwrap()).unwrap();
            assert!((a / b - 2.0).abs() < 0.2);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn classical_specialization(cuts in proptest::collection::vec(0.01f64..1.0, 1..6)) {
            let mut pts = vec![0.0];
            for c in &cuts {
                pts.push(pts.last().unwrap() + c);
            }
            let b = *pts.last().unwrap();
            let part = Partition::new(pts.clone()).unwrap();
            let p = prob("exp(x)", "exp(x)", "1", 0.0, b);
            let classical: f64 = pts.windows(2).map(|w| (w[1] - w[0]).powi(2) / 8.0 * (w[0].exp() + w[1].exp())).sum();
            let got = error_bound_power(&p, 1.0, &part).unwrap();
            prop_assert!((got - classical).abs() <= 1e-12 * (1.0 + classical));
        }

        #[test]
        fn bisection_never_increases_convex_bound(n in 1usize..6, pick in 0usize..6) {
            let p = prob("exp(x)", "exp(x)", "1", 0.0, 2.0);
            let part = uniform_partition(0.0, 2.0, n).unwrap();
            let i = pick % n;
            let mut pts = part.points().to_vec();
            pts.insert(i + 1, 0.5 * (pts[i] + pts[i + 1]));
            let before = error_bound_power(&p, 1.0, &part).unwrap();
            let after = error_bound_power(&p, 1.0, &Partition::new(pts).unwrap()).unwrap();
            prop_assert!(after < before);
        }
    }
}
