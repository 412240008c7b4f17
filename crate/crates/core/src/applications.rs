//! Special means and moment bounds obtained by specializing the main
//! h-convex inequality to `f(x) = xⁿ` and to probability densities.

use serde::Serialize;

use crate::bounds::hypothesis_warning;
use crate::error::{Error, Result};
use crate::expr::Expression;
use crate::fejer::{BoundReport, ProblemSpec};
use crate::hconvexity::check_h_convex;
use crate::integrate::{integrate, QuadratureSettings};
use crate::kernel::HKernel;

const DENSITY_TOL: f64 = 1e-8;
const DENSITY_GRID: usize = 501;

/// `A(a, b) = (a + b)/2`.
pub fn arithmetic_mean(a: f64, b: f64) -> f64 {
    0.5 * (a + b)
}

/// `Lₙ(a,b)ⁿ = (bⁿ⁺¹ − aⁿ⁺¹)/((n+1)(b−a))`, defined for `n ≠ −1`.
fn log_mean_power(a: f64, b: f64, n: f64) -> Result<f64> {
    let v = (b.powf(n + 1.0) - a.powf(n + 1.0)) / ((n + 1.0) * (b - a));
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::param(format!("L_{n}({a}, {b}) is not finite")))
    }
}

/// Generalized logarithmic mean `Lₙ(a, b)`.
pub fn gen_log_mean(a: f64, b: f64, n: f64) -> Result<f64> {
    if n == 0.0 || n == -1.0 {
        return Err(Error::param(format!("generalized log-mean undefined for n = {n}")));
    }
    if !(a < b) {
        return Err(Error::param(format!("need a < b, got ({a}, {b})")));
    }
    let v = log_mean_power(a, b, n)?.powf(1.0 / n);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::param(format!("L_{n}({a}, {b}) has no real value")))
    }
}

/// Interval `[a, b]`, mean exponent `n` and kernel exponent `k` of `h(t) = tᵏ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanParams {
    pub a: f64,
    pub b: f64,
    pub n: f64,
    pub k: f64,
}

impl MeanParams {
    pub fn new(a: f64, b: f64, n: f64, k: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::param(format!("need finite a < b, got ({a}, {b})")));
        }
        if !(n < -1.0 || (n > -1.0 && n < 0.0) || n >= 1.0) {
            return Err(Error::param(format!("mean exponent n = {n} must lie in (-inf,-1) U (-1,0) U [1,inf)")));
        }
        if !(k <= 1.0) || k == -1.0 || k == -2.0 {
            return Err(Error::param(format!("kernel exponent k = {k} must satisfy k <= 1, k != -1, -2")));
        }
        let integer_power = n.fract() == 0.0 && n >= 1.0;
        if !integer_power && a <= 0.0 {
            return Err(Error::param(format!("n = {n} needs a > 0, got a = {a}")));
        }
        Ok(MeanParams { a, b, n, k })
    }
}

/// `|A(aⁿ,bⁿ) − Lₙⁿ(a,b)| <= |n|(b−a)/((k+1)(k+2)) · A(|a|ⁿ⁻¹,|b|ⁿ⁻¹) · [2⁻ᵏ + k]`.
pub fn means_bound_check(mp: &MeanParams) -> Result<BoundReport> {
    let MeanParams { a, b, n, k } = *mp;
    if !(k > -1.0) {
        return Err(Error::NonIntegrableKernel { k });
    }
    let measured = (arithmetic_mean(a.powf(n), b.powf(n)) - log_mean_power(a, b, n)?).abs();
    let slopes = arithmetic_mean(a.abs().powf(n - 1.0), b.abs().powf(n - 1.0));
    let bound = n.abs() * (b - a) / ((k + 1.0) * (k + 2.0)) * slopes * (0.5f64.powf(k) + k);
    let mut r = BoundReport::new(format!("means (n={n}, k={k})"), measured, bound);

    let h = HKernel::new_power(k)?;
    let report = check_h_convex(|x| Ok(n.abs() * x.abs().powf(n - 1.0)), &h, a, b, 21)?;
    if !report.passed() {
        r.warn(format!("|f'| = |n||x|^(n-1) is not {h}-convex on [{a}, {b}]: {}", report.summary()));
    }
    Ok(r)
}

/// A symmetric probability density on `[a, b]` with `0 < a < b`.
#[derive(Debug, Clone)]
pub struct DensitySpec {
    pub g: Expression,
    pub a: f64,
    pub b: f64,
    /// `|∫ₐᵇ g − 1|`.
    pub normalization_defect: f64,
    pub settings: QuadratureSettings,
}

impl DensitySpec {
    pub fn new(g: Expression, a: f64, b: f64) -> Result<Self> {
        DensitySpec::with_settings(g, a, b, QuadratureSettings::default())
    }

    pub fn parse(g: &str, a: f64, b: f64) -> Result<Self> {
        DensitySpec::new(Expression::parse(g)?, a, b)
    }

    pub fn with_settings(g: Expression, a: f64, b: f64, settings: QuadratureSettings) -> Result<Self> {
        settings.validate()?;
        if !(a > 0.0 && a < b && b.is_finite()) {
            return Err(Error::param(format!("density support needs 0 < a < b, got [{a}, {b}]")));
        }
        let step = (b - a) / (DENSITY_GRID - 1) as f64;
        let mut sup = 0.0f64;
        let mut defect = 0.0f64;
        for i in 0..DENSITY_GRID {
            let x = a + step * i as f64;
            let v = g.eval(x)?;
            if v < -1e-12 {
                return Err(Error::Negative { x, value: v });
            }
            sup = sup.max(v);
            defect = defect.max((v - g.eval(a + b - x)?).abs());
        }
        if defect > 1e-9 * (1.0 + sup) {
            return Err(Error::SymmetryViolation { a, b, defect });
        }
        let normalization_defect = (integrate(|x| g.eval(x), a, b, &settings)? - 1.0).abs();
        if normalization_defect > DENSITY_TOL {
            return Err(Error::NotADensity {
                defect: normalization_defect,
            });
        }
        Ok(DensitySpec {
            g,
            a,
            b,
            normalization_defect,
            settings,
        })
    }

    fn problem(&self, f: Expression, fprime: Option<Expression>) -> Result<ProblemSpec> {
        ProblemSpec::new(f, fprime, self.g.clone(), self.a, self.b)?.with_settings(self.settings)
    }

    /// `∫ₐ^{(a+b)/2} g`, one half for any symmetric density.
    pub fn left_mass(&self) -> Result<f64> {
        integrate(|x| self.g.eval(x), self.a, arithmetic_mean(self.a, self.b), &self.settings)
    }
}

/// `E_λ = ∫ₐᵇ x^λ g(x) dx`.
pub fn lambda_moment(d: &DensitySpec, lambda: f64) -> Result<f64> {
    integrate(|x| Ok(x.powf(lambda) * d.g.eval(x)?), d.a, d.b, &d.settings)
}

/// `|(f(a)+f(b))/2 − ∫fg| <= (b−a)/2 · (|f′(a)|+|f′(b)|) · ∫₀^{1/2}[h(t)+h(1−t)]dt`.
pub fn moment_bound_check(
    d: &DensitySpec,
    f: &Expression,
    fprime: Option<&Expression>,
    h: &HKernel,
) -> Result<BoundReport> {
    h.ensure_integrable()?;
    let p = d.problem(f.clone(), fprime.cloned())?;
    let expectation = integrate(|x| Ok(p.f_at(x)? * p.g_at(x)?), d.a, d.b, &d.settings)?;
    let measured = (0.5 * (p.f_at(d.a)? + p.f_at(d.b)?) - expectation).abs();
    let bound = 0.5 * p.width() * p.endpoint_slope_sum()? * h.half_interval_integral(&d.settings)?;
    let mut r = BoundReport::new(format!("moment ({h})"), measured, bound);
    r.warnings.extend(hypothesis_warning(&p, h));
    Ok(r)
}

/// Moment check for `f(x) = x^λ/λ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentCheck {
    pub lambda: f64,
    pub moment: f64,
    pub report: BoundReport,
    /// `λ(b−a)/(2(k+1)) · (a^{λ−1} + b^{λ−1})` for `h(t) = tᵏ`. Carries an
    /// extra factor `λ` relative to `report.bound`; the two agree at `λ = 1`.
    pub scaled_bound: Option<f64>,
}

pub fn lambda_moment_bound_check(d: &DensitySpec, lambda: f64, h: &HKernel) -> Result<MomentCheck> {
    if lambda == 0.0 || !lambda.is_finite() {
        return Err(Error::param(format!("moment order must be finite and nonzero, got {lambda}")));
    }
    let f = Expression::parse(&format!("x^({lambda:?})/({lambda:?})"))?;
    let fp = Expression::parse(&format!("x^({:?})", lambda - 1.0))?;
    let report = moment_bound_check(d, &f, Some(&fp), h)?;
    let scaled_bound = match h {
        HKernel::Power(k) => Some(
            lambda * (d.b - d.a) / (2.0 * (k + 1.0))
                * (d.a.powf(lambda - 1.0) + d.b.powf(lambda - 1.0)),
        ),
        _ => None,
    };
    Ok(MomentCheck {
        lambda,
        moment: lambda_moment(d, lambda)?,
        report,
        scaled_bound,
    })
}
