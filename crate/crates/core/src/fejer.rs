//! The mapping `M(t)` attached to a weight `g` on `[a, b]`, its structural
//! properties, and the trapezoidal identity it satisfies.
//!
//! With `G(s) = g(s·a + (1-s)·b)`,
//!
//! ```text
//! M(t) = ∫ₜ¹ G(s) ds − ∫₀ᵗ G(s) ds
//! ```
//!
//! and for differentiable `f`
//!
//! ```text
//! (f(a)+f(b))/2 ∫ₐᵇ g − ∫ₐᵇ f g = (b−a)²/2 ∫₀¹ M(t) f′(ta + (1−t)b) dt.
//! ```
//!
//! `M` is always evaluated from its definition in the `s` variable.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{numeric_derivative, Expression, DEFAULT_DERIVATIVE_SCALE};
use crate::integrate::{integrate, integrate_on_grid, q_norm, sup_norm, QuadratureSettings};

const VALIDATION_GRID: usize = 501;
const DEFAULT_SUP_SAMPLES: usize = 1001;

/// Where `f′` comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum Derivative {
    Expr(Expression),
    /// Central differences on `f` with the given relative step.
    Numeric(f64),
}

/// JSON form of a problem: `{"f":"..","fprime":".."|null,"g":"..","a":..,"b":..}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemInput {
    pub f: String,
    #[serde(default)]
    pub fprime: Option<String>,
    pub g: String,
    pub a: f64,
    pub b: f64,
}

/// `f`, `f′`, weight `g` and interval `[a, b]`, with validated metadata on `g`.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub f: Expression,
    pub fprime: Derivative,
    pub g: Expression,
    pub a: f64,
    pub b: f64,
    /// `g(x) = g(a+b-x)` on the validation grid.
    pub g_symmetric: bool,
    /// `g >= -1e-12` on the validation grid.
    pub g_nonnegative: bool,
    pub symmetry_defect: f64,
    pub settings: QuadratureSettings,
    /// Grid size for `‖g‖∞`.
    pub sup_samples: usize,
}

impl ProblemSpec {
    pub fn new(
        f: Expression,
        fprime: Option<Expression>,
        g: Expression,
        a: f64,
        b: f64,
    ) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::param(format!("interval needs finite a < b, got [{a}, {b}]")));
        }
        let (symmetry_defect, sup, min) = scan_weight(&g, a, b)?;
        let fprime = match fprime {
            Some(e) => Derivative::Expr(e),
            None => Derivative::Numeric(DEFAULT_DERIVATIVE_SCALE),
        };
        Ok(ProblemSpec {
            f,
            fprime,
            g,
            a,
            b,
            g_symmetric: symmetry_defect <= 1e-9 * (1.0 + sup),
            g_nonnegative: min >= -1e-12,
            symmetry_defect,
            settings: QuadratureSettings::default(),
            sup_samples: DEFAULT_SUP_SAMPLES,
        })
    }

    /// Convenience constructor from expression sources.
    pub fn parse(f: &str, fprime: Option<&str>, g: &str, a: f64, b: f64) -> Result<Self> {
        let fprime = fprime.map(Expression::parse).transpose()?;
        ProblemSpec::new(Expression::parse(f)?, fprime, Expression::parse(g)?, a, b)
    }

    pub fn from_input(input: &ProblemInput) -> Result<Self> {
        ProblemSpec::parse(&input.f, input.fprime.as_deref(), &input.g, input.a, input.b)
    }

    pub fn with_settings(mut self, settings: QuadratureSettings) -> Result<Self> {
        settings.validate()?;
        self.settings = settings;
        Ok(self)
    }

    pub fn with_sup_samples(mut self, samples: usize) -> Result<Self> {
        if samples < 2 {
            return Err(Error::param("sup-norm grid needs at least 2 samples"));
        }
        self.sup_samples = samples;
        Ok(self)
    }

    /// Same `f`, `f′`, `g` and settings on another interval.
    pub fn on_interval(&self, a: f64, b: f64) -> Result<Self> {
        let fprime = match &self.fprime {
            Derivative::Expr(e) => Some(e.clone()),
            Derivative::Numeric(_) => None,
        };
        let mut p = ProblemSpec::new(self.f.clone(), fprime, self.g.clone(), a, b)?;
        p.fprime = self.fprime.clone();
        p.settings = self.settings;
        p.sup_samples = self.sup_samples;
        Ok(p)
    }

    pub fn width(&self) -> f64 {
        self.b - self.a
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.a + self.b)
    }

    pub fn f_at(&self, x: f64) -> Result<f64> {
        self.f.eval(x)
    }

    pub fn fprime_at(&self, x: f64) -> Result<f64> {
        match &self.fprime {
            Derivative::Expr(e) => e.eval(x),
            Derivative::Numeric(scale) => numeric_derivative(&self.f, x, *scale),
        }
    }

    pub fn g_at(&self, x: f64) -> Result<f64> {
        self.g.eval(x)
    }

    /// `G(s) = g(s·a + (1-s)·b)`.
    pub fn g_param(&self, s: f64) -> Result<f64> {
        self.g.eval(s * self.a + (1.0 - s) * self.b)
    }

    /// `|f′(a)| + |f′(b)|`.
    pub fn endpoint_slope_sum(&self) -> Result<f64> {
        Ok(self.fprime_at(self.a)?.abs() + self.fprime_at(self.b)?.abs())
    }

    pub fn require_symmetric(&self) -> Result<()> {
        if self.g_symmetric {
            Ok(())
        } else {
            Err(Error::SymmetryViolation {
                a: self.a,
                b: self.b,
                defect: self.symmetry_defect,
            })
        }
    }

    pub fn require_nonnegative(&self) -> Result<()> {
        if self.g_nonnegative {
            return Ok(());
        }
        let step = self.width() / (VALIDATION_GRID - 1) as f64;
        for i in 0..VALIDATION_GRID {
            let x = self.a + step * i as f64;
            let v = self.g_at(x)?;
            if v < -1e-12 {
                return Err(Error::Negative { x, value: v });
            }
        }
        unreachable!("g_nonnegative is false only when the grid has a negative value")
    }

    pub fn weight_integral(&self) -> Result<f64> {
        integrate(|x| self.g_at(x), self.a, self.b, &self.settings)
    }

    pub fn sup_g(&self) -> Result<f64> {
        sup_norm(|x| self.g_at(x), self.a, self.b, self.sup_samples)
    }
}

// (symmetry defect, sup |g|, min g) on the validation grid.
fn scan_weight(g: &Expression, a: f64, b: f64) -> Result<(f64, f64, f64)> {
    let step = (b - a) / (VALIDATION_GRID - 1) as f64;
    let mut defect = 0.0f64;
    let mut sup = 0.0f64;
    let mut min = f64::INFINITY;
    for i in 0..VALIDATION_GRID {
        let x = if i == VALIDATION_GRID - 1 { b } else { a + step * i as f64 };
        let v = g.eval(x)?;
        let mirrored = g.eval(a + b - x)?;
        defect = defect.max((v - mirrored).abs());
        sup = sup.max(v.abs());
        min = min.min(v);
    }
    Ok((defect, sup, min))
}

/// One checked inequality `measured <= bound`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub label: String,
    pub measured: f64,
    pub bound: f64,
    pub slack: f64,
    pub satisfied: bool,
    #[serde(skip)]
    pub report_tol: f64,
    pub warnings: Vec<String>,
}

impl BoundReport {
    /// Uses the default tolerance `1e-8 · (1 + |bound|)`.
    pub fn new(label: impl Into<String>, measured: f64, bound: f64) -> Self {
        let tol = 1e-8 * (1.0 + bound.abs());
        BoundReport::with_tol(label, measured, bound, tol)
    }

    pub fn with_tol(label: impl Into<String>, measured: f64, bound: f64, report_tol: f64) -> Self {
        let slack = bound - measured;
        BoundReport {
            label: label.into(),
            measured,
            bound,
            slack,
            satisfied: slack >= -report_tol,
            report_tol,
            warnings: Vec::new(),
        }
    }

    pub fn warn(&mut self, message: impl Into<String>) {
        self.warnings.push(message.into());
    }
}

// Cells of the fixed parameter grid used for the partial integrals of `G`.
const PARAM_CELL: f64 = 1.0 / 64.0;

fn param_integral(p: &ProblemSpec, lo: f64, hi: f64) -> Result<f64> {
    integrate_on_grid(|s| p.g_param(s), lo, hi, 0.0, PARAM_CELL, &p.settings)
}

fn check_t(t: f64) -> Result<()> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(Error::param(format!("t = {t} outside [0, 1]")))
    }
}

/// `M(t)` from its definition.
pub fn m_value(p: &ProblemSpec, t: f64) -> Result<f64> {
    check_t(t)?;
    Ok(param_integral(p, t, 1.0)? - param_integral(p, 0.0, t)?)
}

/// `M(t)` through the half-interval form valid for symmetric `g`.
pub fn m_symmetric_form(p: &ProblemSpec, t: f64) -> Result<f64> {
    p.require_symmetric()?;
    check_t(t)?;
    if t <= 0.5 {
        Ok(2.0 * param_integral(p, t, 0.5)?)
    } else {
        Ok(-2.0 * param_integral(p, 0.5, t)?)
    }
}

fn grid_points(grid: usize) -> Result<impl Iterator<Item = f64>> {
    if grid < 2 {
        return Err(Error::param("grid needs at least 2 points"));
    }
    Ok((0..grid).map(move |i| i as f64 / (grid - 1) as f64))
}

/// Max of `|m_value - m_symmetric_form|` over a uniform grid of `[0, 1]`.
pub fn m_symmetric_form_defect(p: &ProblemSpec, grid: usize) -> Result<f64> {
    p.require_symmetric()?;
    let mut worst = 0.0f64;
    for t in grid_points(grid)? {
        worst = worst.max((m_value(p, t)? - m_symmetric_form(p, t)?).abs());
    }
    Ok(worst)
}

/// Max of `|M(t) + M(1-t)|` over the grid. Reported for any `g`; it is only
/// guaranteed to vanish when `g` is symmetric.
pub fn m_antisymmetry_defect(p: &ProblemSpec, grid: usize) -> Result<f64> {
    let mut worst = 0.0f64;
    for t in grid_points(grid)? {
        worst = worst.max((m_value(p, t)? + m_value(p, 1.0 - t)?).abs());
    }
    Ok(worst)
}

/// Largest violation of `M >= 0` on `[0, 1/2]` and `M <= 0` on `[1/2, 1]`.
pub fn m_sign_defect(p: &ProblemSpec, grid: usize) -> Result<f64> {
    let mut worst = 0.0f64;
    for t in grid_points(grid)? {
        let m = m_value(p, t)?;
        if t <= 0.5 {
            worst = worst.max(-m);
        }
        if t >= 0.5 {
            worst = worst.max(m);
        }
    }
    Ok(worst)
}

/// `∫₀¹ |M(t)| dt`.
pub fn m_abs_integral(p: &ProblemSpec) -> Result<f64> {
    let abs_m = |t: f64| Ok(m_value(p, t)?.abs());
    Ok(integrate(abs_m, 0.0, 0.5, &p.settings)? + integrate(abs_m, 0.5, 1.0, &p.settings)?)
}

/// `∫₀¹ M(t) dt`.
pub fn m_integral(p: &ProblemSpec) -> Result<f64> {
    let m = |t: f64| m_value(p, t);
    Ok(integrate(m, 0.0, 0.5, &p.settings)? + integrate(m, 0.5, 1.0, &p.settings)?)
}

/// `∫₀¹ |M| <= ½‖g‖∞`.
pub fn m_bound_sup(p: &ProblemSpec) -> Result<BoundReport> {
    p.require_symmetric()?;
    p.require_nonnegative()?;
    Ok(BoundReport::new(
        "int |M| <= 1/2 sup|g|",
        m_abs_integral(p)?,
        0.5 * p.sup_g()?,
    ))
}

/// `∫₀¹ |t - ½|^{1/p} dt = (½)^{1/p} · p/(p+1)`.
pub fn holder_factor(p_exp: f64) -> f64 {
    0.5f64.powf(1.0 / p_exp) * p_exp / (p_exp + 1.0)
}

pub fn check_conjugate(p_exp: f64, q_exp: f64) -> Result<()> {
    if !(p_exp > 1.0 && q_exp > 1.0) || (1.0 / p_exp + 1.0 / q_exp - 1.0).abs() > 1e-12 {
        return Err(Error::ConjugateExponents { p: p_exp, q: q_exp });
    }
    Ok(())
}

/// `∫₀¹ |M| <= 2‖G‖_q ∫₀¹ |t - ½|^{1/p} dt` for Hölder conjugates `p`, `q`.
pub fn m_bound_holder(p: &ProblemSpec, p_exp: f64, q_exp: f64) -> Result<BoundReport> {
    check_conjugate(p_exp, q_exp)?;
    let norm = q_norm(|s| p.g_param(s), q_exp, &p.settings)?;
    Ok(BoundReport::new(
        format!("int |M| <= 2 ||g||_q int |t-1/2|^(1/p) (p={p_exp}, q={q_exp})"),
        m_abs_integral(p)?,
        2.0 * norm * holder_factor(p_exp),
    ))
}

/// Signed trapezoidal gap `(f(a)+f(b))/2 ∫g − ∫fg`.
pub fn trapezoid_gap(p: &ProblemSpec) -> Result<f64> {
    let mass = p.weight_integral()?;
    let weighted = integrate(|x| Ok(p.f_at(x)? * p.g_at(x)?), p.a, p.b, &p.settings)?;
    Ok(0.5 * (p.f_at(p.a)? + p.f_at(p.b)?) * mass - weighted)
}

/// `(b−a)²/2 ∫₀¹ M(t) f′(ta + (1−t)b) dt`, the right side of the identity.
pub fn identity_rhs(p: &ProblemSpec) -> Result<f64> {
    let w = p.width();
    let integrand = |t: f64| Ok(m_value(p, t)? * p.fprime_at(t * p.a + (1.0 - t) * p.b)?);
    let i = integrate(integrand, 0.0, 0.5, &p.settings)? + integrate(integrand, 0.5, 1.0, &p.settings)?;
    Ok(0.5 * w * w * i)
}

/// Mirrored right side `(b−a)²/2 ∫₀¹ M(1−t) f′(tb + (1−t)a) dt`.
pub fn mirrored_identity_rhs(p: &ProblemSpec) -> Result<f64> {
    let w = p.width();
    let integrand = |t: f64| Ok(m_value(p, 1.0 - t)? * p.fprime_at(t * p.b + (1.0 - t) * p.a)?);
    let i = integrate(integrand, 0.0, 0.5, &p.settings)? + integrate(integrand, 0.5, 1.0, &p.settings)?;
    Ok(0.5 * w * w * i)
}

pub fn lemma_identity_defect(p: &ProblemSpec) -> Result<f64> {
    Ok((trapezoid_gap(p)? - identity_rhs(p)?).abs())
}

pub fn mirrored_identity_defect(p: &ProblemSpec) -> Result<f64> {
    Ok((trapezoid_gap(p)? - mirrored_identity_rhs(p)?).abs())
}

/// Thresholds used by [`verify_lemma`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LemmaTolerances {
    pub symmetric_form: f64,
    pub antisymmetry: f64,
    pub sign: f64,
    pub integral_bounds: f64,
    pub identity: f64,
}

impl Default for LemmaTolerances {
    fn default() -> Self {
        LemmaTolerances {
            symmetric_form: 1e-8,
            antisymmetry: 1e-8,
            sign: 1e-10,
            integral_bounds: 1e-8,
            identity: 1e-7,
        }
    }
}

pub const HOLDER_PAIRS: [(f64, f64); 3] = [(2.0, 2.0), (3.0, 1.5), (1.5, 3.0)];

fn defect_report(label: &str, defect: f64, threshold: f64) -> BoundReport {
    BoundReport::with_tol(label, defect, threshold, 0.0)
}

/// Runs every structural check on `M` for a symmetric nonnegative `g`, plus
/// the trapezoidal identity and its mirror for `p.f`.
///
/// Each check is a report whose `measured` is a defect and `bound` the
/// threshold, except the two integral bounds which compare `∫|M|` directly.
pub fn verify_lemma(p: &ProblemSpec, grid: usize, tol: &LemmaTolerances) -> Result<Vec<BoundReport>> {
    p.require_symmetric()?;
    p.require_nonnegative()?;
    let mut out = vec![
        defect_report(
            "symmetric form of M agrees with definition",
            m_symmetric_form_defect(p, grid)?,
            tol.symmetric_form,
        ),
        defect_report("M(t) + M(1-t) = 0", m_antisymmetry_defect(p, grid)?, tol.antisymmetry),
        defect_report("sign pattern of M", m_sign_defect(p, grid)?, tol.sign),
    ];
    let abs_integral = m_abs_integral(p)?;
    let sup_bound = 0.5 * p.sup_g()?;
    out.push(BoundReport::with_tol(
        "int |M| <= 1/2 sup|g|",
        abs_integral,
        sup_bound,
        tol.integral_bounds,
    ));
    for (pe, qe) in HOLDER_PAIRS {
        let norm = q_norm(|s| p.g_param(s), qe, &p.settings)?;
        out.push(BoundReport::with_tol(
            format!("int |M| <= 2 ||g||_q int |t-1/2|^(1/p) (p={pe}, q={qe})"),
            abs_integral,
            2.0 * norm * holder_factor(pe),
            tol.integral_bounds,
        ));
    }
    out.push(defect_report("trapezoidal identity", lemma_identity_defect(p)?, tol.identity));
    out.push(defect_report(
        "mirrored trapezoidal identity",
        mirrored_identity_defect(p)?,
        tol.identity,
    ));
    Ok(out)
}
