//! Regression battery: declarative cases with known closed-form answers.
//!
//! Cases are plain data so that callers can add their own or mutate the
//! built-in ones (for instance flip the sign of a bound) and confirm the
//! battery notices.

use std::thread;

use serde::{Deserialize, Serialize};

use crate::applications::{lambda_moment_bound_check, means_bound_check, DensitySpec, MeanParams};
use crate::bounds::{
    bound_bounded_derivative, bound_convex_left, bound_h_convex, bound_h_convex_mirror, bound_lipschitz,
    bound_s_convex, fejer_triple, DerivBounds, LipschitzConstant,
};
use crate::error::Result;
use crate::expr::Expression;
use crate::fejer::{verify_lemma, BoundReport, LemmaTolerances, ProblemInput, ProblemSpec};
use crate::hconvexity::check_h_convex;
use crate::kernel::{HKernel, KernelSpec};
use crate::quadrature::{adaptive_refine, run_quadrature, uniform_partition};

/// What a case computes. Every variant yields one or more
/// `measured <= bound` reports; the first is the primary one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "kebab-case")]
pub enum Check {
    /// Direct and mirrored h-convex bounds; they must agree.
    HConvex { problem: ProblemInput, kernel: KernelSpec },
    SConvex { problem: ProblemInput, s: f64 },
    ConvexLeft { problem: ProblemInput },
    BoundedDerivative { problem: ProblemInput, m_lo: f64, m_hi: f64 },
    Lipschitz { problem: ProblemInput, k: f64 },
    Lemma { problem: ProblemInput },
    Triple { problem: ProblemInput },
    Means { a: f64, b: f64, n: f64, k: f64 },
    Moment { g: String, a: f64, b: f64, lambda: f64, kernel: KernelSpec },
    Quadrature { problem: ProblemInput, kernel: KernelSpec, n: usize },
    /// Reports the certified bound as `measured` against `tol`.
    Refine { problem: ProblemInput, kernel: KernelSpec, tol: f64, max_intervals: usize },
    /// Sampling checker; `expect_pass` states whether violations are expected.
    HConvexity { phi: String, kernel: KernelSpec, a: f64, b: f64, grid: usize, expect_pass: bool },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Case {
    pub name: String,
    pub check: Check,
    #[serde(default)]
    pub expected_measured: Option<f64>,
    #[serde(default)]
    pub expected_bound: Option<f64>,
    /// Tolerance on the expected values.
    #[serde(default = "default_value_tol")]
    pub value_tol: f64,
    /// Multiplies every bound before judging. Anything other than 1 is a mutation.
    #[serde(default = "one")]
    pub bound_scale: f64,
}

fn default_value_tol() -> f64 {
    1e-9
}

fn one() -> f64 {
    1.0
}

impl Case {
    pub fn new(name: impl Into<String>, check: Check) -> Self {
        Case {
            name: name.into(),
            check,
            expected_measured: None,
            expected_bound: None,
            value_tol: default_value_tol(),
            bound_scale: 1.0,
        }
    }

    pub fn expect(mut self, measured: Option<f64>, bound: Option<f64>, tol: f64) -> Self {
        self.expected_measured = measured;
        self.expected_bound = bound;
        self.value_tol = tol;
        self
    }

    /// The same case with every bound negated.
    pub fn flip_bound_sign(mut self) -> Self {
        self.bound_scale = -self.bound_scale;
        self
    }

    pub fn category(&self) -> &'static str {
        match self.check {
            Check::HConvex { .. } => "h-convex",
            Check::SConvex { .. } => "s-convex",
            Check::ConvexLeft { .. } => "convex",
            Check::BoundedDerivative { .. } => "bounded-derivative",
            Check::Lipschitz { .. } => "lipschitz",
            Check::Lemma { .. } => "lemma",
            Check::Triple { .. } => "fejer",
            Check::Means { .. } => "means",
            Check::Moment { .. } => "moment",
            Check::Quadrature { .. } => "quadrature",
            Check::Refine { .. } => "refine",
            Check::HConvexity { .. } => "h-convexity",
        }
    }

    pub fn run(&self) -> CaseResult {
        let mut messages = Vec::new();
        let reports = match evaluate(&self.check, &mut messages) {
            Ok(r) => r,
            Err(e) => {
                return CaseResult {
                    name: self.name.clone(),
                    category: self.category(),
                    passed: false,
                    min_slack: f64::NEG_INFINITY,
                    reports: Vec::new(),
                    messages: vec![format!("error: {e}")],
                }
            }
        };
        let reports: Vec<BoundReport> = reports
            .into_iter()
            .map(|r| {
                let mut j = BoundReport::with_tol(r.label, r.measured, r.bound * self.bound_scale, r.report_tol);
                j.warnings = r.warnings;
                j
            })
            .collect();

        let mut passed = messages.is_empty();
        for r in &reports {
            if !r.satisfied {
                passed = false;
                messages.push(format!("{}: {} > {}", r.label, r.measured, r.bound));
            }
            if !r.warnings.is_empty() {
                passed = false;
                messages.extend(r.warnings.iter().map(|w| format!("{}: {w}", r.label)));
            }
        }
        if let Some(primary) = reports.first() {
            for (what, expected, got) in [
                ("measured", self.expected_measured, primary.measured),
                ("bound", self.expected_bound, primary.bound),
            ] {
                if let Some(e) = expected {
                    if !((got - e).abs() <= self.value_tol) {
                        passed = false;
                        messages.push(format!("{what} {got} differs from expected {e}"));
                    }
                }
            }
        }
        CaseResult {
            name: self.name.clone(),
            category: self.category(),
            passed,
            min_slack: reports.iter().map(|r| r.slack).fold(f64::INFINITY, f64::min),
            reports,
            messages,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseResult {
    pub name: String,
    pub category: &'static str,
    pub passed: bool,
    pub min_slack: f64,
    pub reports: Vec<BoundReport>,
    pub messages: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatteryReport {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    pub cases: Vec<CaseResult>,
}

impl BatteryReport {
    pub fn all_passed(&self) -> bool {
        self.failed == 0
    }
}

/// Runs the cases concurrently; results keep the input order.
pub fn run_battery(cases: &[Case]) -> BatteryReport {
    let workers = thread::available_parallelism().map_or(1, |n| n.get()).min(cases.len().max(1));
    let chunk = cases.len().div_ceil(workers).max(1);
    let results: Vec<CaseResult> = thread::scope(|s| {
        let handles: Vec<_> = cases
            .chunks(chunk)
            .map(|part| s.spawn(move || part.iter().map(Case::run).collect::<Vec<_>>()))
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("battery worker panicked"))
            .collect()
    });
    let passed = results.iter().filter(|r| r.passed).count();
    BatteryReport {
        total: results.len(),
        passed,
        failed: results.len() - passed,
        cases: results,
    }
}

fn problem(input: &ProblemInput) -> Result<ProblemSpec> {
    ProblemSpec::from_input(input)
}

fn evaluate(check: &Check, messages: &mut Vec<String>) -> Result<Vec<BoundReport>> {
    Ok(match check {
        Check::HConvex { problem: pi, kernel } => {
            let p = problem(pi)?;
            let h = HKernel::from_spec(kernel)?;
            let direct = bound_h_convex(&p, &h)?;
            let mirror = bound_h_convex_mirror(&p, &h)?;
            if (direct.bound - mirror.bound).abs() > 1e-8 {
                messages.push(format!("mirror bound {} differs from direct bound {}", mirror.bound, direct.bound));
            }
            vec![direct, mirror]
        }
        Check::SConvex { problem: pi, s } => {
            let p = problem(pi)?;
            let via_s = bound_s_convex(&p, *s)?;
            let via_h = bound_h_convex(&p, &HKernel::new_power(*s)?)?;
            if (via_s.bound - via_h.bound).abs() > 1e-9 {
                messages.push(format!("s-convex bound {} differs from power-kernel bound {}", via_s.bound, via_h.bound));
            }
            vec![via_s]
        }
        Check::ConvexLeft { problem: pi } => {
            let p = problem(pi)?;
            vec![bound_convex_left(&p)?, crate::bounds::bound_convex_right(&p)?]
        }
        Check::BoundedDerivative { problem: pi, m_lo, m_hi } => {
            let p = problem(pi)?;
            let r = bound_bounded_derivative(&p, DerivBounds::new(*m_lo, *m_hi)?, (2.0, 2.0))?;
            vec![r.primary, r.sup_form, r.holder_form]
        }
        Check::Lipschitz { problem: pi, k } => {
            let p = problem(pi)?;
            let r = bound_lipschitz(&p, LipschitzConstant::new(*k)?)?;
            vec![r.primary, r.sup_form]
        }
        Check::Lemma { problem: pi } => verify_lemma(&problem(pi)?, 101, &LemmaTolerances::default())?,
        Check::Triple { problem: pi } => {
            let t = fejer_triple(&problem(pi)?)?;
            vec![
                BoundReport::new("f(mid) int g <= int fg", t.lower, t.middle),
                BoundReport::new("int fg <= (f(a)+f(b))/2 int g", t.middle, t.upper),
            ]
        }
        Check::Means { a, b, n, k } => vec![means_bound_check(&MeanParams::new(*a, *b, *n, *k)?)?],
        Check::Moment { g, a, b, lambda, kernel } => {
            let d = DensitySpec::parse(g, *a, *b)?;
            vec![lambda_moment_bound_check(&d, *lambda, &HKernel::from_spec(kernel)?)?.report]
        }
        Check::Quadrature { problem: pi, kernel, n } => {
            let p = problem(pi)?;
            let q = run_quadrature(&p, &HKernel::from_spec(kernel)?, &uniform_partition(p.a, p.b, *n)?)?;
            let mut r = BoundReport::new("trapezoid error <= certificate", q.actual_error, q.error_bound);
            r.warnings = q.warnings;
            vec![r]
        }
        Check::Refine { problem: pi, kernel, tol, max_intervals } => {
            let p = problem(pi)?;
            let r = adaptive_refine(&p, &HKernel::from_spec(kernel)?, *tol, *max_intervals)?;
            if !r.converged {
                messages.push(format!("no convergence within {max_intervals} intervals"));
            }
            let mut b = BoundReport::with_tol("certified bound <= tol", r.error_bound, *tol, 0.0);
            b.warnings = r.warnings;
            vec![b]
        }
        Check::HConvexity { phi, kernel, a, b, grid, expect_pass } => {
            let e = Expression::parse(phi)?;
            let r = check_h_convex(|x| e.eval(x), &HKernel::from_spec(kernel)?, *a, *b, *grid)?;
            if r.passed() != *expect_pass {
                messages.push(format!("expected pass = {expect_pass}, got: {}", r.summary()));
            }
            let (measured, bound) = if *expect_pass {
                (r.max_violation, 0.0)
            } else {
                (0.0, r.max_violation)
            };
            vec![BoundReport::with_tol("h-convexity", measured, bound, 0.0)]
        }
    })
}

fn pi(f: &str, fprime: &str, g: &str, a: f64, b: f64) -> ProblemInput {
    ProblemInput {
        f: f.into(),
        fprime: Some(fprime.into()),
        g: g.into(),
        a,
        b,
    }
}

fn power(k: f64) -> KernelSpec {
    KernelSpec::Power { k }
}

fn dominance(name: &str, problem: ProblemInput, kernel: KernelSpec) -> Case {
    Case::new(name, Check::HConvex { problem, kernel })
}

/// Built-in cases with closed-form or independently derived answers.
pub fn default_cases() -> Vec<Case> {
    let e2 = 2f64.exp();
    let q = 0.5f64.powf(2.5) / 2.5;
    let half_convex = (2.0 * q + 0.1) / 1.5;
    let clipped_cos = "(cos(3.141592653589793*(x-1)) + abs(cos(3.141592653589793*(x-1))))/2";
    vec![
        dominance("square, unit weight, convex", pi("x^2", "2*x", "1", 0.0, 1.0), power(1.0))
            .expect(Some(1.0 / 6.0), Some(0.25), 1e-12),
        dominance("square, parabolic weight, convex", pi("x^2", "2*x", "x*(1-x)", 0.0, 1.0), power(1.0)),
        dominance("square, unit weight, P-function", pi("x^2", "2*x", "1", 0.0, 1.0), KernelSpec::Constant { c: 1.0 }),
        dominance("three-halves power, s = 1/2", pi("(2/3)*x^1.5", "x^0.5", "1", 0.0, 1.0), power(0.5))
            .expect(Some(1.0 / 15.0), Some(half_convex), 1e-9),
        dominance("exp, unit weight, convex", pi("exp(x)", "exp(x)", "1", 0.0, 2.0), power(1.0))
            .expect(Some(2.0), Some((1.0 + e2) / 2.0), 1e-9),
        dominance("exp, parabolic weight, convex", pi("exp(x)", "exp(x)", "x*(2-x)", 0.0, 2.0), power(1.0)),
        dominance("exp, unit weight, s = 1/2", pi("exp(x)", "exp(x)", "1", 0.0, 2.0), power(0.5)),
        dominance("cube on [0,2]", pi("x^3", "3*x^2", "1", 0.0, 2.0), power(1.0)),
        dominance("quartic, weight 1 - x^2", pi("x^4", "4*x^3", "1 - x^2", -1.0, 1.0), power(1.0)),
        dominance("signed square", pi("x*abs(x)", "2*abs(x)", "1", -1.0, 1.0), power(1.0)),
        dominance("log, parabolic weight", pi("log(x)", "1/x", "(x-1)*(3-x)", 1.0, 3.0), power(1.0)),
        dominance("sqrt, P-function", pi("sqrt(x)", "0.5/sqrt(x)", "1", 1.0, 4.0), KernelSpec::Constant { c: 1.0 }),
        dominance("decaying exp, s = 1/4", pi("exp(-x)", "-exp(-x)", "1", 0.0, 1.0), power(0.25)),
        dominance(
            "square, custom kernel sqrt(t)",
            pi("x^2", "2*x", "1", 0.0, 1.0),
            KernelSpec::Custom { expr: "sqrt(x)".into() },
        ),
        dominance("square, clipped cosine weight", pi("x^2", "2*x", clipped_cos, 0.0, 2.0), power(1.0)),
        Case::new("s-convex form, s = 1/2", Check::SConvex { problem: pi("(2/3)*x^1.5", "x^0.5", "1", 0.0, 1.0), s: 0.5 })
            .expect(Some(1.0 / 15.0), Some(half_convex), 1e-9),
        Case::new("convex halves, exp", Check::ConvexLeft { problem: pi("exp(x)", "exp(x)", "1", 0.0, 2.0) })
            .expect(Some(2.0), Some((1.0 + e2) / 2.0), 1e-9),
        Case::new(
            "bounded derivative, exp",
            Check::BoundedDerivative { problem: pi("exp(x)", "exp(x)", "1", 0.0, 2.0), m_lo: 1.0, m_hi: e2 },
        )
        .expect(Some(1.0), Some((e2 - 1.0) / 4.0), 1e-9),
        Case::new("Lipschitz derivative, [0,1]", Check::Lipschitz { problem: pi("x^2", "2*x", "1", 0.0, 1.0), k: 2.0 })
            .expect(Some(1.0 / 6.0), Some(1.0 / 6.0), 1e-9),
        Case::new("Lipschitz derivative, [0,2]", Check::Lipschitz { problem: pi("x^2", "2*x", "1", 0.0, 2.0), k: 2.0 })
            .expect(Some(2.0 / 3.0), Some(2.0 / 3.0), 1e-9),
        Case::new("lemma, unit weight", Check::Lemma { problem: pi("x^2", "2*x", "1", 0.0, 1.0) }),
        Case::new("lemma, parabolic weight", Check::Lemma { problem: pi("exp(x)", "exp(x)", "x*(1-x)", 0.0, 1.0) }),
        Case::new("lemma, clipped cosine", Check::Lemma { problem: pi("x^3", "3*x^2", clipped_cos, 0.0, 2.0) }),
        Case::new("Fejér sandwich", Check::Triple { problem: pi("x^2", "2*x", "6*x*(1-x)", 0.0, 1.0) })
            .expect(Some(0.25), Some(0.3), 1e-12),
        Case::new("means n=2 k=1", Check::Means { a: 1.0, b: 2.0, n: 2.0, k: 1.0 })
            .expect(Some(1.0 / 6.0), Some(0.75), 1e-12),
        Case::new("means n=3 k=1", Check::Means { a: 1.0, b: 2.0, n: 3.0, k: 1.0 })
            .expect(Some(0.75), Some(1.875), 1e-12),
        Case::new("means n=2 k=1/2", Check::Means { a: 1.0, b: 2.0, n: 2.0, k: 0.5 })
            .expect(Some(1.0 / 6.0), Some(0.965686), 1e-6),
        Case::new(
            "moment, parabolic density",
            Check::Moment { g: "6*(x-1)*(2-x)".into(), a: 1.0, b: 2.0, lambda: 1.0, kernel: power(1.0) },
        )
        .expect(Some(0.0), Some(0.5), 1e-10),
        Case::new(
            "moment, uniform, k = 0",
            Check::Moment { g: "1".into(), a: 1.0, b: 2.0, lambda: 1.0, kernel: power(0.0) },
        )
        .expect(Some(0.0), Some(1.0), 1e-10),
        Case::new(
            "second moment, uniform",
            Check::Moment { g: "1".into(), a: 1.0, b: 2.0, lambda: 2.0, kernel: power(1.0) },
        )
        .expect(Some(1.0 / 12.0), Some(0.75), 1e-10),
        Case::new(
            "quadrature, square, one panel",
            Check::Quadrature { problem: pi("x^2", "2*x", "1", 0.0, 1.0), kernel: power(1.0), n: 1 },
        )
        .expect(Some(1.0 / 6.0), Some(0.25), 1e-10),
        Case::new(
            "quadrature, exp, four panels",
            Check::Quadrature { problem: pi("exp(x)", "exp(x)", "1", 0.0, 2.0), kernel: power(1.0), n: 4 },
        )
        .expect(Some(0.13255), Some(0.81520), 1e-5),
        Case::new(
            "refine, square",
            Check::Refine { problem: pi("x^2", "2*x", "1", 0.0, 1.0), kernel: power(1.0), tol: 0.13, max_intervals: 2 },
        )
        .expect(Some(0.125), None, 1e-12),
        Case::new(
            "refine, exp",
            Check::Refine { problem: pi("exp(x)", "exp(x)", "1", 0.0, 2.0), kernel: power(1.0), tol: 0.05, max_intervals: 64 },
        ),
        Case::new(
            "square is convex",
            Check::HConvexity { phi: "x^2".into(), kernel: power(1.0), a: 0.0, b: 1.0, grid: 21, expect_pass: true },
        ),
        Case::new(
            "sqrt is 1/2-convex",
            Check::HConvexity { phi: "sqrt(x)".into(), kernel: power(0.5), a: 0.0, b: 1.0, grid: 21, expect_pass: true },
        ),
        Case::new(
            "sqrt is not convex",
            Check::HConvexity { phi: "sqrt(x)".into(), kernel: power(1.0), a: 0.0, b: 1.0, grid: 21, expect_pass: false },
        ),
    ]
}
