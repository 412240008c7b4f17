//! Sampling falsifier for h-convexity:
//! `φ(λx + (1-λ)y) <= h(λ)φ(x) + h(1-λ)φ(y)` for nonnegative `φ`.
//!
//! A report with no violations means "not refuted at this resolution", not a proof.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::HKernel;

const MAX_LISTED: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Violation {
    pub x: f64,
    pub y: f64,
    pub lambda: f64,
    pub lhs: f64,
    pub rhs: f64,
}

impl Violation {
    pub fn excess(&self) -> f64 {
        self.lhs - self.rhs
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvexityReport {
    pub checked_triples: u64,
    pub violation_count: u64,
    /// The worst violations, largest excess first, at most 20.
    pub violations: Vec<Violation>,
    pub max_violation: f64,
    pub hc_tol: f64,
}

impl ConvexityReport {
    fn empty(hc_tol: f64) -> Self {
        ConvexityReport {
            checked_triples: 0,
            violation_count: 0,
            violations: Vec::new(),
            max_violation: 0.0,
            hc_tol,
        }
    }

    pub fn passed(&self) -> bool {
        self.violation_count == 0
    }

    fn record(&mut self, v: Violation) {
        self.violation_count += 1;
        self.max_violation = self.max_violation.max(v.excess());
        if self.violations.len() < MAX_LISTED {
            self.violations.push(v);
            self.violations.sort_by(|p, q| q.excess().total_cmp(&p.excess()));
        } else if v.excess() > self.violations[MAX_LISTED - 1].excess() {
            self.violations[MAX_LISTED - 1] = v;
            self.violations.sort_by(|p, q| q.excess().total_cmp(&p.excess()));
        }
    }

    /// Combines reports over disjoint parts of the triple set.
    pub fn merge(mut self, other: ConvexityReport) -> ConvexityReport {
        self.checked_triples += other.checked_triples;
        let unlisted = other.violation_count - other.violations.len() as u64;
        for v in other.violations {
            self.record(v);
        }
        self.violation_count += unlisted;
        self.max_violation = self.max_violation.max(other.max_violation);
        self.hc_tol = self.hc_tol.max(other.hc_tol);
        self
    }

    pub fn summary(&self) -> String {
        if self.passed() {
            format!(
                "no violation in {} triples (not refuted at this grid resolution)",
                self.checked_triples
            )
        } else {
            format!(
                "{} violations in {} triples, max excess {:e}",
                self.violation_count, self.checked_triples, self.max_violation
            )
        }
    }
}

/// Checks `φ` on `grid` uniform points of `[a, b]` for `x`, `y` and
/// `λ = i/(grid+1)`, `i = 1..=grid`, with the default slack
/// `1e-9 · (1 + max |φ|)`.
pub fn check_h_convex<F>(phi: F, h: &HKernel, a: f64, b: f64, grid: usize) -> Result<ConvexityReport>
where
    F: Fn(f64) -> Result<f64>,
{
    check_h_convex_with_tol(phi, h, a, b, grid, None)
}

pub fn check_h_convex_with_tol<F>(
    phi: F,
    h: &HKernel,
    a: f64,
    b: f64,
    grid: usize,
    hc_tol: Option<f64>,
) -> Result<ConvexityReport>
where
    F: Fn(f64) -> Result<f64>,
{
    if grid < 3 {
        return Err(Error::param("h-convexity grid needs at least 3 points"));
    }
    if !(a < b) {
        return Err(Error::param(format!("need a < b, got [{a}, {b}]")));
    }
    let step = (b - a) / (grid - 1) as f64;
    let xs: Vec<f64> = (0..grid)
        .map(|i| if i == grid - 1 { b } else { a + step * i as f64 })
        .collect();
    let values = xs.iter().map(|&x| phi(x)).collect::<Result<Vec<_>>>()?;
    for (&x, &v) in xs.iter().zip(&values) {
        if v < -1e-12 {
            return Err(Error::Negative { x, value: v });
        }
    }
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = hc_tol.unwrap_or(1e-9 * (1.0 + scale));

    let lambdas: Vec<(f64, f64, f64)> = (1..=grid)
        .map(|i| {
            let l = i as f64 / (grid + 1) as f64;
            Ok((l, h.value(l)?, h.value(1.0 - l)?))
        })
        .collect::<Result<_>>()?;

    let mut report = ConvexityReport::empty(tol);
    for (i, &x) in xs.iter().enumerate() {
        for (j, &y) in xs.iter().enumerate() {
            for &(l, hl, hml) in &lambdas {
                report.checked_triples += 1;
                let lhs = phi(l * x + (1.0 - l) * y)?;
                let rhs = hl * values[i] + hml * values[j];
                if lhs > rhs + tol {
                    report.record(Violation {
                        x,
                        y,
                        lambda: l,
                        lhs,
                        rhs,
                    });
                }
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pw(k: f64) -> HKernel {
        HKernel::new_power(k).unwrap()
    }

    #[test]
    fn square_is_convex() {
        let r = check_h_convex(|x| Ok(x * x), &pw(1.0), 0.0, 1.0, 21).unwrap();
        assert!(r.passed(), "{}", r.summary());
        assert_eq!(r.checked_triples, 21 * 21 * 21);
    }

    #[test]
    fn sqrt_is_half_convex_not_convex() {
        let r = check_h_convex(|x: f64| Ok(x.sqrt()), &pw(0.5), 0.0, 1.0, 21).unwrap();
        assert!(r.passed(), "{}", r.summary());
        let r = check_h_convex(|x: f64| Ok(x.sqrt()), &pw(1.0), 0.0, 1.0, 21).unwrap();
        assert!(!r.passed());
        assert!(!r.violations.is_empty() && r.violations.len() <= 20);
        // x=0, y=1, λ≈½ gives √½ > ½
        assert!(r.max_violation > 0.2);
        let w = r.violations[0];
        assert!(w.lhs > w.rhs);
    }

    #[test]
    fn godunova_levin_kernel_is_usable() {
        let r = check_h_convex(|x| Ok(1.0 + x * x), &pw(-1.0), 0.0, 1.0, 11).unwrap();
        assert!(r.passed());
    }

    #[test]
    fn rejects_negative_functions() {
        assert!(matches!(
            check_h_convex(|x| Ok(x - 0.5), &pw(1.0), 0.0, 1.0, 11),
            Err(Error::Negative { .. })
        ));
        assert!(check_h_convex(|x| Ok(x), &pw(1.0), 0.0, 1.0, 2).is_err());
    }

    #[test]
    fn convex_implies_p_function() {
        let funcs: [fn(f64) -> f64; 4] = [|x| x * x, |x| x.exp(), |x| (x - 0.3).abs(), |x| 2.0 * x];
        for f in funcs {
            let convex = check_h_convex(|x| Ok(f(x)), &pw(1.0), 0.0, 2.0, 15).unwrap();
            let p = check_h_convex(|x| Ok(f(x)), &HKernel::new_constant(1.0).unwrap(), 0.0, 2.0, 15)
                .unwrap();
            assert!(convex.passed() && p.passed());
        }
    }

    #[test]
    fn tolerance_monotone() {
        let mut prev = u64::MAX;
        for tol in [0.0, 1e-3, 1e-2, 0.05, 0.1, 0.5] {
            let r = check_h_convex_with_tol(|x: f64| Ok(x.sqrt()), &pw(1.0), 0.0, 1.0, 15, Some(tol))
                .unwrap();
            assert!(r.violation_count <= prev);
            prev = r.violation_count;
        }
        assert_eq!(prev, 0);
    }

    #[test]
    fn merge_adds_counts() {
        let a = check_h_convex(|x: f64| Ok(x.sqrt()), &pw(1.0), 0.0, 1.0, 9).unwrap();
        let b = check_h_convex(|x: f64| Ok(x.sqrt()), &pw(1.0), 0.0, 1.0, 9).unwrap();
        let m = a.clone().merge(b);
        assert_eq!(m.checked_triples, 2 * a.checked_triples);
        assert_eq!(m.violation_count, 2 * a.violation_count);
        assert_eq!(m.max_violation, a.max_violation);
    }
}
