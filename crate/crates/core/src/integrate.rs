//! Adaptive Gauss–Kronrod (7/15) integration.
//!
//! Every integral in the crate goes through [`integrate`]. The rule never
//! samples the endpoints of a subinterval, so integrable endpoint
//! singularities such as `t^-0.5` near `t = 0` are handled by subdivision.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerances for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSettings {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_depth: u32,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        QuadratureSettings {
            abs_tol: 1e-10,
            rel_tol: 1e-8,
            max_depth: 50,
        }
    }
}

impl QuadratureSettings {
    pub fn new(abs_tol: f64, rel_tol: f64, max_depth: u32) -> Result<Self> {
        let s = QuadratureSettings {
            abs_tol,
            rel_tol,
            max_depth,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) {
            return Err(Error::param(format!("abs_tol must be > 0, got {}", self.abs_tol)));
        }
        if !(self.rel_tol >= 0.0) {
            return Err(Error::param(format!("rel_tol must be >= 0, got {}", self.rel_tol)));
        }
        if self.max_depth < 1 {
            return Err(Error::param("max_depth must be >= 1"));
        }
        Ok(())
    }

    /// Both tolerances divided by `factor`; depth unchanged.
    pub fn tightened(&self, factor: f64) -> Self {
        QuadratureSettings {
            abs_tol: self.abs_tol / factor,
            rel_tol: self.rel_tol / factor,
            max_depth: self.max_depth,
        }
    }
}

// Kronrod abscissae on [-1,1] (positive half, descending); odd indices are Gauss nodes.
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];

const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];

const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

// Hard cap on live subintervals; protects against tolerances below roundoff.
const MAX_SUBINTERVALS: usize = 20_000;

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    depth: u32,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl Eq for Segment {}

impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod15<F>(f: &F, a: f64, b: f64) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<f64>,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center)?;
    let mut res_k = fc * WGK[7];
    let mut res_g = fc * WG[3];
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx)?;
        let f2 = f(center + dx)?;
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = res_k * 0.5;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = res_k * half;
    res_abs *= half.abs();
    res_asc *= half.abs();
    let mut err = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    Ok((value, err))
}

/// Integrates `f` over `[a, b]` (requires `a <= b`).
///
/// Subintervals are bisected worst-first until the summed error estimate is
/// at most `max(abs_tol, rel_tol * |estimate|)`. Subintervals that reach
/// `max_depth` are frozen. If the tolerance still cannot be met, the
/// integral is retried under the substitution `x = a + (b-a)(3u² - 2u³)`,
/// which flattens endpoint singularities like `(x-a)^-1/2`; when that also
/// fails the error reports the worst frozen subinterval of the first pass.
pub fn integrate<F>(f: F, a: f64, b: f64, s: &QuadratureSettings) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    if !(a <= b) {
        return Err(Error::param(format!("integration bounds must satisfy a <= b, got [{a}, {b}]")));
    }
    if a == b {
        return Ok(0.0);
    }
    match adaptive(&f, a, b, s) {
        Err(first @ Error::DepthExhausted { .. }) => {
            let w = b - a;
            let smoothed = |u: f64| {
                let x = a + w * u * u * (3.0 - 2.0 * u);
                Ok(f(x)? * w * 6.0 * u * (1.0 - u))
            };
            adaptive(&smoothed, 0.0, 1.0, s).map_err(|_| first)
        }
        other => other,
    }
}

fn adaptive<F>(f: &F, a: f64, b: f64, s: &QuadratureSettings) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let (value, error) = kronrod15(f, a, b)?;
    let mut heap = BinaryHeap::new();
    heap.push(Segment {
        a,
        b,
        value,
        error,
        depth: 0,
    });
    let mut total = value;
    let mut total_err = error;
    let mut frozen: Vec<Segment> = Vec::new();

    loop {
        if total_err <= s.abs_tol.max(s.rel_tol * total.abs()) {
            return Ok(total);
        }
        let Some(worst) = heap.pop() else {
            break;
        };
        if worst.depth >= s.max_depth || heap.len() + frozen.len() >= MAX_SUBINTERVALS {
            frozen.push(worst);
            continue;
        }
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            frozen.push(worst);
            continue;
        }
        let (v1, e1) = kronrod15(f, worst.a, mid)?;
        let (v2, e2) = kronrod15(f, mid, worst.b)?;
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        let depth = worst.depth + 1;
        heap.push(Segment {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
            depth,
        });
        heap.push(Segment {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
            depth,
        });
    }

    let worst = frozen
        .into_iter()
        .max()
        .expect("loop exits only after freezing at least one segment");
    Err(Error::DepthExhausted {
        a: worst.a,
        b: worst.b,
        error: worst.error,
    })
}

/// Integrates over `[a, b]` split at every multiple of `cell` measured from
/// `origin`. Fixing the cut points independently of `a` and `b` keeps a kink
/// of `f` from hiding just inside a long panel next to a moving endpoint,
/// where no Gauss–Kronrod node would see it.
pub fn integrate_on_grid<F>(f: F, a: f64, b: f64, origin: f64, cell: f64, s: &QuadratureSettings) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    if !(cell > 0.0) {
        return Err(Error::param(format!("grid cell must be > 0, got {cell}")));
    }
    if !(a <= b) {
        return Err(Error::param(format!("integration bounds must satisfy a <= b, got [{a}, {b}]")));
    }
    let first = ((a - origin) / cell).floor() as i64 + 1;
    let mut lo = a;
    let mut total = 0.0;
    let mut k = first;
    loop {
        let cut = origin + cell * k as f64;
        if cut >= b {
            break;
        }
        if cut > lo {
            total += integrate(&f, lo, cut, s)?;
            lo = cut;
        }
        k += 1;
    }
    Ok(total + integrate(&f, lo, b, s)?)
}

/// Max of `|g|` on a uniform grid of `samples` points including both ends.
///
/// This is a grid approximation and therefore a lower bound on the true sup.
pub fn sup_norm<F>(g: F, a: f64, b: f64, samples: usize) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    if samples < 2 {
        return Err(Error::param("sup_norm needs at least 2 samples"));
    }
    let step = (b - a) / (samples - 1) as f64;
    let mut best = 0.0f64;
    for i in 0..samples {
        let x = if i == samples - 1 { b } else { a + step * i as f64 };
        best = best.max(g(x)?.abs());
    }
    Ok(best)
}

/// `(∫₀¹ |g(s)|^q ds)^(1/q)` for a function already parametrized over `[0, 1]`.
pub fn q_norm<F>(g_param: F, q: f64, s: &QuadratureSettings) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    if !(q >= 1.0) {
        return Err(Error::param(format!("q-norm needs q >= 1, got {q}")));
    }
    let integral = integrate(|t| Ok(g_param(t)?.abs().powf(q)), 0.0, 1.0, s)?;
    Ok(integral.powf(1.0 / q))
}
