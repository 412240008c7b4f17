//! The kernel `h` of an h-convexity condition and its cumulative integrals.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Expression;
use crate::integrate::{integrate, QuadratureSettings};

const VALIDATION_POINTS: usize = 1001;

/// Kernel `h: [0,1] -> [0, ∞)`.
#[derive(Debug, Clone, PartialEq)]
pub enum HKernel {
    /// `h(t) = t^k`. `k = 1` is ordinary convexity, `k = s ∈ (0,1]` is
    /// s-convexity, `k = -1` is Godunova–Levin.
    Power(f64),
    /// `h(t) = c`; `c = 1` gives P-functions.
    Constant(f64),
    /// User expression in `x`, where `x` plays the role of `t`.
    Custom(Expression),
}

/// Serialized kernel description, e.g. `{"kind":"power","k":0.5}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum KernelSpec {
    Power { k: f64 },
    Constant { c: f64 },
    Custom { expr: String },
}

impl HKernel {
    /// Builds a kernel and checks `h >= 0` and `h ≢ 0` on an open grid of (0,1).
    pub fn new_power(k: f64) -> Result<Self> {
        HKernel::Power(k).validated()
    }

    pub fn new_constant(c: f64) -> Result<Self> {
        HKernel::Constant(c).validated()
    }

    pub fn new_custom(expr: Expression) -> Result<Self> {
        HKernel::Custom(expr).validated()
    }

    pub fn from_spec(spec: &KernelSpec) -> Result<Self> {
        match spec {
            KernelSpec::Power { k } => HKernel::new_power(*k),
            KernelSpec::Constant { c } => HKernel::new_constant(*c),
            KernelSpec::Custom { expr } => HKernel::new_custom(Expression::parse(expr)?),
        }
    }

    pub fn to_spec(&self) -> KernelSpec {
        match self {
            HKernel::Power(k) => KernelSpec::Power { k: *k },
            HKernel::Constant(c) => KernelSpec::Constant { c: *c },
            HKernel::Custom(e) => KernelSpec::Custom { expr: e.to_string() },
        }
    }

    fn validated(self) -> Result<Self> {
        if let HKernel::Power(k) | HKernel::Constant(k) = self {
            if !k.is_finite() {
                return Err(Error::param("kernel parameter must be finite"));
            }
        }
        let mut any_positive = false;
        for i in 1..=VALIDATION_POINTS {
            let t = i as f64 / (VALIDATION_POINTS + 1) as f64;
            let v = self.value(t)?;
            if v < 0.0 {
                return Err(Error::Negative { x: t, value: v });
            }
            any_positive |= v > 0.0;
        }
        if !any_positive {
            return Err(Error::param("kernel h must not vanish identically"));
        }
        Ok(self)
    }

    /// `h(t)`. Power kernels with `k < 0` are undefined at `t = 0`.
    pub fn value(&self, t: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::param(format!("kernel argument {t} outside [0, 1]")));
        }
        match self {
            HKernel::Power(k) => {
                if t == 0.0 && *k < 0.0 {
                    return Err(Error::Domain {
                        expr: format!("t^{k}"),
                        x: t,
                    });
                }
                Ok(t.powf(*k))
            }
            HKernel::Constant(c) => Ok(*c),
            HKernel::Custom(e) => e.eval(t),
        }
    }

    /// Fails with [`Error::NonIntegrableKernel`] for power kernels with `k <= -1`.
    pub fn ensure_integrable(&self) -> Result<()> {
        match self {
            HKernel::Power(k) if *k <= -1.0 => Err(Error::NonIntegrableKernel { k: *k }),
            _ => Ok(()),
        }
    }

    /// `S(u) = ∫₀ᵘ [h(t) + h(1-t)] dt`.
    pub fn sum_cumulative(&self, u: f64, s: &QuadratureSettings) -> Result<f64> {
        if !(0.0..=1.0).contains(&u) {
            return Err(Error::param(format!("cumulative kernel argument {u} outside [0, 1]")));
        }
        self.ensure_integrable()?;
        match self {
            HKernel::Power(k) => {
                let e = k + 1.0;
                Ok((u.powf(e) + 1.0 - (1.0 - u).powf(e)) / e)
            }
            HKernel::Constant(c) => Ok(2.0 * c * u),
            HKernel::Custom(expr) => integrate(
                |t| Ok(expr.eval(t)? + expr.eval(1.0 - t)?),
                0.0,
                u,
                s,
            ),
        }
    }

    /// `S(1/2) = ∫₀^{1/2} [h(t) + h(1-t)] dt`; equals `1/(k+1)` for power kernels.
    pub fn half_interval_integral(&self, s: &QuadratureSettings) -> Result<f64> {
        self.sum_cumulative(0.5, s)
    }
}

pub fn kernel_value(h: &HKernel, t: f64) -> Result<f64> {
    h.value(t)
}

pub fn kernel_sum_cumulative(h: &HKernel, u: f64) -> Result<f64> {
    h.sum_cumulative(u, &QuadratureSettings::default())
}

pub fn half_interval_kernel_integral(h: &HKernel) -> Result<f64> {
    h.half_interval_integral(&QuadratureSettings::default())
}

impl fmt::Display for HKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HKernel::Power(k) => write!(f, "power:{k}"),
            HKernel::Constant(c) => write!(f, "constant:{c}"),
            HKernel::Custom(e) => write!(f, "custom:{e}"),
        }
    }
}

/// Parses the flat syntax `power:K`, `constant:C` or `custom:<expr>`.
impl FromStr for HKernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, arg) = s
            .split_once(':')
            .ok_or_else(|| Error::param(format!("kernel `{s}` must look like kind:value")))?;
        let number = |arg: &str| {
            arg.trim()
                .parse::<f64>()
                .map_err(|_| Error::param(format!("kernel parameter `{arg}` is not a number")))
        };
        match kind.trim() {
            "power" => HKernel::new_power(number(arg)?),
            "constant" => HKernel::new_constant(number(arg)?),
            "custom" => HKernel::new_custom(Expression::parse(arg)?),
            other => Err(Error::param(format!("unknown kernel kind `{other}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn st() -> QuadratureSettings {
        QuadratureSettings::default()
    }

    // ∫_lo^hi t^k dt through t = v², which removes the t^-1/2 singularity.
    fn oracle_power_integral(k: f64, lo: f64, hi: f64) -> f64 {
        integrate(
            |v: f64| Ok(2.0 * v.powf(2.0 * k + 1.0)),
            lo.sqrt(),
            hi.sqrt(),
            &QuadratureSettings::new(1e-14, 1e-13, 60).unwrap(),
        )
        .unwrap()
    }

    fn oracle_s(k: f64, u: f64) -> f64 {
        oracle_power_integral(k, 0.0, u) + oracle_power_integral(k, 1.0 - u, 1.0)
    }

    #[test]
    fn values() {
        assert_eq!(HKernel::new_power(1.0).unwrap().value(0.3).unwrap(), 0.3);
        let c = HKernel::new_constant(1.0).unwrap();
        for t in [0.0, 0.2, 1.0] {
            assert_eq!(c.value(t).unwrap(), 1.0);
        }
        assert_eq!(HKernel::new_power(0.5).unwrap().value(0.25).unwrap(), 0.5);
        let gl = HKernel::new_power(-1.0).unwrap();
        assert!(matches!(gl.value(0.0), Err(Error::Domain { .. })));
        assert_eq!(gl.value(0.5).unwrap(), 2.0);
    }

    #[test]
    fn rejects_bad_kernels() {
        assert!(HKernel::new_constant(0.0).is_err());
        assert!(HKernel::new_constant(-1.0).is_err());
        assert!(HKernel::new_custom(Expression::parse("x - 0.5").unwrap()).is_err());
        assert!(HKernel::new_power(f64::NAN).is_err());
    }

    #[test]
    fn cumulative_examples() {
        let s = st();
        let p1 = HKernel::new_power(1.0).unwrap();
        assert!((p1.sum_cumulative(0.5, &s).unwrap() - 0.5).abs() < 1e-15);
        for k in [-0.5, 0.0, 0.5, 1.0, 2.5] {
            let h = HKernel::new_power(k).unwrap();
            let closed = h.sum_cumulative(1.0, &s).unwrap();
            assert!((closed - 2.0 / (k + 1.0)).abs() < 1e-12);
            assert!((closed - oracle_s(k, 1.0)).abs() < 1e-9, "k={k}");
        }
        let c1 = HKernel::new_constant(1.0).unwrap();
        assert_eq!(c1.sum_cumulative(0.25, &s).unwrap(), 0.5);
    }

    #[test]
    fn half_interval_values() {
        let s = st();
        let half = |k: f64| HKernel::new_power(k).unwrap().half_interval_integral(&s).unwrap();
        assert!((half(1.0) - 0.5).abs() < 1e-15);
        assert!((half(0.0) - 1.0).abs() < 1e-15);
        assert!((half(0.0) - oracle_s(0.0, 0.5)).abs() < 1e-9);
        assert!((half(-0.5) - 2.0).abs() < 1e-12);
        assert!((half(-0.5) - oracle_s(-0.5, 0.5)).abs() < 1e-9);
    }

    #[test]
    fn non_integrable_power_kernels() {
        let gl = HKernel::new_power(-1.0).unwrap();
        assert!(matches!(
            gl.sum_cumulative(0.5, &st()),
            Err(Error::NonIntegrableKernel { .. })
        ));
        assert!(HKernel::new_power(-2.0).unwrap().half_interval_integral(&st()).is_err());
    }

    #[test]
    fn custom_kernel_matches_power() {
        let s = st();
        let custom = HKernel::new_custom(Expression::parse("x^0.5").unwrap()).unwrap();
        let power = HKernel::new_power(0.5).unwrap();
        for u in [0.0, 0.1, 0.5, 0.9, 1.0] {
            let a = custom.sum_cumulative(u, &s).unwrap();
            let b = power.sum_cumulative(u, &s).unwrap();
            assert!((a - b).abs() < 1e-8, "u={u}: {a} vs {b}");
        }
    }

    #[test]
    fn flat_syntax_and_json() {
        let h: HKernel = "power:0.5".parse().unwrap();
        assert_eq!(h, HKernel::Power(0.5));
        let c: HKernel = "constant:1".parse().unwrap();
        assert_eq!(c, HKernel::Constant(1.0));
        let e: HKernel = "custom:1 + x".parse().unwrap();
        assert!(matches!(e, HKernel::Custom(_)));
        assert!("power".parse::<HKernel>().is_err());
        assert!("cubic:2".parse::<HKernel>().is_err());

        let spec: KernelSpec = serde_json::from_str(r#"{"kind":"power","k":0.5}"#).unwrap();
        assert_eq!(HKernel::from_spec(&spec).unwrap(), HKernel::Power(0.5));
        let spec: KernelSpec = serde_json::from_str(r#"{"kind":"custom","expr":"x^2+1"}"#).unwrap();
        assert!(matches!(HKernel::from_spec(&spec).unwrap(), HKernel::Custom(_)));
        let spec: KernelSpec = serde_json::from_str(r#"{"kind":"constant","c":1}"#).unwrap();
        assert_eq!(
            serde_json::to_string(&HKernel::from_spec(&spec).unwrap().to_spec()).unwrap(),
            r#"{"kind":"constant","c":1.0}"#
        );
    }

    #[test]
    fn monotone_on_grid() {
        let s = st();
        for h in [
            HKernel::new_power(-0.5).unwrap(),
            HKernel::new_power(2.0).unwrap(),
            HKernel::new_constant(3.0).unwrap(),
        ] {
            let mut prev = 0.0;
            for i in 0..=100 {
                let v = h.sum_cumulative(i as f64 / 100.0, &s).unwrap();
                assert!(v >= prev - 1e-15);
                prev = v;
            }
        }
    }

    proptest! {
        #[test]
        fn sum_splits_into_both_tails(k in -0.5f64..3.0, u in 0.0f64..1.0) {
            let h = HKernel::new_power(k).unwrap();
            let direct = h.sum_cumulative(u, &st()).unwrap();
            prop_assert!((direct - oracle_s(k, u)).abs() < 1e-9);
        }
    }
}
