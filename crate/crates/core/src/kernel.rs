//! Smoothing kernels.
//!
//! A kernel is the CDF `Σ` of a symmetric perturbation density `Σ'`. A
//! comparison with signed boundary distance `d` (true iff `d <= 0`) takes its
//! true branch with probability `Σ(-h·d)` once the distance is perturbed by a
//! sample scaled by `1/h`. Larger `h` sharpens the transition; `h = ∞`
//! recovers the discrete comparison exactly.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum KernelKind {
    /// `Σ(x) = 1 / (1 + e^{-x})`.
    #[default]
    #[serde(rename = "logistic")]
    Logistic,
    /// Standard normal CDF.
    #[serde(rename = "gauss", alias = "gaussian")]
    GaussianCdf,
}

impl KernelKind {
    pub const ALL: [KernelKind; 2] = [KernelKind::Logistic, KernelKind::GaussianCdf];

    /// `Σ(x)`, evaluated without overflow for any finite or infinite `x`.
    pub fn cdf(self, x: f64) -> f64 {
        match self {
            KernelKind::Logistic => {
                if x >= 0.0 {
                    1.0 / (1.0 + (-x).exp())
                } else {
                    let e = x.exp();
                    e / (1.0 + e)
                }
            }
            KernelKind::GaussianCdf => 0.5 * libm::erfc(-x * std::f64::consts::FRAC_1_SQRT_2),
        }
    }

    /// `Σ'(x)`.
    pub fn pdf(self, x: f64) -> f64 {
        match self {
            KernelKind::Logistic => {
                let e = (-x.abs()).exp();
                e / ((1.0 + e) * (1.0 + e))
            }
            KernelKind::GaussianCdf => FRAC_1_SQRT_2PI * (-0.5 * x * x).exp(),
        }
    }
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KernelKind::Logistic => "logistic",
            KernelKind::GaussianCdf => "gauss",
        })
    }
}

impl FromStr for KernelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "logistic" => Ok(KernelKind::Logistic),
            "gauss" | "gaussian" => Ok(KernelKind::GaussianCdf),
            other => Err(Error::InvalidConfig(format!("unknown kernel `{other}`"))),
        }
    }
}

/// Scale applied to boundary distances before the kernel.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Sharpness {
    Finite(f64),
    /// Discrete evaluation: no smoothing at all.
    Infinite,
}

impl Sharpness {
    /// `f64::INFINITY` maps to [`Sharpness::Infinite`].
    pub fn new(h: f64) -> Result<Self> {
        if h == f64::INFINITY {
            Ok(Sharpness::Infinite)
        } else if h.is_finite() && h > 0.0 {
            Ok(Sharpness::Finite(h))
        } else {
            Err(Error::InvalidSharpness(h))
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Sharpness::Finite(h) => h,
            Sharpness::Infinite => f64::INFINITY,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Sharpness::Infinite)
    }
}

impl fmt::Display for Sharpness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sharpness::Finite(h) => write!(f, "{h}"),
            Sharpness::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for Sharpness {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("inf") || s.eq_ignore_ascii_case("infinity") {
            return Ok(Sharpness::Infinite);
        }
        let h: f64 = s
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("invalid sharpness `{s}`")))?;
        Sharpness::new(h)
    }
}

impl Serialize for Sharpness {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Sharpness::Finite(h) => serializer.serialize_f64(*h),
            Sharpness::Infinite => serializer.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Sharpness {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Num(h) => Sharpness::new(h),
            Raw::Text(s) => s.parse(),
        }
        .map_err(serde::de::Error::custom)
    }
}

/// Signed distance from a boundary; the condition holds iff `d <= 0`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Distance(f64);

impl Distance {
    pub fn new(d: f64) -> Result<Self> {
        if d.is_nan() {
            Err(Error::NanOperand)
        } else {
            Ok(Distance(d))
        }
    }

    /// Distance of the comparison `a OP b`.
    pub fn between(a: f64, b: f64) -> Result<Self> {
        if a.is_nan() || b.is_nan() {
            return Err(Error::NanOperand);
        }
        Distance::new(a - b)
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// Probability that the true branch is selected under perturbation.
pub fn contrib_true(d: Distance, h: Sharpness, kind: KernelKind) -> f64 {
    match h {
        Sharpness::Infinite => {
            if d.0 <= 0.0 {
                1.0
            } else {
                0.0
            }
        }
        Sharpness::Finite(h) => kind.cdf(-h * d.0),
    }
}

/// Magnitude of `∂ contrib_true / ∂d`, i.e. `h·Σ'(h·d)`.
pub fn contrib_density(d: Distance, h: Sharpness, kind: KernelKind) -> Result<f64> {
    match h {
        Sharpness::Infinite => Err(Error::InfiniteDensity),
        Sharpness::Finite(h) => Ok(h * kind.pdf(h * d.0)),
    }
}

/// Sharpness and kernel of one evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Smoothing {
    pub h: Sharpness,
    pub kernel: KernelKind,
}

impl Default for Smoothing {
    fn default() -> Self {
        Smoothing {
            h: Sharpness::Finite(1.0),
            kernel: KernelKind::Logistic,
        }
    }
}

impl Smoothing {
    pub fn new(h: Sharpness, kernel: KernelKind) -> Self {
        Smoothing { h, kernel }
    }

    pub fn discrete() -> Self {
        Smoothing {
            h: Sharpness::Infinite,
            kernel: KernelKind::Logistic,
        }
    }

    /// [`contrib_true`] carried in `S` so that its dependence on `d` is
    /// differentiated. At infinite sharpness the result is a constant.
    pub fn contrib_true<S: Scalar>(&self, d: S) -> Result<S> {
        let dist = Distance::new(d.primal())?;
        let value = contrib_true(dist, self.h, self.kernel);
        match self.h {
            Sharpness::Infinite => Ok(S::constant(value)),
            Sharpness::Finite(h) => {
                let slope = -h * self.kernel.pdf(-h * dist.0);
                Ok(d.lift(value, slope))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(x: f64) -> Distance {
        Distance::new(x).unwrap()
    }

    const H1: Sharpness = Sharpness::Finite(1.0);

    #[test]
    fn contrib_true_examples() {
        assert_eq!(contrib_true(d(0.0), H1, KernelKind::Logistic), 0.5);
        let expected = 1.0 / (1.0 + (-2.0f64).exp());
        assert!((contrib_true(d(-2.0), H1, KernelKind::Logistic) - expected).abs() < 1e-15);
        assert!((expected - 0.880797).abs() < 1e-6);
        for kind in KernelKind::ALL {
            assert_eq!(contrib_true(d(0.3), Sharpness::Infinite, kind), 0.0);
            assert_eq!(contrib_true(d(0.0), Sharpness::Infinite, kind), 1.0);
            assert_eq!(contrib_true(d(-0.3), Sharpness::Infinite, kind), 1.0);
        }
        assert_eq!(contrib_true(d(0.0), H1, KernelKind::GaussianCdf), 0.5);
    }

    #[test]
    fn density_examples() {
        let lg = KernelKind::Logistic;
        assert_eq!(contrib_density(d(0.0), H1, lg).unwrap(), 0.25);
        assert_eq!(contrib_density(d(0.0), Sharpness::Finite(4.0), lg).unwrap(), 1.0);
        let s = 1.0 / (1.0 + 10f64.exp());
        let v = contrib_density(d(10.0), H1, lg).unwrap();
        assert!((v - s * (1.0 - s)).abs() < 1e-18);
        assert!((v - 4.54e-5).abs() < 1e-7);
        assert!(matches!(
            contrib_density(d(0.0), Sharpness::Infinite, lg),
            Err(Error::InfiniteDensity)
        ));
    }

    #[test]
    fn nan_distance_rejected() {
        assert!(matches!(Distance::new(f64::NAN), Err(Error::NanOperand)));
        assert!(Distance::between(1.0, f64::NAN).is_err());
    }

    #[test]
    fn sharpness_parsing() {
        assert_eq!("inf".parse::<Sharpness>().unwrap(), Sharpness::Infinite);
        assert_eq!("2.5".parse::<Sharpness>().unwrap(), Sharpness::Finite(2.5));
        assert!("0".parse::<Sharpness>().is_err());
        assert!("-1".parse::<Sharpness>().is_err());
        assert!("nan".parse::<Sharpness>().is_err());
        assert_eq!(Sharpness::new(f64::INFINITY).unwrap(), Sharpness::Infinite);
        let back: Sharpness = serde_json::from_str("\"inf\"").unwrap();
        assert_eq!(back, Sharpness::Infinite);
        let back: Sharpness = serde_json::from_str("10").unwrap();
        assert_eq!(back, Sharpness::Finite(10.0));
    }

    #[test]
    fn no_overflow_in_tails() {
        for kind in KernelKind::ALL {
            for &x in &[-1e4, -800.0, 800.0, 1e4, f64::INFINITY, f64::NEG_INFINITY] {
                let c = kind.cdf(x);
                assert!((0.0..=1.0).contains(&c), "{kind} cdf({x}) = {c}");
                assert!(kind.pdf(x).is_finite());
            }
            assert_eq!(kind.cdf(-1e4), 0.0);
            assert_eq!(kind.cdf(1e4), 1.0);
        }
    }

    #[test]
    fn complement_identity_on_grid() {
        for kind in KernelKind::ALL {
            for &h in &[0.1, 1.0, 7.5, 100.0] {
                for i in -200..=200 {
                    let x = i as f64 * 0.05;
                    let sum = contrib_true(d(x), Sharpness::Finite(h), kind)
                        + contrib_true(d(-x), Sharpness::Finite(h), kind);
                    assert!((sum - 1.0).abs() < 1e-12, "{kind} h={h} d={x}");
                }
            }
        }
    }

    #[test]
    fn monotone_sharpening() {
        for kind in KernelKind::ALL {
            for i in 1..100 {
                let x = i as f64 * 0.07;
                for &(h1, h2) in &[(0.5, 1.0), (1.0, 10.0), (10.0, 100.0)] {
                    let (a, b) = (Sharpness::Finite(h1), Sharpness::Finite(h2));
                    assert!(contrib_true(d(-x), b, kind) >= contrib_true(d(-x), a, kind));
                    assert!(contrib_true(d(x), b, kind) <= contrib_true(d(x), a, kind));
                }
            }
        }
    }

    #[test]
    fn discrete_limit() {
        for kind in KernelKind::ALL {
            for &x in &[-5.0, -1.0, -1e-3, 1e-3, 0.5, 3.0] {
                let step = if x <= 0.0 { 1.0 } else { 0.0 };
                let c = contrib_true(d(x), Sharpness::Finite(1e6), kind);
                assert!((c - step).abs() < 1e-9, "{kind} d={x}");
            }
        }
    }

    // Central differences of contrib_true against the closed-form density.
    #[test]
    fn density_matches_finite_differences() {
        for kind in KernelKind::ALL {
            for &h in &[0.5, 1.0, 10.0] {
                let hs = Sharpness::Finite(h);
                for i in -50..=50 {
                    let x = i as f64 * 0.1;
                    let step = 1e-4 / h;
                    // fourth-order stencil, on the small tail of the kernel
                    let f = |t: f64| {
                        if x < 0.0 {
                            -contrib_true(d(-t), hs, kind)
                        } else {
                            contrib_true(d(t), hs, kind)
                        }
                    };
                    let fd = (-f(x + 2.0 * step) + 8.0 * f(x + step) - 8.0 * f(x - step) + f(x - 2.0 * step))
                        / (12.0 * step);
                    let exact = contrib_density(d(x), hs, kind).unwrap();
                    let rel = (fd.abs() - exact).abs() / exact.max(1e-300);
                    if exact > 1e-8 {
                        assert!(rel < 1e-6, "{kind} h={h} d={x}: fd={fd} exact={exact}");
                    }
                }
            }
        }
    }

    #[test]
    fn density_properties() {
        for kind in KernelKind::ALL {
            let mut prev = 0.0;
            for i in -400..=0 {
                let x = i as f64 * 0.02;
                let p = kind.pdf(x);
                assert!(p > 0.0 || x < -30.0);
                assert!((p - kind.pdf(-x)).abs() < 1e-17);
                assert!(p >= prev);
                prev = p;
            }
            // trapezoidal mass over [-40, 40]
            let n = 80_000;
            let w = 80.0 / n as f64;
            let mass: f64 = (0..=n)
                .map(|i| {
                    let x = -40.0 + i as f64 * w;
                    let c = if i == 0 || i == n { 0.5 } else { 1.0 };
                    c * kind.pdf(x)
                })
                .sum::<f64>()
                * w;
            assert!((mass - 1.0).abs() < 1e-9, "{kind} mass {mass}");
        }
    }

    #[test]
    fn kernel_parse_roundtrip() {
        for kind in KernelKind::ALL {
            assert_eq!(kind.to_string().parse::<KernelKind>().unwrap(), kind);
        }
        assert!("cauchy".parse::<KernelKind>().is_err());
    }
}
