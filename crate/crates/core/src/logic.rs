//! Probabilistic boolean algebra.
//!
//! Every comparison yields a [`SmoothBool`]: the unperturbed truth value and
//! the expected probability of truth under perturbation. Connectives treat the
//! perturbations of distinct conditions as independent, so reusing one
//! `SmoothBool` twice in a clause does not model their correlation.

use std::ops::{BitAnd, BitOr, Not};

use crate::error::{Error, Result};
use crate::kernel::{Sharpness, Smoothing};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmoothBool<S = f64> {
    pub discrete: bool,
    pub prob: S,
}

impl<S: Scalar> SmoothBool<S> {
    pub fn new(discrete: bool, prob: S) -> Self {
        SmoothBool { discrete, prob }
    }

    /// A condition with no boundary nearby.
    pub fn certain(value: bool) -> Self {
        SmoothBool {
            discrete: value,
            prob: S::constant(if value { 1.0 } else { 0.0 }),
        }
    }

    pub fn and(self, other: Self) -> Self {
        SmoothBool {
            discrete: self.discrete && other.discrete,
            prob: self.prob * other.prob,
        }
    }

    pub fn or(self, other: Self) -> Self {
        SmoothBool {
            discrete: self.discrete || other.discrete,
            prob: self.prob + other.prob - self.prob * other.prob,
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Self {
        SmoothBool {
            discrete: !self.discrete,
            prob: S::one() - self.prob,
        }
    }

    /// Contribution of the branch selected by `taken`.
    pub fn contribution(self, taken: bool) -> S {
        if taken {
            self.prob
        } else {
            S::one() - self.prob
        }
    }
}

impl<S: Scalar> BitAnd for SmoothBool<S> {
    type Output = Self;
    fn bitand(self, rhs: Self) -> Self {
        self.and(rhs)
    }
}

impl<S: Scalar> BitOr for SmoothBool<S> {
    type Output = Self;
    fn bitor(self, rhs: Self) -> Self {
        self.or(rhs)
    }
}

impl<S: Scalar> Not for SmoothBool<S> {
    type Output = Self;
    fn not(self) -> Self {
        SmoothBool::not(self)
    }
}

fn check<S: Scalar>(a: S, b: S) -> Result<(f64, f64)> {
    let (a, b) = (a.primal(), b.primal());
    if a.is_nan() || b.is_nan() {
        return Err(Error::NanOperand);
    }
    Ok((a, b))
}

/// `a < b`. Shares its probability with [`le`].
/// At infinite sharpness a tie would make the kernel limit disagree with
/// strict comparisons, so the discrete outcome is returned directly.
fn ordered<S: Scalar>(discrete: bool, prob: impl FnOnce() -> Result<S>, sm: &Smoothing) -> Result<SmoothBool<S>> {
    match sm.h {
        Sharpness::Infinite => Ok(SmoothBool::certain(discrete)),
        Sharpness::Finite(_) => Ok(SmoothBool::new(discrete, prob()?)),
    }
}

pub fn lt<S: Scalar>(a: S, b: S, sm: &Smoothing) -> Result<SmoothBool<S>> {
    let (pa, pb) = check(a, b)?;
    ordered(pa < pb, || sm.contrib_true(a - b), sm)
}

pub fn le<S: Scalar>(a: S, b: S, sm: &Smoothing) -> Result<SmoothBool<S>> {
    let (pa, pb) = check(a, b)?;
    ordered(pa <= pb, || sm.contrib_true(a - b), sm)
}

pub fn gt<S: Scalar>(a: S, b: S, sm: &Smoothing) -> Result<SmoothBool<S>> {
    let (pa, pb) = check(a, b)?;
    ordered(pa > pb, || Ok(S::one() - sm.contrib_true(a - b)?), sm)
}

pub fn ge<S: Scalar>(a: S, b: S, sm: &Smoothing) -> Result<SmoothBool<S>> {
    let (pa, pb) = check(a, b)?;
    ordered(pa >= pb, || Ok(S::one() - sm.contrib_true(a - b)?), sm)
}

/// `a == b` built as `a <= b ∧ a >= b`, so `prob = σ·(1-σ) <= 0.25`.
///
/// Unlike the ordering comparisons, `discrete` does not agree with
/// `prob >= 0.5`. At infinite sharpness the product would vanish even for
/// equal operands, so the discrete limit returns the indicator instead.
pub fn eq<S: Scalar>(a: S, b: S, sm: &Smoothing) -> Result<SmoothBool<S>> {
    let (pa, pb) = check(a, b)?;
    if let Sharpness::Infinite = sm.h {
        return Ok(SmoothBool::certain(pa == pb));
    }
    let s = sm.contrib_true(a - b)?;
    Ok(SmoothBool::new(pa == pb, s * (S::one() - s)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::KernelKind;
    use proptest::prelude::*;

    fn h(v: f64) -> Smoothing {
        Smoothing::new(Sharpness::new(v).unwrap(), KernelKind::Logistic)
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn comparison_examples() {
        let s1 = h(1.0);
        let sig2 = 1.0 / (1.0 + (-2.0f64).exp());

        let r = lt(1.0, 3.0, &s1).unwrap();
        assert!(r.discrete && close(r.prob, sig2, 1e-15));
        let r = le(2.0, 2.0, &s1).unwrap();
        assert!(r.discrete && r.prob == 0.5);
        let r = lt(5.0, 1.0, &Smoothing::discrete()).unwrap();
        assert!(!r.discrete && r.prob == 0.0);

        let r = gt(3.0, 1.0, &s1).unwrap();
        assert!(r.discrete && close(r.prob, sig2, 1e-15));
        let r = ge(2.0, 2.0, &s1).unwrap();
        assert!(r.discrete && r.prob == 0.5);
        for &x in &[-3.0, 0.0, 2.5] {
            let r = gt(x, x, &h(7.0)).unwrap();
            assert!(!r.discrete && r.prob == 0.5);
            assert!(!lt(x, x, &s1).unwrap().discrete);
        }
    }

    #[test]
    fn equality_examples() {
        let s1 = h(1.0);
        let r = eq(2.0, 2.0, &s1).unwrap();
        assert!(r.discrete && r.prob == 0.25);
        let s = 1.0 / (1.0 + (-4.0f64).exp());
        let r = eq(0.0, 4.0, &s1).unwrap();
        assert!(!r.discrete && close(r.prob, s * (1.0 - s), 1e-15));
        assert!(close(r.prob, 0.01766, 1e-5));
        let r = eq(1.0, 1.0, &Smoothing::discrete()).unwrap();
        assert!(r.discrete && r.prob == 1.0);
        let r = eq(1.0, 2.0, &Smoothing::discrete()).unwrap();
        assert!(!r.discrete && r.prob == 0.0);
    }

    #[test]
    fn ties_at_infinite_sharpness() {
        let d = Smoothing::discrete();
        assert_eq!(lt(0.0, 0.0, &d).unwrap(), SmoothBool::certain(false));
        assert_eq!(le(0.0, 0.0, &d).unwrap(), SmoothBool::certain(true));
        assert_eq!(gt(0.0, 0.0, &d).unwrap(), SmoothBool::certain(false));
        assert_eq!(ge(0.0, 0.0, &d).unwrap(), SmoothBool::certain(true));
        assert_eq!(lt(-1.0, 0.0, &d).unwrap(), SmoothBool::certain(true));
    }

    #[test]
    fn nan_operands_are_errors() {
        let s1 = h(1.0);
        assert!(matches!(lt(f64::NAN, 1.0, &s1), Err(Error::NanOperand)));
        assert!(matches!(ge(0.0, f64::NAN, &s1), Err(Error::NanOperand)));
        assert!(matches!(eq(f64::NAN, f64::NAN, &s1), Err(Error::NanOperand)));
        assert!(matches!(
            le(f64::NAN, 1.0, &Smoothing::discrete()),
            Err(Error::NanOperand)
        ));
    }

    #[test]
    fn connective_examples() {
        let t = |p| SmoothBool::new(true, p);
        let f = |p| SmoothBool::new(false, p);

        let r = t(0.9) & t(0.8);
        assert!(r.discrete && close(r.prob, 0.72, 1e-15));
        assert_eq!(t(0.5) & t(0.5), t(0.25));
        assert_eq!(t(1.0) & f(0.0), f(0.0));

        let r = f(0.2) | f(0.3);
        assert!(!r.discrete && close(r.prob, 0.44, 1e-15));
        assert_eq!(t(1.0) | f(0.0), t(1.0));
        let p = 0.37;
        assert!(close((f(p) | f(p)).prob, 2.0 * p - p * p, 1e-15));

        let r = !t(0.9);
        assert!(!r.discrete && close(r.prob, 0.1, 1e-15));
        assert!((!!t(0.3)).discrete && close((!!t(0.3)).prob, 0.3, 1e-15));
        assert_eq!(!t(0.5), f(0.5));
    }

    fn smooth_bool() -> impl Strategy<Value = SmoothBool<f64>> {
        (any::<bool>(), 0.0..=1.0f64).prop_map(|(d, p)| SmoothBool::new(d, p))
    }

    proptest! {
        #[test]
        fn de_morgan(p in smooth_bool(), q in smooth_bool()) {
            let lhs = !(p & q);
            let rhs = !p | !q;
            prop_assert_eq!(lhs.discrete, rhs.discrete);
            prop_assert!(close(lhs.prob, rhs.prob, 1e-12));
        }

        #[test]
        fn discrete_projection(p in smooth_bool(), q in smooth_bool()) {
            prop_assert_eq!((p & q).discrete, p.discrete && q.discrete);
            prop_assert_eq!((p | q).discrete, p.discrete || q.discrete);
            prop_assert_eq!((!p).discrete, !p.discrete);
            for r in [p & q, p | q, !p] {
                prop_assert!((0.0..=1.0).contains(&r.prob));
            }
        }

        #[test]
        fn ordering_identities(a in -50.0..50.0f64, b in -50.0..50.0f64, hv in 0.01..100.0f64) {
            let sm = h(hv);
            let l = lt(a, b, &sm).unwrap();
            prop_assert_eq!(l.prob, le(a, b, &sm).unwrap().prob);
            prop_assert_eq!(gt(a, b, &sm).unwrap().prob, 1.0 - l.prob);
            prop_assert_eq!(gt(a, b, &sm).unwrap().prob, ge(a, b, &sm).unwrap().prob);
            let e = eq(a, b, &sm).unwrap();
            prop_assert!(close(e.prob, l.prob * (1.0 - l.prob), 1e-12));
            // discrete truth agrees with prob >= 0.5 away from exact ties
            if a != b {
                prop_assert_eq!(l.discrete, l.prob >= 0.5);
            }
        }
    }
}
