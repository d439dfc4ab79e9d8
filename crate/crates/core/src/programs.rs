//! Programs with discontinuous control flow.
//!
//! A [`Program`] is written once against the generic [`Scalar`] and routes
//! every data-dependent conditional through [`TraceContext::branch`]. It must
//! be a pure function of its input and of the branch outcomes: the tracer
//! re-executes it once per path and relies on identical replays.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tracer::TraceContext;

/// Descriptive metadata of a program.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProgramSpec {
    pub name: String,
    pub arity: usize,
    pub output_dim: usize,
    pub recommended_start: Option<Vec<f64>>,
}

pub trait Program {
    fn name(&self) -> &str;

    fn arity(&self) -> usize;

    fn output_dim(&self) -> usize {
        1
    }

    fn recommended_start(&self) -> Option<Vec<f64>> {
        None
    }

    fn eval<S: Scalar>(&self, ctx: &mut TraceContext<S>, x: &[S]) -> Result<Vec<S>>;

    fn spec(&self) -> ProgramSpec {
        ProgramSpec {
            name: self.name().to_string(),
            arity: self.arity(),
            output_dim: self.output_dim(),
            recommended_start: self.recommended_start(),
        }
    }
}

impl<P: Program> Program for &P {
    fn name(&self) -> &str {
        (*self).name()
    }
    fn arity(&self) -> usize {
        (*self).arity()
    }
    fn output_dim(&self) -> usize {
        (*self).output_dim()
    }
    fn recommended_start(&self) -> Option<Vec<f64>> {
        (*self).recommended_start()
    }
    fn eval<S: Scalar>(&self, ctx: &mut TraceContext<S>, x: &[S]) -> Result<Vec<S>> {
        (*self).eval(ctx, x)
    }
}

/// `x ↦ slope·x + offset`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Affine {
    pub slope: f64,
    pub offset: f64,
}

impl Affine {
    pub const fn new(slope: f64, offset: f64) -> Self {
        Affine { slope, offset }
    }

    pub fn apply<S: Scalar>(&self, x: S) -> S {
        x * self.slope + self.offset
    }
}

/// Two affine cases split at `threshold`; `lower` applies when
/// `x <= threshold`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Piecewise {
    pub threshold: f64,
    pub lower: Affine,
    pub upper: Affine,
}

impl Piecewise {
    pub fn eval<S: Scalar>(&self, ctx: &mut TraceContext<S>, x: S) -> Result<S> {
        let c = ctx.le(x, S::constant(self.threshold))?;
        Ok(if ctx.branch(c)? {
            self.lower.apply(x)
        } else {
            self.upper.apply(x)
        })
    }

    pub fn eval_discrete(&self, x: f64) -> f64 {
        if x <= self.threshold {
            self.lower.apply(x)
        } else {
            self.upper.apply(x)
        }
    }
}

/// `max{A, B}` with `A = x1² + (x2-1)² + x2 - 1`, `B = -x1² - (x2-1)² + x2 + 1`,
/// written as one smoothed branch (`A` wins ties).
#[derive(Clone, Copy, Debug, Default)]
pub struct Crescent;

/// Default optimizer start for [`Crescent`].
pub const CRESCENT_START: [f64; 2] = [-1.5, 2.0];

fn crescent_cases<S: Scalar>(x1: S, x2: S) -> (S, S) {
    let sq = x1 * x1;
    let t = x2 - 1.0;
    let tt = t * t;
    let a = sq + tt + x2 - 1.0;
    let b = -sq - tt + x2 + 1.0;
    (a, b)
}

impl Program for Crescent {
    fn name(&self) -> &str {
        "crescent"
    }
    fn arity(&self) -> usize {
        2
    }
    fn recommended_start(&self) -> Option<Vec<f64>> {
        Some(CRESCENT_START.to_vec())
    }
    fn eval<S: Scalar>(&self, ctx: &mut TraceContext<S>, x: &[S]) -> Result<Vec<S>> {
        let (a, b) = crescent_cases(x[0], x[1]);
        let c = ctx.ge(a, b)?;
        Ok(vec![if ctx.branch(c)? { a } else { b }])
    }
}

/// `r = 2 - [x1² + x2² < 2] - [x1 < x2]` with two sequential branches.
#[derive(Clone, Copy, Debug, Default)]
pub struct Listing1F;

impl Program for Listing1F {
    fn name(&self) -> &str {
        "listing1_f"
    }
    fn arity(&self) -> usize {
        2
    }
    fn eval<S: Scalar>(&self, ctx: &mut TraceContext<S>, x: &[S]) -> Result<Vec<S>> {
        let (x1, x2) = (x[0], x[1]);
        let mut r = S::constant(2.0);
        let c = ctx.lt(x1 * x1 + x2 * x2, S::constant(2.0))?;
        if ctx.branch(c)? {
            r = r - 1.0;
        }
        let c = ctx.lt(x1, x2)?;
        if ctx.branch(c)? {
            r = r - 1.0;
        }
        Ok(vec![r])
    }
}

/// Piecewise constant: 0 inside the disc above the diagonal, 2 outside the
/// disc below it, 1 elsewhere. Each case is one conjunctive clause.
#[derive(Clone, Copy, Debug, Default)]
pub struct DiscontG;

impl Program for DiscontG {
    fn name(&self) -> &str {
        "discont_g"
    }
    fn arity(&self) -> usize {
        2
    }
    fn recommended_start(&self) -> Option<Vec<f64>> {
        Some(vec![1.8, -1.8])
    }
    fn eval<S: Scalar>(&self, ctx: &mut TraceContext<S>, x: &[S]) -> Result<Vec<S>> {
        let (x1, x2) = (x[0], x[1]);
        let r2 = x1 * x1 + x2 * x2;
        let two = S::constant(2.0);
        let inner = ctx.lt(r2, two)? & ctx.lt(x1, x2)?;
        if ctx.branch(inner)? {
            return Ok(vec![S::zero()]);
        }
        let outer = ctx.ge(r2, two)? & ctx.ge(x1, x2)?;
        Ok(vec![if ctx.branch(outer)? { two } else { S::one() }])
    }
}

/// Nested conditions, a conjunctive clause and a re-merge:
///
/// ```text
/// if x < 1 {
///     x = a(x)
///     if x > -1 && x < 1.5 { x = b(x) } else { x = h(x) }
/// }
/// x = d(x)
/// if x > 0.4 { x = e(x) }
/// ```
///
/// with `a = 2x - 0.5`, `b = x + 2`, `h = -x + 0.5`, `d = 0.5x + 0.1`,
/// `e = 3x - 1`. Paths have lengths 2 and 3; the tree has six leaves.
#[derive(Clone, Copy, Debug, Default)]
pub struct Figure3Shape;

pub mod figure3 {
    use super::Affine;

    pub const A: Affine = Affine::new(2.0, -0.5);
    pub const B: Affine = Affine::new(1.0, 2.0);
    pub const H: Affine = Affine::new(-1.0, 0.5);
    pub const D: Affine = Affine::new(0.5, 0.1);
    pub const E: Affine = Affine::new(3.0, -1.0);
    pub const C1_BELOW: f64 = 1.0;
    pub const C2_ABOVE: f64 = -1.0;
    pub const C3_BELOW: f64 = 1.5;
    pub const C4_ABOVE: f64 = 0.4;
    pub const LEAVES: usize = 6;
}

impl Program for Figure3Shape {
    fn name(&self) -> &str {
        "figure3_shape"
    }
    fn arity(&self) -> usize {
        1
    }
    fn eval<S: Scalar>(&self, ctx: &mut TraceContext<S>, x: &[S]) -> Result<Vec<S>> {
        use figure3::*;
        let mut x = x[0];
        let c1 = ctx.lt(x, S::constant(C1_BELOW))?;
        if ctx.branch(c1)? {
            x = A.apply(x);
            let clause = ctx.gt(x, S::constant(C2_ABOVE))? & ctx.lt(x, S::constant(C3_BELOW))?;
            x = if ctx.branch(clause)? { B.apply(x) } else { H.apply(x) };
        }
        x = D.apply(x);
        let c4 = ctx.gt(x, S::constant(C4_ABOVE))?;
        if ctx.branch(c4)? {
            x = E.apply(x);
        }
        Ok(vec![x])
    }
}

/// Unit step: 0 for `x < 0`, 1 otherwise.
#[derive(Clone, Copy, Debug, Default)]
pub struct Step;

impl Program for Step {
    fn name(&self) -> &str {
        "step"
    }
    fn arity(&self) -> usize {
        1
    }
    fn eval<S: Scalar>(&self, ctx: &mut TraceContext<S>, x: &[S]) -> Result<Vec<S>> {
        let c = ctx.lt(x[0], S::zero())?;
        Ok(vec![if ctx.branch(c)? { S::zero() } else { S::one() }])
    }
}

/// `f ∘ g` for two single-condition piecewise functions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NestedFg {
    pub g: Piecewise,
    pub f: Piecewise,
}

impl Default for NestedFg {
    /// `g` jumps from `x + 1` down to `x - 1` at 0, so at the jump the
    /// composition switches between `f`'s upper case (`2y + 3`) and its lower
    /// case (`y`).
    fn default() -> Self {
        NestedFg {
            g: Piecewise {
                threshold: 0.0,
                lower: Affine::new(1.0, 1.0),
                upper: Affine::new(1.0, -1.0),
            },
            f: Piecewise {
                threshold: 0.0,
                lower: Affine::new(1.0, 0.0),
                upper: Affine::new(2.0, 3.0),
            },
        }
    }
}

impl Program for NestedFg {
    fn name(&self) -> &str {
        "nested_fg"
    }
    fn arity(&self) -> usize {
        1
    }
    fn eval<S: Scalar>(&self, ctx: &mut TraceContext<S>, x: &[S]) -> Result<Vec<S>> {
        let y = self.g.eval(ctx, x[0])?;
        Ok(vec![self.f.eval(ctx, y)?])
    }
}

/// Plain `f64` versions written without the smoothing API.
pub mod reference {
    use super::{figure3, NestedFg};

    pub fn crescent(x1: f64, x2: f64) -> f64 {
        let sq = x1 * x1;
        let t = x2 - 1.0;
        let tt = t * t;
        let a = sq + tt + x2 - 1.0;
        let b = -sq - tt + x2 + 1.0;
        if a >= b {
            a
        } else {
            b
        }
    }

    pub fn listing1_f(x1: f64, x2: f64) -> f64 {
        let mut r = 2.0;
        if x1 * x1 + x2 * x2 < 2.0 {
            r -= 1.0;
        }
        if x1 < x2 {
            r -= 1.0;
        }
        r
    }

    pub fn discont_g(x1: f64, x2: f64) -> f64 {
        let r2 = x1 * x1 + x2 * x2;
        if r2 < 2.0 && x1 < x2 {
            0.0
        } else if r2 >= 2.0 && x1 >= x2 {
            2.0
        } else {
            1.0
        }
    }

    pub fn figure3_shape(x: f64) -> f64 {
        use figure3::*;
        let mut x = x;
        if x < C1_BELOW {
            x = A.apply(x);
            x = if x > C2_ABOVE && x < C3_BELOW {
                B.apply(x)
            } else {
                H.apply(x)
            };
        }
        x = D.apply(x);
        if x > C4_ABOVE {
            x = E.apply(x);
        }
        x
    }

    pub fn step(x: f64) -> f64 {
        if x < 0.0 {
            0.0
        } else {
            1.0
        }
    }

    pub fn nested_fg(p: &NestedFg, x: f64) -> f64 {
        p.f.eval_discrete(p.g.eval_discrete(x))
    }
}

/// The built-in programs, addressable by name.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Corpus {
    Crescent,
    Listing1F,
    DiscontG,
    Figure3Shape,
    Step,
    NestedFg,
}

impl Corpus {
    pub const ALL: [Corpus; 6] = [
        Corpus::Crescent,
        Corpus::Listing1F,
        Corpus::DiscontG,
        Corpus::Figure3Shape,
        Corpus::Step,
        Corpus::NestedFg,
    ];

    pub fn from_name(name: &str) -> Result<Self> {
        Corpus::ALL.into_iter().find(|c| c.name() == name).ok_or_else(|| {
            let known: Vec<_> = Corpus::ALL.iter().map(|c| c.name()).collect();
            Error::InvalidConfig(format!("unknown program `{name}` (known: {})", known.join(", ")))
        })
    }

    /// Unsmoothed output computed without the tracer.
    pub fn discrete_reference(&self, x: &[f64]) -> f64 {
        match self {
            Corpus::Crescent => reference::crescent(x[0], x[1]),
            Corpus::Listing1F => reference::listing1_f(x[0], x[1]),
            Corpus::DiscontG => reference::discont_g(x[0], x[1]),
            Corpus::Figure3Shape => reference::figure3_shape(x[0]),
            Corpus::Step => reference::step(x[0]),
            Corpus::NestedFg => reference::nested_fg(&NestedFg::default(), x[0]),
        }
    }
}

impl Program for Corpus {
    fn name(&self) -> &str {
        match self {
            Corpus::Crescent => Crescent.name(),
            Corpus::Listing1F => Listing1F.name(),
            Corpus::DiscontG => DiscontG.name(),
            Corpus::Figure3Shape => Figure3Shape.name(),
            Corpus::Step => Step.name(),
            Corpus::NestedFg => "nested_fg",
        }
    }

    fn arity(&self) -> usize {
        match self {
            Corpus::Crescent | Corpus::Listing1F | Corpus::DiscontG => 2,
            Corpus::Figure3Shape | Corpus::Step | Corpus::NestedFg => 1,
        }
    }

    fn recommended_start(&self) -> Option<Vec<f64>> {
        match self {
            Corpus::Crescent => Crescent.recommended_start(),
            Corpus::DiscontG => DiscontG.recommended_start(),
            _ => None,
        }
    }

    fn eval<S: Scalar>(&self, ctx: &mut TraceContext<S>, x: &[S]) -> Result<Vec<S>> {
        match self {
            Corpus::Crescent => Crescent.eval(ctx, x),
            Corpus::Listing1F => Listing1F.eval(ctx, x),
            Corpus::DiscontG => DiscontG.eval(ctx, x),
            Corpus::Figure3Shape => Figure3Shape.eval(ctx, x),
            Corpus::Step => Step.eval(ctx, x),
            Corpus::NestedFg => NestedFg::default().eval(ctx, x),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{contrib_true, Distance, KernelKind, Sharpness};
    use crate::tracer::{enumerate_all_paths, trace, TraceConfig};
    use proptest::prelude::*;

    fn value<P: Program>(p: &P, x: &[f64], h: Sharpness) -> f64 {
        trace(p, x, &TraceConfig::new(h)).unwrap().value[0]
    }

    const INF: Sharpness = Sharpness::Infinite;
    const ONE: Sharpness = Sharpness::Finite(1.0);

    #[test]
    fn crescent_examples() {
        assert_eq!(value(&Crescent, &[0.0, 1.0], INF), 2.0);
        assert_eq!(value(&Crescent, &[0.0, 0.0], INF), 0.0);
        // (1, 1): A = 1 + 0 + 0 = 1, B = -1 + 0 + 2 = 1, on the boundary.
        assert_eq!(crescent_cases(1.0f64, 1.0), (1.0, 1.0));
        let x = [0.6, 1.2];
        let (a, b) = crescent_cases(x[0], x[1]);
        let r = trace(&Crescent, &x, &TraceConfig::new(ONE).recording()).unwrap();
        let s = r.path_records.unwrap()[0].decisions[0].contrib;
        let expected = if a >= b {
            s * a + (1.0 - s) * b
        } else {
            s * b + (1.0 - s) * a
        };
        assert!((r.value[0] - expected).abs() < 1e-12);
    }

    #[test]
    fn crescent_tie_is_an_even_mixture() {
        let r = trace(&Crescent, &[1.0, 1.0], &TraceConfig::new(ONE).recording()).unwrap();
        for p in r.path_records.unwrap() {
            assert_eq!(p.kappa, 0.5);
        }
    }

    #[test]
    fn listing1_examples() {
        assert_eq!(value(&Listing1F, &[0.0, 0.0], INF), 1.0);
        let cfg = TraceConfig::new(ONE).with_epsilon(1e-12);
        assert!((trace(&Listing1F, &[0.0, 0.0], &cfg).unwrap().value[0] - 0.619203).abs() < 1e-6);
        for h in [1.0, 10.0, 100.0] {
            assert!((value(&Listing1F, &[10.0, -10.0], Sharpness::Finite(h)) - 2.0).abs() < 1e-8);
        }
    }

    #[test]
    fn discont_g_examples() {
        assert_eq!(value(&DiscontG, &[0.0, 1.0], INF), 0.0);
        assert_eq!(value(&DiscontG, &[2.0, -2.0], INF), 2.0);
        assert_eq!(value(&DiscontG, &[0.0, 2.0], INF), 1.0);
    }

    #[test]
    fn saturated_input_is_one_path() {
        let r = trace(&DiscontG, &[30.0, -30.0], &TraceConfig::new(Sharpness::Finite(5.0))).unwrap();
        assert_eq!(r.paths_evaluated, 1);
        assert!((r.total_kappa - 1.0).abs() < 1e-15);
        assert!((r.value[0] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn clause_contribution_is_a_product() {
        let x = [0.8, 1.0];
        let h = Sharpness::Finite(2.0);
        let cfg = TraceConfig::new(h).recording();
        let first = &trace(&DiscontG, &x, &cfg).unwrap().path_records.unwrap()[0];
        let s = |d: f64| contrib_true(Distance::new(d).unwrap(), h, KernelKind::Logistic);
        let expected = s(x[0] * x[0] + x[1] * x[1] - 2.0) * s(x[0] - x[1]);
        assert!(first.decisions[0].taken);
        assert!((first.decisions[0].contrib - expected).abs() < 1e-15);
    }

    #[test]
    fn step_examples() {
        assert_eq!(value(&Step, &[0.0], ONE), 0.5);
        assert_eq!(value(&Step, &[-3.0], INF), 0.0);
        assert_eq!(value(&Step, &[0.0], INF), 1.0);
    }

    #[test]
    fn nested_contributions_follow_the_case_outputs() {
        let pair = NestedFg::default();
        let h = Sharpness::Finite(3.0);
        let cfg = TraceConfig::new(h);
        let s = |d: f64| contrib_true(Distance::new(d).unwrap(), h, KernelKind::Logistic);
        for x in [-0.4, -0.1, 0.0, 0.2, 0.7] {
            let paths = enumerate_all_paths(&pair, &[x], &cfg).unwrap();
            let g1 = pair.g.lower.apply(x);
            let want = s(x - pair.g.threshold) * (1.0 - s(g1 - pair.f.threshold));
            let got: f64 = paths
                .iter()
                .filter(|p| p.branches() == [true, false])
                .map(|p| p.kappa)
                .sum();
            assert!((got - want).abs() < 1e-15);
        }
    }

    #[test]
    fn mixing_band_matches_oracle_count() {
        let cfg = TraceConfig::new(ONE).with_epsilon(1e-12);
        for p in Corpus::ALL {
            let x = vec![0.1; p.arity()];
            let traced = trace(&p, &x, &cfg).unwrap().paths_evaluated;
            let all = enumerate_all_paths(&p, &x, &cfg).unwrap().len();
            assert_eq!(traced, all, "{}", p.name());
        }
    }

    #[test]
    fn names_resolve() {
        for p in Corpus::ALL {
            assert_eq!(Corpus::from_name(p.name()).unwrap(), p);
            assert_eq!(p.spec().name, p.name());
        }
        assert!(Corpus::from_name("nope").is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn discrete_limit_matches_reference(x in prop::collection::vec(-3.0..3.0f64, 2)) {
            for p in Corpus::ALL {
                let x = &x[..p.arity()];
                let r = trace(&p, x, &TraceConfig::new(INF)).unwrap();
                prop_assert_eq!(r.value[0], p.discrete_reference(x));
                prop_assert_eq!(r.paths_evaluated, 1);
            }
        }

        #[test]
        fn replay_is_pure(x in prop::collection::vec(-2.0..2.0f64, 2), h in 0.5..20.0f64) {
            for p in Corpus::ALL {
                let cfg = TraceConfig::new(Sharpness::Finite(h)).verifying();
                prop_assert!(trace(&p, &x[..p.arity()], &cfg).is_ok());
            }
        }
    }
}
