//! Reverse-mode AD over an append-only tape.
//!
//! [`Active`] values record onto the tape that is installed on the current
//! thread by [`Tape::record`]. Each entry stores up to two operand slots and
//! the local partials with respect to them; [`Tape::seed_and_interpret`] walks
//! the entries backwards and accumulates adjoints.
//!
//! `abs`, `min` and `max` are deliberately missing: kinks have to be written as
//! smoothed branches so the tracer sees them.

use std::cell::RefCell;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};
use std::sync::atomic::{AtomicU32, Ordering};

use crate::error::{DomainError, Error, Result};
use crate::programs::Program;
use crate::scalar::Scalar;
use crate::tracer::{self, TraceConfig};

const NO_SLOT: u32 = u32::MAX;

/// Default cap on recorded entries.
pub const DEFAULT_TAPE_LIMIT: usize = 100_000_000;

static NEXT_TAPE_ID: AtomicU32 = AtomicU32::new(1);

thread_local! {
    static CURRENT: RefCell<Option<Tape>> = const { RefCell::new(None) };
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Entry {
    args: [u32; 2],
    partials: [f64; 2],
}

/// Scalar whose operations are recorded for reverse-mode differentiation.
#[derive(Clone, Copy)]
pub struct Active {
    value: f64,
    slot: u32,
    tape: u32,
}

impl fmt::Debug for Active {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.slot == NO_SLOT {
            write!(f, "Active({})", self.value)
        } else {
            write!(f, "Active({} @{})", self.value, self.slot)
        }
    }
}

impl Active {
    pub fn constant(value: f64) -> Self {
        Active {
            value,
            slot: NO_SLOT,
            tape: 0,
        }
    }

    /// New independent variable on the tape installed on this thread.
    ///
    /// Panics outside of [`Tape::record`].
    pub fn variable(value: f64) -> Self {
        with_current(|tape| tape.variable(value))
    }

    pub fn value(self) -> f64 {
        self.value
    }

    pub fn is_constant(self) -> bool {
        self.slot == NO_SLOT
    }

    pub fn slot(self) -> Option<usize> {
        (self.slot != NO_SLOT).then_some(self.slot as usize)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Exp,
    Ln,
    Sqrt,
}

impl BinaryOp {
    /// Value and partials `(∂/∂a, ∂/∂b)`, checking the operation's domain.
    pub fn eval(self, a: f64, b: f64) -> Result<(f64, [f64; 2]), DomainError> {
        Ok(match self {
            BinaryOp::Add => (a + b, [1.0, 1.0]),
            BinaryOp::Sub => (a - b, [1.0, -1.0]),
            BinaryOp::Mul => (a * b, [b, a]),
            BinaryOp::Div => {
                if b == 0.0 {
                    return Err(DomainError::DivisionByZero);
                }
                (a / b, [1.0 / b, -a / (b * b)])
            }
            BinaryOp::Pow => {
                if a < 0.0 && b.fract() != 0.0 {
                    return Err(DomainError::Pow { base: a, exponent: b });
                }
                let v = a.powf(b);
                let da = if b == 0.0 { 0.0 } else { b * a.powf(b - 1.0) };
                let db = if a > 0.0 { v * a.ln() } else { 0.0 };
                (v, [da, db])
            }
        })
    }
}

impl UnaryOp {
    pub fn eval(self, a: f64) -> Result<(f64, f64), DomainError> {
        Ok(match self {
            UnaryOp::Neg => (-a, -1.0),
            UnaryOp::Exp => {
                let e = a.exp();
                (e, e)
            }
            UnaryOp::Ln => {
                if a <= 0.0 {
                    return Err(DomainError::Log(a));
                }
                (a.ln(), 1.0 / a)
            }
            UnaryOp::Sqrt => {
                if a < 0.0 {
                    return Err(DomainError::Sqrt(a));
                }
                let r = a.sqrt();
                (r, 0.5 / r)
            }
        })
    }
}

/// Append-only record of elementary operations.
#[derive(Debug)]
pub struct Tape {
    id: u32,
    entries: Vec<Entry>,
    limit: usize,
    overflowed: bool,
    interpreted: bool,
}

impl Default for Tape {
    fn default() -> Self {
        Tape::new()
    }
}

impl Tape {
    pub fn new() -> Self {
        Tape::with_limit(DEFAULT_TAPE_LIMIT)
    }

    pub fn with_limit(limit: usize) -> Self {
        Tape {
            id: NEXT_TAPE_ID.fetch_add(1, Ordering::Relaxed),
            entries: Vec::new(),
            limit,
            overflowed: false,
            interpreted: false,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn variable(&mut self, value: f64) -> Active {
        self.push(value, [NO_SLOT; 2], [0.0; 2])
    }

    /// Errors if the entry limit was hit while recording.
    pub fn check_budget(&self) -> Result<()> {
        if self.overflowed {
            Err(Error::TapeBudget { limit: self.limit })
        } else {
            Ok(())
        }
    }

    fn push(&mut self, value: f64, args: [u32; 2], partials: [f64; 2]) -> Active {
        if self.entries.len() >= self.limit {
            self.overflowed = true;
            return Active::constant(value);
        }
        let slot = self.entries.len() as u32;
        self.entries.push(Entry { args, partials });
        Active {
            value,
            slot,
            tape: self.id,
        }
    }

    fn operand(&self, a: Active) -> Result<u32> {
        if a.slot != NO_SLOT && a.tape != self.id {
            return Err(Error::ForeignTape);
        }
        Ok(a.slot)
    }

    fn apply_binary(&mut self, a: Active, b: Active, value: f64, partials: [f64; 2]) -> Result<Active> {
        let (sa, sb) = (self.operand(a)?, self.operand(b)?);
        Ok(match (sa == NO_SLOT, sb == NO_SLOT) {
            (true, true) => Active::constant(value),
            (false, true) => self.push(value, [sa, NO_SLOT], [partials[0], 0.0]),
            (true, false) => self.push(value, [sb, NO_SLOT], [partials[1], 0.0]),
            (false, false) => self.push(value, [sa, sb], partials),
        })
    }

    fn apply_unary(&mut self, a: Active, value: f64, partial: f64) -> Result<Active> {
        let sa = self.operand(a)?;
        Ok(if sa == NO_SLOT {
            Active::constant(value)
        } else {
            self.push(value, [sa, NO_SLOT], [partial, 0.0])
        })
    }

    pub fn record_binary(&mut self, op: BinaryOp, a: Active, b: Active) -> Result<Active> {
        let (value, partials) = op.eval(a.value, b.value)?;
        self.apply_binary(a, b, value, partials)
    }

    pub fn record_unary(&mut self, op: UnaryOp, a: Active) -> Result<Active> {
        let (value, partial) = op.eval(a.value)?;
        self.apply_unary(a, value, partial)
    }

    /// Installs this tape on the current thread for the duration of `f`, so
    /// that operator overloads on [`Active`] record here.
    pub fn record<R>(&mut self, f: impl FnOnce() -> R) -> R {
        struct Restore<'a> {
            home: &'a mut Tape,
            previous: Option<Tape>,
        }
        impl Drop for Restore<'_> {
            fn drop(&mut self) {
                let previous = self.previous.take();
                let mine = CURRENT.with(|c| std::mem::replace(&mut *c.borrow_mut(), previous));
                if let Some(mine) = mine {
                    *self.home = mine;
                }
            }
        }

        let mine = std::mem::replace(self, Tape::placeholder());
        let previous = CURRENT.with(|c| c.borrow_mut().replace(mine));
        let _restore = Restore { home: self, previous };
        f()
    }

    fn placeholder() -> Tape {
        Tape {
            id: 0,
            entries: Vec::new(),
            limit: 0,
            overflowed: false,
            interpreted: false,
        }
    }

    /// Reverse sweep. `seeds` pairs output values with their seed adjoints.
    pub fn seed_and_interpret(&mut self, seeds: &[(Active, f64)]) -> Result<Adjoints> {
        if self.interpreted {
            return Err(Error::TapeReused);
        }
        self.check_budget()?;
        let mut adjoints = vec![0.0; self.entries.len()];
        for &(out, seed) in seeds {
            let slot = self.operand(out)?;
            if slot != NO_SLOT {
                adjoints[slot as usize] += seed;
            }
        }
        for i in (0..self.entries.len()).rev() {
            let bar = adjoints[i];
            if bar == 0.0 {
                continue;
            }
            let e = self.entries[i];
            for k in 0..2 {
                if e.args[k] != NO_SLOT {
                    adjoints[e.args[k] as usize] += bar * e.partials[k];
                }
            }
        }
        self.interpreted = true;
        Ok(Adjoints {
            tape: self.id,
            values: adjoints,
        })
    }

    /// Allows another reverse sweep, e.g. for the next output of a Jacobian.
    pub fn reset_adjoints(&mut self) {
        self.interpreted = false;
    }
}

fn with_current<R>(f: impl FnOnce(&mut Tape) -> R) -> R {
    CURRENT.with(|c| {
        let mut guard = c.borrow_mut();
        let tape = guard.as_mut().expect("active scalar used outside Tape::record");
        f(tape)
    })
}

/// Result of a reverse sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct Adjoints {
    tape: u32,
    values: Vec<f64>,
}

impl Adjoints {
    /// Adjoint of `x`; constants have none.
    pub fn wrt(&self, x: Active) -> f64 {
        match x.slot() {
            Some(slot) if x.tape == self.tape => self.values[slot],
            _ => 0.0,
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }
}

fn binary(a: Active, b: Active, value: f64, partials: [f64; 2]) -> Active {
    if a.is_constant() && b.is_constant() {
        return Active::constant(value);
    }
    with_current(|t| t.apply_binary(a, b, value, partials)).expect("operands recorded on a different tape")
}

fn unary(a: Active, value: f64, partial: f64) -> Active {
    if a.is_constant() {
        return Active::constant(value);
    }
    with_current(|t| t.apply_unary(a, value, partial)).expect("operand recorded on a different tape")
}

// IEEE semantics (inf/NaN) on domain violations; the tracer rejects
// non-finite results.
impl Add for Active {
    type Output = Active;
    fn add(self, rhs: Active) -> Active {
        binary(self, rhs, self.value + rhs.value, [1.0, 1.0])
    }
}

impl Sub for Active {
    type Output = Active;
    fn sub(self, rhs: Active) -> Active {
        binary(self, rhs, self.value - rhs.value, [1.0, -1.0])
    }
}

impl Mul for Active {
    type Output = Active;
    fn mul(self, rhs: Active) -> Active {
        binary(self, rhs, self.value * rhs.value, [rhs.value, self.value])
    }
}

impl Div for Active {
    type Output = Active;
    fn div(self, rhs: Active) -> Active {
        let inv = 1.0 / rhs.value;
        binary(self, rhs, self.value * inv, [inv, -self.value * inv * inv])
    }
}

impl Neg for Active {
    type Output = Active;
    fn neg(self) -> Active {
        unary(self, -self.value, -1.0)
    }
}

impl Add<f64> for Active {
    type Output = Active;
    fn add(self, rhs: f64) -> Active {
        unary(self, self.value + rhs, 1.0)
    }
}

impl Sub<f64> for Active {
    type Output = Active;
    fn sub(self, rhs: f64) -> Active {
        unary(self, self.value - rhs, 1.0)
    }
}

impl Mul<f64> for Active {
    type Output = Active;
    fn mul(self, rhs: f64) -> Active {
        unary(self, self.value * rhs, rhs)
    }
}

impl Div<f64> for Active {
    type Output = Active;
    fn div(self, rhs: f64) -> Active {
        unary(self, self.value / rhs, 1.0 / rhs)
    }
}

impl Add<Active> for f64 {
    type Output = Active;
    fn add(self, rhs: Active) -> Active {
        rhs + self
    }
}

impl Sub<Active> for f64 {
    type Output = Active;
    fn sub(self, rhs: Active) -> Active {
        unary(rhs, self - rhs.value, -1.0)
    }
}

impl Mul<Active> for f64 {
    type Output = Active;
    fn mul(self, rhs: Active) -> Active {
        rhs * self
    }
}

impl Div<Active> for f64 {
    type Output = Active;
    fn div(self, rhs: Active) -> Active {
        let v = self / rhs.value;
        unary(rhs, v, -v / rhs.value)
    }
}

impl AddAssign for Active {
    fn add_assign(&mut self, rhs: Active) {
        *self = *self + rhs;
    }
}

impl SubAssign for Active {
    fn sub_assign(&mut self, rhs: Active) {
        *self = *self - rhs;
    }
}

impl MulAssign for Active {
    fn mul_assign(&mut self, rhs: Active) {
        *self = *self * rhs;
    }
}

impl Scalar for Active {
    fn constant(value: f64) -> Self {
        Active::constant(value)
    }

    fn primal(self) -> f64 {
        self.value
    }

    fn lift(self, value: f64, derivative: f64) -> Self {
        unary(self, value, derivative)
    }
}

/// Value and gradient of a smoothed scalar program.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradient {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub paths_evaluated: usize,
    pub total_kappa: f64,
}

/// Smoothed value and its Jacobian, one row per output.
#[derive(Clone, Debug, PartialEq)]
pub struct Jacobian {
    pub value: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
    pub paths_evaluated: usize,
}

struct Recorded {
    tape: Tape,
    inputs: Vec<Active>,
    outputs: Vec<Active>,
    paths_evaluated: usize,
    total_kappa: f64,
}

fn record_trace<P: Program>(program: &P, input: &[f64], config: &TraceConfig) -> Result<Recorded> {
    let mut tape = Tape::new();
    let inputs: Vec<Active> = input.iter().map(|&x| tape.variable(x)).collect();
    let result = tape.record(|| tracer::trace(program, &inputs, config))?;
    tape.check_budget()?;
    Ok(Recorded {
        tape,
        inputs,
        outputs: result.value,
        paths_evaluated: result.paths_evaluated,
        total_kappa: result.total_kappa.primal(),
    })
}

/// Gradient of the smoothed value of a scalar-valued program.
///
/// Contributions are recorded on the same tape as the program's arithmetic,
/// so their dependence on the input is part of the derivative.
pub fn gradient<P: Program>(program: &P, input: &[f64], config: &TraceConfig) -> Result<Gradient> {
    if program.output_dim() != 1 {
        return Err(Error::OutputArity {
            expected: 1,
            got: program.output_dim(),
        });
    }
    let mut rec = record_trace(program, input, config)?;
    let y = rec.outputs[0];
    let adj = rec.tape.seed_and_interpret(&[(y, 1.0)])?;
    Ok(Gradient {
        value: y.value(),
        gradient: rec.inputs.iter().map(|&x| adj.wrt(x)).collect(),
        paths_evaluated: rec.paths_evaluated,
        total_kappa: rec.total_kappa,
    })
}

/// One reverse sweep per output over a single recorded trace.
pub fn jacobian<P: Program>(program: &P, input: &[f64], config: &TraceConfig) -> Result<Jacobian> {
    let mut rec = record_trace(program, input, config)?;
    let mut rows = Vec::with_capacity(rec.outputs.len());
    for &y in &rec.outputs {
        rec.tape.reset_adjoints();
        let adj = rec.tape.seed_and_interpret(&[(y, 1.0)])?;
        rows.push(rec.inputs.iter().map(|&x| adj.wrt(x)).collect());
    }
    Ok(Jacobian {
        value: rec.outputs.iter().map(|y| y.value()).collect(),
        rows,
        paths_evaluated: rec.paths_evaluated,
    })
}

/// Central differences of the smoothed value, Richardson-extrapolated.
/// Step `1e-5·max(1, |x_i|)` per coordinate.
pub fn finite_difference<P: Program>(program: &P, input: &[f64], config: &TraceConfig) -> Result<Vec<f64>> {
    let f = |x: &[f64]| -> Result<f64> { Ok(tracer::trace(program, x, config)?.value[0]) };
    let mut x = input.to_vec();
    let mut out = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let xi = x[i];
        let step = 1e-5 * xi.abs().max(1.0);
        let mut central = |s: f64| -> Result<f64> {
            x[i] = xi + s;
            let up = f(&x)?;
            x[i] = xi - s;
            let down = f(&x)?;
            x[i] = xi;
            Ok((up - down) / (2.0 * s))
        };
        let coarse = central(step)?;
        let fine = central(0.5 * step)?;
        out.push((4.0 * fine - coarse) / 3.0);
    }
    Ok(out)
}

/// `‖a - b‖ / max(‖a‖, ‖b‖, 1)`.
pub fn gradient_discrepancy(a: &[f64], b: &[f64]) -> f64 {
    let norm = |v: &mut dyn Iterator<Item = f64>| v.map(|x| x * x).sum::<f64>().sqrt();
    let diff = norm(&mut a.iter().zip(b).map(|(x, y)| x - y));
    diff / norm(&mut a.iter().copied()).max(norm(&mut b.iter().copied())).max(1.0)
}
