use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::Smoothing;
use crate::logic::{self, SmoothBool};
use crate::scalar::Scalar;

use super::markers::{MarkerState, MarkerStore};

/// One smoothed conditional encountered along a path.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Decision {
    pub index: usize,
    pub taken: bool,
    /// Primal local contribution of the taken branch.
    pub contrib: f64,
    /// Whether the taken branch differs from the unperturbed comparison.
    #[serde(skip)]
    pub forced: bool,
}

#[derive(Debug)]
pub(crate) enum Steering {
    /// Marker-driven replay of relevant paths.
    Markers { store: MarkerStore, cursor: usize },
    /// Exhaustive enumeration: follow `prefix`, then queue every alternative
    /// with nonzero contribution.
    Forced {
        prefix: Vec<bool>,
        frontier: Vec<Vec<bool>>,
    },
}

/// Per-evaluation state handed to programs.
///
/// Every smoothed conditional must go through [`TraceContext::branch`];
/// branching on `SmoothBool::discrete` directly bypasses the tracer.
#[derive(Debug)]
pub struct TraceContext<S> {
    smoothing: Smoothing,
    epsilon: f64,
    max_conditions: usize,
    pub(crate) steering: Steering,
    kappa: S,
    ln_kappa: f64,
    decisions: Vec<Decision>,
}

impl<S: Scalar> TraceContext<S> {
    pub(crate) fn new(smoothing: Smoothing, epsilon: f64, max_conditions: usize, steering: Steering) -> Self {
        TraceContext {
            smoothing,
            epsilon,
            max_conditions,
            steering,
            kappa: S::one(),
            ln_kappa: 0.0,
            decisions: Vec::new(),
        }
    }

    pub(crate) fn begin_path(&mut self) {
        self.kappa = S::one();
        self.ln_kappa = 0.0;
        self.decisions.clear();
        if let Steering::Markers { cursor, .. } = &mut self.steering {
            *cursor = 0;
        }
    }

    pub fn smoothing(&self) -> &Smoothing {
        &self.smoothing
    }

    /// Path contribution accumulated so far.
    pub fn kappa(&self) -> S {
        self.kappa
    }

    /// `ln κ_p`, tracked separately so it survives underflow of `κ_p`.
    pub fn ln_kappa(&self) -> f64 {
        self.ln_kappa
    }

    pub fn decisions(&self) -> &[Decision] {
        &self.decisions
    }

    pub(crate) fn take_decisions(&mut self) -> Vec<Decision> {
        std::mem::take(&mut self.decisions)
    }

    pub fn lt(&self, a: S, b: S) -> Result<SmoothBool<S>> {
        logic::lt(a, b, &self.smoothing)
    }

    pub fn le(&self, a: S, b: S) -> Result<SmoothBool<S>> {
        logic::le(a, b, &self.smoothing)
    }

    pub fn gt(&self, a: S, b: S) -> Result<SmoothBool<S>> {
        logic::gt(a, b, &self.smoothing)
    }

    pub fn ge(&self, a: S, b: S) -> Result<SmoothBool<S>> {
        logic::ge(a, b, &self.smoothing)
    }

    pub fn eq(&self, a: S, b: S) -> Result<SmoothBool<S>> {
        logic::eq(a, b, &self.smoothing)
    }

    /// Decides which branch this execution follows and folds its local
    /// contribution into `κ_p`.
    ///
    /// A `Negated` marker at this condition flips the branch. With no marker,
    /// a `Set` marker is recorded when the opposite branch contributes at
    /// least `ε` (and more than zero).
    pub fn branch(&mut self, cond: SmoothBool<S>) -> Result<bool> {
        let index = self.decisions.len();
        if index >= self.max_conditions {
            return Err(Error::ConditionBudget {
                limit: self.max_conditions,
            });
        }
        let prob = cond.prob.primal();
        if !prob.is_finite() {
            return Err(Error::NonFinite {
                what: "condition probability",
            });
        }

        let mut taken = cond.discrete;
        match &mut self.steering {
            Steering::Markers { store, cursor } => {
                let here = store.get(*cursor).filter(|m| m.index == index);
                match here {
                    Some(m) => {
                        *cursor += 1;
                        if m.state == MarkerState::Negated {
                            taken = !taken;
                        }
                    }
                    None => {
                        let opposite = cond.contribution(!taken).primal();
                        if opposite > 0.0 && opposite >= self.epsilon && !store.push_set(index) {
                            return Err(Error::ReplayMismatch {
                                index,
                                detail: "new marker precedes an existing one".into(),
                            });
                        }
                        if store.last().is_some_and(|m| m.index == index) {
                            *cursor += 1;
                        }
                    }
                }
            }
            Steering::Forced { prefix, frontier } => {
                if let Some(&forced) = prefix.get(index) {
                    taken = forced;
                } else if cond.contribution(!taken).primal() > 0.0 {
                    let mut alt: Vec<bool> = self.decisions.iter().map(|d| d.taken).collect();
                    alt.push(!taken);
                    frontier.push(alt);
                }
            }
        }

        let c = cond.contribution(taken);
        let cp = c.primal();
        self.kappa *= c;
        self.ln_kappa += cp.ln();
        self.decisions.push(Decision {
            index,
            taken,
            contrib: cp,
            forced: taken != cond.discrete,
        });
        Ok(taken)
    }
}
