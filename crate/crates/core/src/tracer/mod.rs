//! Tree tracing: the smoothed value of a program as the contribution-weighted
//! sum over its relevant control-flow paths.
//!
//! The program is re-executed once per path. Conditions are identified by
//! their position along the execution (the n-th call to
//! [`TraceContext::branch`]), and a [`MarkerStore`] records where the opposite
//! branch still has to be visited. After each path the deepest run of negated
//! markers is dropped and the deepest remaining marker is negated, which
//! yields a depth-first traversal of the relevant paths without ever building
//! the control-flow tree.
//!
//! A branch whose opposite side contributes less than `ε` is never marked, so
//! the whole subtree behind it is pruned. With `ε` at machine precision the
//! result is indistinguishable from summing over every path.

mod compose;
mod context;
mod markers;

use serde::{Deserialize, Serialize};

use crate::error::{Error, PartialTrace, Result};
use crate::kernel::{KernelKind, Sharpness, Smoothing};
use crate::programs::Program;
use crate::scalar::Scalar;

pub use compose::{
    compose_then_smooth_vs_smooth_then_compose, composed_case_contributions, naive_case_contributions,
    smooth_then_compose,
};
pub use context::{Decision, TraceContext};
pub use markers::{Marker, MarkerState, MarkerStore};

use context::Steering;

pub const DEFAULT_MAX_PATHS: usize = 1 << 16;
pub const DEFAULT_MAX_CONDITIONS: usize = 1 << 14;
/// Depth guard for exhaustive enumeration.
pub const ENUMERATION_MAX_CONDITIONS: usize = 20;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TraceConfig {
    pub h: Sharpness,
    pub kernel: KernelKind,
    /// Pruning threshold in `[0, 0.5)`.
    pub epsilon: f64,
    pub max_paths: usize,
    pub max_conditions_per_path: usize,
    /// Keep a [`PathRecord`] per evaluated path.
    pub record_paths: bool,
    /// Check that every replay reproduces the previous path's decisions up
    /// to the forced condition.
    pub verify_replay: bool,
}

impl Default for TraceConfig {
    fn default() -> Self {
        TraceConfig {
            h: Sharpness::Finite(1.0),
            kernel: KernelKind::Logistic,
            epsilon: f64::EPSILON,
            max_paths: DEFAULT_MAX_PATHS,
            max_conditions_per_path: DEFAULT_MAX_CONDITIONS,
            record_paths: false,
            verify_replay: false,
        }
    }
}

impl TraceConfig {
    pub fn new(h: Sharpness) -> Self {
        TraceConfig {
            h,
            ..Default::default()
        }
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_kernel(mut self, kernel: KernelKind) -> Self {
        self.kernel = kernel;
        self
    }

    pub fn with_max_paths(mut self, max_paths: usize) -> Self {
        self.max_paths = max_paths;
        self
    }

    pub fn recording(mut self) -> Self {
        self.record_paths = true;
        self
    }

    pub fn verifying(mut self) -> Self {
        self.verify_replay = true;
        self
    }

    pub fn smoothing(&self) -> Smoothing {
        Smoothing::new(self.h, self.kernel)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon >= 0.0 && self.epsilon < 0.5) {
            return Err(Error::InvalidConfig(format!(
                "epsilon must lie in [0, 0.5), got {}",
                self.epsilon
            )));
        }
        if self.max_paths == 0 || self.max_conditions_per_path == 0 {
            return Err(Error::InvalidConfig("budgets must be at least 1".into()));
        }
        if let Sharpness::Finite(h) = self.h {
            if !(h.is_finite() && h > 0.0) {
                return Err(Error::InvalidSharpness(h));
            }
        }
        Ok(())
    }
}

/// One evaluated path.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PathRecord<S = f64> {
    pub kappa: S,
    pub output: Vec<S>,
    pub decisions: Vec<Decision>,
    #[serde(skip)]
    pub ln_kappa: f64,
}

impl<S: Scalar> PathRecord<S> {
    pub fn primal(&self) -> PathRecord<f64> {
        PathRecord {
            kappa: self.kappa.primal(),
            output: self.output.iter().map(|y| y.primal()).collect(),
            decisions: self.decisions.clone(),
            ln_kappa: self.ln_kappa,
        }
    }

    pub fn branches(&self) -> Vec<bool> {
        self.decisions.iter().map(|d| d.taken).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SmoothResult<S = f64> {
    /// `Σ_p κ_p · y_p` over the relevant paths.
    pub value: Vec<S>,
    pub total_kappa: S,
    pub paths_evaluated: usize,
    pub path_records: Option<Vec<PathRecord<S>>>,
}

impl<S: Scalar> SmoothResult<S> {
    pub fn primal(&self) -> SmoothResult<f64> {
        SmoothResult {
            value: self.value.iter().map(|y| y.primal()).collect(),
            total_kappa: self.total_kappa.primal(),
            paths_evaluated: self.paths_evaluated,
            path_records: self
                .path_records
                .as_ref()
                .map(|rs| rs.iter().map(PathRecord::primal).collect()),
        }
    }
}

impl<S: Scalar> TraceContext<S> {
    /// A fresh marker-driven context for `config`.
    pub fn for_config(config: &TraceConfig) -> Self {
        TraceContext::new(
            config.smoothing(),
            config.epsilon,
            config.max_conditions_per_path,
            Steering::Markers {
                store: MarkerStore::new(),
                cursor: 0,
            },
        )
    }

    pub fn markers(&self) -> Option<&MarkerStore> {
        match &self.steering {
            Steering::Markers { store, .. } => Some(store),
            Steering::Forced { .. } => None,
        }
    }

    fn markers_mut(&mut self) -> Option<&mut MarkerStore> {
        match &mut self.steering {
            Steering::Markers { store, .. } => Some(store),
            Steering::Forced { .. } => None,
        }
    }
}

fn check_input<P: Program, S>(program: &P, input: &[S]) -> Result<()> {
    if input.len() != program.arity() {
        return Err(Error::InputArity {
            expected: program.arity(),
            got: input.len(),
        });
    }
    Ok(())
}

/// Runs `program` once under the context's current steering.
pub fn evaluate_path<S: Scalar, P: Program>(
    ctx: &mut TraceContext<S>,
    program: &P,
    input: &[S],
) -> Result<PathRecord<S>> {
    ctx.begin_path();
    let output = program.eval(ctx, input)?;
    if output.len() != program.output_dim() {
        return Err(Error::OutputArity {
            expected: program.output_dim(),
            got: output.len(),
        });
    }
    if output.iter().any(|y| !y.primal().is_finite()) {
        return Err(Error::NonFinite { what: "output" });
    }
    match &ctx.steering {
        Steering::Markers { store, cursor } if *cursor < store.len() => {
            let index = store.get(*cursor).map_or(0, |m| m.index);
            return Err(Error::ReplayMismatch {
                index,
                detail: "path ended before reaching a marked condition".into(),
            });
        }
        Steering::Forced { prefix, .. } if ctx.decisions().len() < prefix.len() => {
            return Err(Error::ReplayMismatch {
                index: ctx.decisions().len(),
                detail: "path ended before the forced prefix".into(),
            });
        }
        _ => {}
    }
    let kappa = ctx.kappa();
    let ln_kappa = ctx.ln_kappa();
    Ok(PathRecord {
        kappa,
        output,
        decisions: ctx.take_decisions(),
        ln_kappa,
    })
}

fn in_path<S: Scalar>(path: usize, ctx: &TraceContext<S>, e: Error) -> Error {
    Error::InPath {
        path,
        decisions: ctx.decisions().iter().map(|d| d.taken).collect(),
        source: Box::new(e),
    }
}

fn verify_prefix(previous: &[bool], current: &[bool], forced: usize) -> Result<()> {
    for i in 0..forced {
        if previous.get(i) != current.get(i) {
            return Err(Error::ReplayMismatch {
                index: i,
                detail: "decision differs from the previous execution".into(),
            });
        }
    }
    match (previous.get(forced), current.get(forced)) {
        (Some(&p), Some(&c)) if p != c => Ok(()),
        _ => Err(Error::ReplayMismatch {
            index: forced,
            detail: "negated marker did not flip the branch".into(),
        }),
    }
}

/// Smoothed evaluation over all relevant paths.
pub fn trace<S: Scalar, P: Program>(program: &P, input: &[S], config: &TraceConfig) -> Result<SmoothResult<S>> {
    config.validate()?;
    check_input(program, input)?;

    let mut ctx = TraceContext::for_config(config);
    let mut value = vec![S::zero(); program.output_dim()];
    let mut total_kappa = S::zero();
    let mut records = config.record_paths.then(Vec::new);
    let mut paths = 0usize;
    let mut previous: Option<Vec<bool>> = None;
    let mut forced: Option<usize> = None;

    loop {
        if paths >= config.max_paths {
            return Err(Error::PathBudget {
                limit: config.max_paths,
                partial: PartialTrace {
                    paths_evaluated: paths,
                    partial_value: value.iter().map(|v| v.primal()).collect(),
                    partial_kappa: total_kappa.primal(),
                },
            });
        }
        let record = evaluate_path(&mut ctx, program, input).map_err(|e| in_path(paths, &ctx, e))?;
        if !record.kappa.primal().is_finite() {
            return Err(in_path(
                paths,
                &ctx,
                Error::NonFinite {
                    what: "path contribution",
                },
            ));
        }
        if config.verify_replay {
            let current = record.branches();
            if let (Some(prev), Some(k)) = (&previous, forced) {
                verify_prefix(prev, &current, k).map_err(|e| in_path(paths, &ctx, e))?;
            }
            previous = Some(current);
        }
        paths += 1;

        for (acc, &y) in value.iter_mut().zip(&record.output) {
            *acc += record.kappa * y;
        }
        total_kappa += record.kappa;
        if let Some(rs) = records.as_mut() {
            rs.push(record);
        }

        let store = ctx.markers_mut().expect("marker steering");
        store.pop_trailing_negated();
        match store.negate_last() {
            Some(k) => forced = Some(k),
            None => break,
        }
    }

    Ok(SmoothResult {
        value,
        total_kappa,
        paths_evaluated: paths,
        path_records: records,
    })
}

/// Every path with nonzero contribution, found by replaying each alternative
/// branch as a forced prefix. No pruning; intended as a reference for
/// [`trace`].
pub fn enumerate_all_paths<S: Scalar, P: Program>(
    program: &P,
    input: &[S],
    config: &TraceConfig,
) -> Result<Vec<PathRecord<S>>> {
    config.validate()?;
    check_input(program, input)?;
    let limit = ENUMERATION_MAX_CONDITIONS.min(config.max_conditions_per_path);
    let mut ctx = TraceContext::new(
        config.smoothing(),
        0.0,
        limit,
        Steering::Forced {
            prefix: Vec::new(),
            frontier: vec![Vec::new()],
        },
    );
    let mut out = Vec::new();
    loop {
        let next = match &mut ctx.steering {
            Steering::Forced { prefix, frontier } => match frontier.pop() {
                Some(p) => {
                    *prefix = p;
                    true
                }
                None => false,
            },
            Steering::Markers { .. } => unreachable!(),
        };
        if !next {
            break;
        }
        let n = out.len();
        let record = evaluate_path(&mut ctx, program, input).map_err(|e| in_path(n, &ctx, e))?;
        out.push(record);
    }
    Ok(out)
}

/// `Σ κ_p · y_p` over the given records.
pub fn weighted_sum<S: Scalar>(records: &[PathRecord<S>], output_dim: usize) -> Vec<S> {
    let mut acc = vec![S::zero(); output_dim];
    for r in records {
        for (a, &y) in acc.iter_mut().zip(&r.output) {
            *a += r.kappa * y;
        }
    }
    acc
}
