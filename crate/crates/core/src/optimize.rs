//! Gradient descent and ADAM on smoothed programs.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adjoint::gradient;
use crate::error::{Error, Result};
use crate::kernel::Sharpness;
use crate::programs::Program;
use crate::tracer::{trace, TraceConfig};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Gd,
    #[default]
    Adam,
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gd" => Ok(Method::Gd),
            "adam" => Ok(Method::Adam),
            other => Err(Error::InvalidConfig(format!("unknown method `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub method: Method,
    pub learning_rate: f64,
    pub steps: usize,
    pub beta1: f64,
    pub beta2: f64,
    /// Added to `√v̂` in the ADAM denominator.
    pub delta: f64,
    pub start: Vec<f64>,
}

impl OptimizerConfig {
    pub fn adam(start: Vec<f64>, steps: usize) -> Self {
        OptimizerConfig {
            method: Method::Adam,
            learning_rate: 0.02,
            steps,
            beta1: 0.9,
            beta2: 0.999,
            delta: 1e-8,
            start,
        }
    }

    pub fn gd(start: Vec<f64>, steps: usize, learning_rate: f64) -> Self {
        OptimizerConfig {
            method: Method::Gd,
            learning_rate,
            ..OptimizerConfig::adam(start, steps)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig("learning rate must be positive".into()));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                return Err(Error::InvalidConfig(format!("{name} must lie in [0, 1)")));
            }
        }
        if self.delta.is_nan() || self.delta < 0.0 {
            return Err(Error::InvalidConfig("delta must be non-negative".into()));
        }
        if self.start.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidConfig("start must be finite".into()));
        }
        Ok(())
    }
}

/// `x - lr·grad`.
pub fn gd_step(x: &[f64], grad: &[f64], lr: f64) -> Vec<f64> {
    x.iter().zip(grad).map(|(x, g)| x - lr * g).collect()
}

/// Moment estimates of ADAM.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: i32,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub delta: f64,
}

impl AdamState {
    pub fn new(dim: usize, config: &OptimizerConfig) -> Self {
        AdamState {
            m: vec![0.0; dim],
            v: vec![0.0; dim],
            t: 0,
            learning_rate: config.learning_rate,
            beta1: config.beta1,
            beta2: config.beta2,
            delta: config.delta,
        }
    }
}

/// One bias-corrected ADAM update; returns the new iterate.
pub fn adam_step(state: &mut AdamState, x: &[f64], grad: &[f64]) -> Vec<f64> {
    state.t += 1;
    let (b1, b2) = (state.beta1, state.beta2);
    let c1 = 1.0 - b1.powi(state.t);
    let c2 = 1.0 - b2.powi(state.t);
    let mut out = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let g = grad[i];
        state.m[i] = b1 * state.m[i] + (1.0 - b1) * g;
        state.v[i] = b2 * state.v[i] + (1.0 - b2) * g * g;
        let m_hat = state.m[i] / c1;
        let v_hat = state.v[i] / c2;
        out.push(x[i] - state.learning_rate * m_hat / (v_hat.sqrt() + state.delta));
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrajectoryPoint {
    pub iterate: Vec<f64>,
    pub objective: f64,
    pub gradient_norm: f64,
}

/// Iterates from the start point; `steps + 1` entries.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Trajectory {
    pub points: Vec<TrajectoryPoint>,
}

impl Trajectory {
    pub fn last(&self) -> &TrajectoryPoint {
        self.points.last().expect("trajectory includes the start point")
    }

    /// The first `steps + 1` points, i.e. the trajectory of a shorter run.
    pub fn truncated(&self, steps: usize) -> Trajectory {
        Trajectory {
            points: self.points[..=steps.min(self.points.len() - 1)].to_vec(),
        }
    }

    /// `iter,x1,...,xn,objective,grad_norm`.
    pub fn to_csv(&self) -> String {
        let dim = self.points.first().map_or(0, |p| p.iterate.len());
        let mut s = String::from("iter");
        for i in 1..=dim {
            write!(s, ",x{i}").unwrap();
        }
        s.push_str(",objective,grad_norm\n");
        for (k, p) in self.points.iter().enumerate() {
            write!(s, "{k}").unwrap();
            for x in &p.iterate {
                write!(s, ",{x}").unwrap();
            }
            writeln!(s, ",{},{}", p.objective, p.gradient_norm).unwrap();
        }
        s
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Runs the configured optimizer on the smoothed program. The recorded
/// objective is the smoothed value, which for `h = ∞` is the discrete one.
pub fn run_optimization<P: Program>(
    program: &P,
    opt: &OptimizerConfig,
    trace_config: &TraceConfig,
) -> Result<Trajectory> {
    opt.validate()?;
    trace_config.validate()?;
    if opt.start.len() != program.arity() {
        return Err(Error::InputArity {
            expected: program.arity(),
            got: opt.start.len(),
        });
    }
    let mut x = opt.start.clone();
    let mut adam = AdamState::new(x.len(), opt);
    let mut points = Vec::with_capacity(opt.steps + 1);
    for k in 0..=opt.steps {
        let g = gradient(program, &x, trace_config).map_err(|e| Error::AtIteration {
            iteration: k,
            source: Box::new(e),
        })?;
        points.push(TrajectoryPoint {
            iterate: x.clone(),
            objective: g.value,
            gradient_norm: norm(&g.gradient),
        });
        if k == opt.steps {
            break;
        }
        x = match opt.method {
            Method::Gd => gd_step(&x, &g.gradient, opt.learning_rate),
            Method::Adam => adam_step(&mut adam, &x, &g.gradient),
        };
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::AtIteration {
                iteration: k,
                source: Box::new(Error::NonFinite { what: "iterate" }),
            });
        }
    }
    Ok(Trajectory { points })
}

/// Unsmoothed objective at `x`.
pub fn discrete_objective<P: Program>(program: &P, x: &[f64]) -> Result<f64> {
    let config = TraceConfig::new(Sharpness::Infinite);
    Ok(trace(program, x, &config)?.value[0])
}

/// Final objectives over a grid of sharpness values and step counts.
#[derive(Clone, Debug, PartialEq)]
pub struct Sweep {
    pub sharpness: Vec<Sharpness>,
    pub steps: Vec<usize>,
    /// `objectives[i][j]`: run with `sharpness[i]` for `steps[j]` steps.
    pub objectives: Vec<Vec<f64>>,
    /// One trajectory per sharpness, as long as the longest column.
    pub trajectories: Vec<Trajectory>,
}

impl Sweep {
    /// Row per sharpness, column per step count; `inf` marks `h = ∞`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("h");
        for n in &self.steps {
            write!(s, ",{n}").unwrap();
        }
        s.push('\n');
        for (h, row) in self.sharpness.iter().zip(&self.objectives) {
            write!(s, "{h}").unwrap();
            for v in row {
                write!(s, ",{v}").unwrap();
            }
            s.push('\n');
        }
        s
    }

    /// Replaces every entry with the discrete objective at the same iterate.
    pub fn with_discrete_objectives<P: Program + Sync>(&self, program: &P) -> Result<Sweep> {
        let objectives = self
            .trajectories
            .par_iter()
            .map(|t| {
                self.steps
                    .iter()
                    .map(|&n| discrete_objective(program, &t.points[n].iterate))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Sweep {
            objectives,
            ..self.clone()
        })
    }
}

/// Runs every sharpness in parallel. A run of `n` steps is a prefix of a
/// longer run with the same configuration, so each row needs one run.
pub fn sweep<P: Program + Sync>(
    program: &P,
    opt: &OptimizerConfig,
    trace_config: &TraceConfig,
    sharpness: &[Sharpness],
    steps: &[usize],
) -> Result<Sweep> {
    let longest = steps.iter().copied().max().unwrap_or(0);
    let trajectories = sharpness
        .par_iter()
        .map(|&h| {
            let opt = OptimizerConfig {
                steps: longest,
                ..opt.clone()
            };
            let tc = TraceConfig {
                h,
                ..trace_config.clone()
            };
            run_optimization(program, &opt, &tc)
        })
        .collect::<Result<Vec<_>>>()?;
    let objectives = trajectories
        .iter()
        .map(|t| steps.iter().map(|&n| t.points[n].objective).collect())
        .collect();
    Ok(Sweep {
        sharpness: sharpness.to_vec(),
        steps: steps.to_vec(),
        objectives,
        trajectories,
    })
}
