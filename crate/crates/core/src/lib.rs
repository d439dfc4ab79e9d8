//! Smooth interpolation of control-flow discontinuities.
//!
//! Programs with `if`/`else` on data-dependent comparisons are piecewise
//! functions. This crate evaluates such a program as the expectation of its
//! output when every comparison is perturbed by a random sample: each
//! control-flow path contributes with the product of the probabilities of
//! the branches it takes. Paths whose contribution falls below a threshold
//! are pruned while executing, and the smoothed result can be
//! differentiated in reverse mode.
//!
//! ```
//! use smoothad::prelude::*;
//!
//! let config = TraceConfig::new(Sharpness::Finite(1.0)).with_epsilon(1e-12);
//! let r = trace(&Listing1F, &[0.0, 0.0], &config).unwrap();
//! assert_eq!(r.paths_evaluated, 4);
//! assert!((r.value[0] - 0.619203).abs() < 1e-6);
//!
//! let g = gradient(&Step, &[0.0], &TraceConfig::default()).unwrap();
//! assert!((g.gradient[0] - 0.25).abs() < 1e-12);
//! ```

pub mod adjoint;
pub mod cli;
pub mod error;
pub mod kernel;
pub mod logic;
pub mod optimize;
pub mod programs;
pub mod scalar;
pub mod tracer;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::adjoint::{gradient, jacobian, Active, Gradient, Tape};
    pub use crate::error::{Error, Result};
    pub use crate::kernel::{KernelKind, Sharpness, Smoothing};
    pub use crate::logic::SmoothBool;
    pub use crate::optimize::{run_optimization, Method, OptimizerConfig, Trajectory};
    pub use crate::programs::{Corpus, Crescent, DiscontG, Figure3Shape, Listing1F, NestedFg, Program, Step};
    pub use crate::scalar::Scalar;
    pub use crate::tracer::{enumerate_all_paths, trace, PathRecord, SmoothResult, TraceConfig, TraceContext};
}
