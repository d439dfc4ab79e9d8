//! Composing independently smoothed functions versus smoothing the
//! composition.
//!
//! For `f ∘ g` the tracer weights the case `f_i ∘ g_j` by
//! `κ = σ_g(x) · σ_f(g_j(x))`, i.e. `f`'s condition is evaluated on the
//! actual case output. Composing `f̃` with `g̃` instead evaluates `f`'s
//! condition on the blended `g̃(x)`, which near `g`'s jump can sit on `f`'s
//! boundary even though neither case of `g` does.

use crate::error::Result;
use crate::kernel::{contrib_true, Distance, Smoothing};
use crate::programs::{NestedFg, Piecewise};

use super::{enumerate_all_paths, trace, TraceConfig};

fn smoothed(p: &Piecewise, x: f64, sm: &Smoothing) -> Result<(f64, f64)> {
    let s = contrib_true(Distance::between(x, p.threshold)?, sm.h, sm.kernel);
    Ok((s, s * p.lower.apply(x) + (1.0 - s) * p.upper.apply(x)))
}

/// `f̃(g̃(x))`.
pub fn smooth_then_compose(pair: &NestedFg, x: f64, sm: &Smoothing) -> Result<f64> {
    let (_, gx) = smoothed(&pair.g, x, sm)?;
    Ok(smoothed(&pair.f, gx, sm)?.1)
}

/// `(traced f∘g, f̃∘g̃)` at `x`.
pub fn compose_then_smooth_vs_smooth_then_compose(pair: &NestedFg, x: f64, config: &TraceConfig) -> Result<(f64, f64)> {
    let traced = trace(pair, &[x], config)?.value[0];
    Ok((traced, smooth_then_compose(pair, x, &config.smoothing())?))
}

/// Case weights of `f̃ ∘ g̃`, indexed `[g case][f case]` with 0 = lower.
pub fn naive_case_contributions(pair: &NestedFg, x: f64, sm: &Smoothing) -> Result<[[f64; 2]; 2]> {
    let (sg, gx) = smoothed(&pair.g, x, sm)?;
    let (sf, _) = smoothed(&pair.f, gx, sm)?;
    Ok([[sg * sf, sg * (1.0 - sf)], [(1.0 - sg) * sf, (1.0 - sg) * (1.0 - sf)]])
}

/// Case weights of the traced composition, indexed like
/// [`naive_case_contributions`].
pub fn composed_case_contributions(pair: &NestedFg, x: f64, config: &TraceConfig) -> Result<[[f64; 2]; 2]> {
    let mut w = [[0.0; 2]; 2];
    for r in enumerate_all_paths(pair, &[x], config)? {
        let g = usize::from(!r.decisions[0].taken);
        let f = usize::from(!r.decisions[1].taken);
        w[g][f] += r.kappa;
    }
    Ok(w)
}
