//! Tracing a composition `f ∘ g` versus composing the individually smoothed
//! `f̃ ∘ g̃`.

use smoothad::prelude::*;
use smoothad::tracer::{
    compose_then_smooth_vs_smooth_then_compose, composed_case_contributions, naive_case_contributions,
};

fn main() -> Result<()> {
    let pair = NestedFg::default();
    let config = TraceConfig::new(Sharpness::Finite(10.0));
    println!(
        "{:>6} {:>10} {:>10}   {:>23}   {:>23}",
        "x", "traced", "naive", "traced case weights", "naive case weights"
    );
    for k in -8..=8 {
        let x = k as f64 * 0.05;
        let (traced, naive) = compose_then_smooth_vs_smooth_then_compose(&pair, x, &config)?;
        let tw = composed_case_contributions(&pair, x, &config)?;
        let nw = naive_case_contributions(&pair, x, &config.smoothing())?;
        let fmt = |w: [[f64; 2]; 2]| format!("{:.3} {:.3} {:.3} {:.3}", w[0][0], w[0][1], w[1][0], w[1][1]);
        println!("{x:>6.2} {traced:>10.5} {naive:>10.5}   {}   {}", fmt(tw), fmt(nw));
    }
    Ok(())
}
