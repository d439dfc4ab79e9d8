//! A piecewise-constant objective has no gradient; its smoothed version does.

use smoothad::optimize::discrete_objective;
use smoothad::prelude::*;

fn main() -> Result<()> {
    let opt = OptimizerConfig::adam(vec![1.8, -1.8], 400);
    for h in ["5", "inf"] {
        let t = run_optimization(&DiscontG, &opt, &TraceConfig::new(h.parse()?))?;
        println!("h={h}");
        for k in [0, 25, 50, 100, 200, 400] {
            let p = &t.points[k];
            println!(
                "  step {k:>3}: x = ({:+.3}, {:+.3}), smoothed {:.4}, discrete {}, |grad| {:.3e}",
                p.iterate[0],
                p.iterate[1],
                p.objective,
                discrete_objective(&DiscontG, &p.iterate)?,
                p.gradient_norm
            );
        }
    }
    Ok(())
}
