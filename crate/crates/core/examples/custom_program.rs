//! Writing a program against the tracing context: a loop whose trip count
//! depends on the input.

use smoothad::prelude::*;

/// Counts how many of `0, 1, ..., n-1` lie below `x`, then scales by `x`.
struct Staircase {
    n: usize,
}

impl Program for Staircase {
    fn name(&self) -> &str {
        "staircase"
    }

    fn arity(&self) -> usize {
        1
    }

    fn eval<S: Scalar>(&self, ctx: &mut TraceContext<S>, x: &[S]) -> Result<Vec<S>> {
        let mut count = S::zero();
        for i in 0..self.n {
            let below = ctx.lt(S::constant(i as f64), x[0])?;
            if !ctx.branch(below)? {
                break;
            }
            count += S::one();
        }
        Ok(vec![count * x[0]])
    }
}

fn main() -> Result<()> {
    let program = Staircase { n: 4 };
    for h in ["inf", "20", "4"] {
        let config = TraceConfig::new(h.parse()?);
        print!("h={h:<4}");
        for k in 0..=8 {
            let x = k as f64 * 0.5;
            let g = gradient(&program, &[x], &config)?;
            print!(" {:>6.3}/{:<6.3}", g.value, g.gradient[0]);
        }
        println!();
    }
    let r = trace(&program, &[1.5], &TraceConfig::new(Sharpness::Finite(4.0)))?;
    println!("paths at x=1.5, h=4: {}", r.paths_evaluated);
    Ok(())
}
