//! Reverse-mode gradients of smoothed programs, checked against central
//! differences.

use smoothad::adjoint::{finite_difference, gradient_discrepancy};
use smoothad::prelude::*;

fn main() -> Result<()> {
    let g = gradient(&Step, &[0.0], &TraceConfig::default())?;
    println!("d/dx step at 0, h=1: {}", g.gradient[0]);

    for h in [1.0, 10.0, 100.0, f64::INFINITY] {
        let config = TraceConfig::new(Sharpness::new(h)?);
        let x = [0.9, 1.1];
        let g = gradient(&Crescent, &x, &config)?;
        print!(
            "crescent at {x:?}, h={}: value {:.6}, gradient {:.6?}",
            config.h, g.value, g.gradient
        );
        if !config.h.is_infinite() {
            let fd = finite_difference(&Crescent, &x, &config)?;
            print!(
                ", finite-difference discrepancy {:.1e}",
                gradient_discrepancy(&g.gradient, &fd)
            );
        }
        println!();
    }

    let x = [1.0, -1.0];
    for h in ["5", "inf"] {
        let g = gradient(&DiscontG, &x, &TraceConfig::new(h.parse()?))?;
        println!("discont_g on its boundary, h={h}: gradient {:.4?}", g.gradient);
    }
    Ok(())
}
