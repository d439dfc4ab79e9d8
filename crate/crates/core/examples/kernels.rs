//! Branch probabilities of the two kernels as sharpness grows.

use smoothad::kernel::{contrib_density, contrib_true, Distance, KernelKind, Sharpness};

fn main() -> smoothad::Result<()> {
    let distances = [-1.0, -0.1, 0.0, 0.1, 1.0];
    for kind in KernelKind::ALL {
        println!("{kind}");
        for h in ["1", "10", "100", "inf"] {
            let h: Sharpness = h.parse()?;
            let row: Vec<String> = distances
                .iter()
                .map(|&d| format!("{:.6}", contrib_true(Distance::new(d).unwrap(), h, kind)))
                .collect();
            println!("  h={h:<4} P(true) at d={distances:?}: {}", row.join(" "));
        }
        let slope = contrib_density(Distance::new(0.0)?, Sharpness::Finite(1.0), kind)?;
        println!("  density at the boundary, h=1: {slope:.6}");
    }
    Ok(())
}
