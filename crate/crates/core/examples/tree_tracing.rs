//! Path-by-path view of a traced program and the effect of the pruning
//! threshold.

use smoothad::prelude::*;

fn main() -> Result<()> {
    let x = [0.0, 0.0];
    for eps in [1e-12, 0.05, 0.4] {
        let config = TraceConfig::new(Sharpness::Finite(1.0)).with_epsilon(eps).recording();
        let r = trace(&Listing1F, &x, &config)?;
        println!(
            "eps = {eps}: value {:.6}, {} paths, total kappa {:.6}",
            r.value[0], r.paths_evaluated, r.total_kappa
        );
        for p in r.path_records.unwrap_or_default() {
            let branches: String = p.branches().iter().map(|&t| if t { 'T' } else { 'F' }).collect();
            println!("  {branches:<3} kappa {:.6} -> {}", p.kappa, p.output[0]);
        }
    }

    let all = enumerate_all_paths(&Figure3Shape, &[0.5], &TraceConfig::default())?;
    println!("figure3_shape at 0.5: {} paths in the full tree", all.len());
    let discrete = trace(&Listing1F, &x, &TraceConfig::new(Sharpness::Infinite))?;
    println!("discrete: {} ({} path)", discrete.value[0], discrete.paths_evaluated);
    Ok(())
}
