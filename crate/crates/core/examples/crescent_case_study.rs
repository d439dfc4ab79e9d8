//! ADAM on the crescent function for several sharpness values; prints the
//! final smoothed objective per step count and the unsmoothed objective at
//! the same iterates.

use smoothad::optimize::sweep;
use smoothad::prelude::*;
use smoothad::programs::CRESCENT_START;

fn main() -> Result<()> {
    let hs: Vec<Sharpness> = ["10", "50", "100", "500", "1000", "inf"]
        .iter()
        .map(|h| h.parse())
        .collect::<Result<_>>()?;
    let steps = [200, 300, 400, 500, 750, 1000, 1500, 2000];
    let opt = OptimizerConfig::adam(CRESCENT_START.to_vec(), 2000);
    let s = sweep(&Crescent, &opt, &TraceConfig::default(), &hs, &steps)?;
    println!("smoothed objective\n{}", s.to_csv());
    println!(
        "discrete objective\n{}",
        s.with_discrete_objectives(&Crescent)?.to_csv()
    );
    Ok(())
}
