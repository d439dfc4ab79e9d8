//! Smoothed comparisons combined with the probabilistic connectives.

use smoothad::kernel::{Sharpness, Smoothing};
use smoothad::logic::{eq, ge, lt};

fn main() -> smoothad::Result<()> {
    let sm = Smoothing::new(Sharpness::Finite(2.0), Default::default());
    let (x, y) = (0.3, 0.5);

    let inside = lt(x * x + y * y, 1.0, &sm)?;
    let above = ge(y, x, &sm)?;
    println!("x² + y² < 1      {inside:?}");
    println!("y >= x           {above:?}");
    println!("both             {:?}", inside & above);
    println!("either           {:?}", inside | above);
    println!("not both         {:?}", !(inside & above));
    println!("neither nor      {:?}", !inside & !above);
    println!("x == y           {:?}", eq(x, y, &sm)?);
    println!("x == x           {:?}", eq(x, x, &sm)?);

    let sharp = Smoothing::discrete();
    println!("x == x at h=inf  {:?}", eq(x, x, &sharp)?);
    Ok(())
}
