//! Banded recursion with coefficients from moment integrals; prints the
//! normalizations and the upper band.

use skewpoly::bootstrap::bootstrap_d2;
use skewpoly::moments::moments_quadrature;
use skewpoly::recursion_integral::{required_k_max, run_integral};
use skewpoly::weight::WeightSpec;

fn main() -> skewpoly::Result<()> {
    let n_max = 16;
    let spec = WeightSpec::quartic(1.0);
    let moments = moments_quadrature(&spec, required_k_max(n_max), 256)?;
    let boot = bootstrap_d2(&spec, &moments)?;
    let run = run_integral(&spec, &moments, &boot, n_max)?;

    println!("{:>3} {:>20} {:>20} {:>20}", "n", "g_n", "R_n,n+2", "R_n,n");
    for n in 0..=n_max {
        let f = |m: usize| run.r(n, m).map(|v| v.to_f64()).unwrap_or(f64::NAN);
        println!("{n:>3} {:>20.12e} {:>20.12e} {:>20.12e}", run.g_of(n).to_f64(), f(n + 2), f(n));
    }
    let worst = (0..run.bands.len()).filter_map(|r| run.band_residual(r, true)).fold(0.0, f64::max);
    println!("worst reintegrated band residual {worst:.2e}");
    Ok(())
}
