//! The first four skew-orthogonal pairs, built by Gram-Schmidt on the moments.

use skewpoly::bootstrap::bootstrap_d2;
use skewpoly::moments::moments_quadrature;
use skewpoly::weight::WeightSpec;

fn main() -> skewpoly::Result<()> {
    for alpha in [0.0, 1.0, -1.0] {
        let spec = WeightSpec::quartic(alpha);
        let moments = moments_quadrature(&spec, 16, 256)?;
        let boot = bootstrap_d2(&spec, &moments)?;
        let m2_over_m0 = moments.get(2).to_f64() / moments.get(0).to_f64();
        println!(
            "alpha {alpha:>4}: g0 = {:.12}  g2 = {:.12}  c0(2) = {:.12}  c1(3) = {:.12}  (M2/M0 = {m2_over_m0:.12})",
            boot.g0.to_f64(),
            boot.g2.to_f64(),
            boot.c02.to_f64(),
            boot.c13.to_f64(),
        );
    }
    Ok(())
}
