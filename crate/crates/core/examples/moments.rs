//! Moment table of the quartic weight, checked against the Gamma-function
//! closed form at alpha = 0 and against the integration-by-parts recursion.
//!
//! ```bash
//! cargo run --example moments -- 0.5
//! ```

use skewpoly::moments::{moments_closed_form_alpha0, moments_quadrature};
use skewpoly::num::rel_diff;
use skewpoly::weight::WeightSpec;

fn main() -> skewpoly::Result<()> {
    let alpha: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0.0);
    let spec = WeightSpec::quartic(alpha);
    let table = moments_quadrature(&spec, 40, 256)?;

    println!("alpha = {alpha}, X = {:.3}", table.truncation_radius());
    for (k, m, _) in table.values().filter(|(k, _, _)| k % 8 == 0) {
        println!("M_{k:<3} = {:.15e}", m.to_f64());
    }
    println!("ibp residual {:.2e}", table.ibp_residual());

    if alpha == 0.0 {
        let exact = moments_closed_form_alpha0(40, 256);
        let worst = (0..=40).step_by(2).map(|k| rel_diff(table.get(k), exact.get(k))).fold(0.0, f64::max);
        println!("max relative gap to closed form {worst:.2e}");
    }
    Ok(())
}
