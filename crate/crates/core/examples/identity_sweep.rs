//! Integration-by-parts identity between x psi_j psi_k and the recursion data.

use skewpoly::analysis::identity_sweep;
use skewpoly::bootstrap::bootstrap_d2;
use skewpoly::moments::moments_quadrature;
use skewpoly::recursion_diffeq::identity_residual;
use skewpoly::recursion_integral::{required_k_max, run_integral};
use skewpoly::weight::WeightSpec;

fn main() -> skewpoly::Result<()> {
    let max = 12;
    let spec = WeightSpec::quartic(1.0);
    let moments = moments_quadrature(&spec, required_k_max(max).max(2 * max + 12), 256)?;
    let boot = bootstrap_d2(&spec, &moments)?;
    let run = run_integral(&spec, &moments, &boot, max)?;

    for (j, k) in [(0, 1), (2, 5), (7, 10)] {
        println!("({j},{k}) residual {:.2e}", identity_residual(j, k, &run.pairs, &moments)?);
    }
    let sweep = identity_sweep(&run.pairs, max, &moments)?;
    println!("all j,k <= {max}: worst {:.2e} at {:?}", sweep.max_residual, sweep.worst);
    Ok(())
}
