//! Integral-free recursion for g and R driven by the string equation, at twice
//! the working precision, compared with the integral pipeline.

use skewpoly::analysis::cross_check;
use skewpoly::bootstrap::bootstrap_d2;
use skewpoly::moments::moments_quadrature;
use skewpoly::recursion_diffeq::{run_diffeq, unweighted, DiffeqSeeds};
use skewpoly::recursion_integral::{required_k_max, run_integral};
use skewpoly::weight::WeightSpec;

fn main() -> skewpoly::Result<()> {
    let n_max = 40;
    let spec = WeightSpec::quartic(0.0);

    let seeds = DiffeqSeeds::compute(&spec, 512)?;
    let ledger = run_diffeq(&spec, &seeds, n_max)?;
    println!("{:>3} {:>16} {:>16} {:>16} {:>16}", "n", "g_2n", "R_2n,2n+2", "R_2n+1,2n+3", "R_2n,2n");
    for n in (0..ledger.rows()).step_by(4) {
        println!(
            "{n:>3} {:>16.9e} {:>16.9e} {:>16.9e} {:>16.9e}",
            ledger.g[n].to_f64(),
            ledger.r_off_even[n].to_f64(),
            ledger.r_off_odd[n].to_f64(),
            ledger.r_diag[n].to_f64(),
        );
    }

    let moments = moments_quadrature(&spec, required_k_max(n_max), 256)?;
    let boot = bootstrap_d2(&spec, &moments)?;
    let integral = run_integral(&spec, &moments, &boot, n_max)?;
    let cc = cross_check(&ledger, &integral);
    println!("cross-pipeline: {} rows, worst {:.2e} at {}", cc.rows, cc.max(), cc.worst_entry);

    // the relations without normalization weights do not hold on the true values
    let worst = unweighted::residuals(&ledger).iter().map(|r| r.max()).fold(0.0, f64::max);
    println!("unweighted relations, worst relative residual {worst:.3}");
    Ok(())
}
