//! Real zeros of phi_n and psi_n against the expected counts. At alpha = 0 the
//! even phi have no real zeros at all.

use skewpoly::analysis::{zero_reports, Which};
use skewpoly::bootstrap::bootstrap_d2;
use skewpoly::moments::moments_quadrature;
use skewpoly::recursion_integral::{required_k_max, run_integral};
use skewpoly::weight::WeightSpec;

fn main() -> skewpoly::Result<()> {
    let n_max = 12;
    let spec = WeightSpec::quartic(0.0);
    let moments = moments_quadrature(&spec, required_k_max(n_max), 256)?;
    let boot = bootstrap_d2(&spec, &moments)?;
    let run = run_integral(&spec, &moments, &boot, n_max)?;

    for r in zero_reports(&run.pairs[..=n_max], moments.truncation_radius()) {
        let name = match r.which {
            Which::Phi => "phi",
            Which::Psi => "psi",
        };
        let xs: Vec<String> = r.zeros.iter().filter(|x| **x >= 0).map(|x| format!("{:.6}", x.to_f64())).collect();
        println!(
            "{name}_{:<2} degree {:>2}: {:>2} real zeros (expected {:>2}{}) nonnegative: [{}]",
            r.index_n,
            r.degree,
            r.real_zero_count,
            r.claimed_count,
            if r.matches_claim { "" } else { ", MISMATCH" },
            xs.join(", "),
        );
    }
    Ok(())
}
