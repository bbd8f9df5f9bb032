//! Skew Gram matrix and the anti-self-duality of R for a 40 x 40 block.

use skewpoly::analysis::{duality_report, gram_report};
use skewpoly::bootstrap::bootstrap_d2;
use skewpoly::moments::moments_quadrature;
use skewpoly::recursion_integral::{required_k_max, run_integral};
use skewpoly::weight::WeightSpec;

fn main() -> skewpoly::Result<()> {
    let n = 40;
    for alpha in [0.0, 1.0] {
        let spec = WeightSpec::quartic(alpha);
        let moments = moments_quadrature(&spec, required_k_max(n), 256)?;
        let boot = bootstrap_d2(&spec, &moments)?;
        let run = run_integral(&spec, &moments, &boot, n)?;

        let gram = gram_report(&run.pairs, n, &moments)?;
        let dual = duality_report(&run.bands, n);
        println!(
            "alpha {alpha}: gram {:.2e}, g pair gap {:.2e}, duality {:.2e} over {} entries, without g weights {:.2e}",
            gram.max_residual,
            gram.g_pair_gap,
            dual.reintegrated_residual,
            dual.compared_entries,
            dual.unweighted_residual,
        );
    }
    Ok(())
}
