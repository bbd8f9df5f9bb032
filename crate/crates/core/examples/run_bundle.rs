//! A full batch run into a temporary directory, as the CLI does it.

use skewpoly::run::{run, RunConfig};

fn main() {
    let dir = std::env::temp_dir().join("skewpoly-run-bundle");
    let config = RunConfig {
        alpha: 1.0,
        n_max: 20,
        output_dir: dir.clone(),
        ..RunConfig::default()
    };
    let outcome = run(&config);
    println!("exit {}", outcome.exit_code);
    for inv in &outcome.manifest.invariants {
        println!("{:<28} {:>10.2e} <= {:.0e} {}", inv.name, inv.value, inv.threshold, if inv.passed { "ok" } else { "FAIL" });
    }
    println!("{} warnings, artifacts in {}", outcome.manifest.warning_count, dir.display());
    for a in &outcome.manifest.artifacts {
        println!("  {a}");
    }
}
