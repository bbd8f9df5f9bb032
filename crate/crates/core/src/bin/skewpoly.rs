use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use skewpoly::run::{precision_from_env, run, Emit, Method, PartialConfig, RunConfig, EXIT_CONFIG};
use skewpoly::Result;

/// Skew-orthogonal polynomials for the weight exp(-(x^4/4 + alpha x^2/2)).
#[derive(Parser, Debug)]
#[command(version)]
struct Args {
    #[arg(long, allow_negative_numbers = true)]
    alpha: Option<f64>,
    /// Largest index n; even, at least 4.
    #[arg(long)]
    n_max: Option<usize>,
    /// Working precision in bits (default from SKEWPOLY_PRECISION_BITS, else 256).
    #[arg(long)]
    precision_bits: Option<u32>,
    /// integral, diffeq or both.
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    tolerance: Option<f64>,
    /// Comma-separated subset of coeffs,g,R,gram,zeros,ledger,moments.
    #[arg(long)]
    emit: Option<String>,
    #[arg(long)]
    output: Option<PathBuf>,
    /// JSON file with any RunConfig fields; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

fn resolve(args: Args) -> Result<RunConfig> {
    let flags = PartialConfig {
        alpha: args.alpha,
        n_max: args.n_max,
        precision_bits: args.precision_bits,
        method: args.method.as_deref().map(Method::parse).transpose()?,
        tolerance: args.tolerance,
        emit: args.emit.as_deref().map(Emit::parse_list).transpose()?,
        output_dir: args.output,
    };
    let file = match &args.config {
        Some(p) => PartialConfig::from_json_file(p)?,
        None => PartialConfig::default(),
    };
    let env = PartialConfig {
        precision_bits: precision_from_env()?,
        ..PartialConfig::default()
    };
    Ok(flags.over(file).over(env).resolve())
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(EXIT_CONFIG as u8);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    let config = match resolve(args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    };
    let outcome = run(&config);
    let m = &outcome.manifest;
    match &m.error {
        Some(err) => eprintln!(
            "failed in {}: {err}",
            m.failing_stage.as_deref().unwrap_or("unknown stage")
        ),
        None => eprintln!(
            "ok: {} artifacts in {}, {} warnings",
            m.artifacts.len(),
            config.output_dir.display(),
            m.warning_count
        ),
    }
    ExitCode::from(outcome.exit_code as u8)
}
