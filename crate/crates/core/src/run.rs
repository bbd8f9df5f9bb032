//! Batch runs: moments, bootstrap, the selected pipelines and the analysis,
//! written out as CSV/JSON artifacts plus a manifest.
//!
//! Exit codes: 0 success (zero-count mismatches are warnings), 2 invariant
//! violation, 3 precision exhaustion, 4 configuration error.

use std::collections::BTreeSet;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::analysis::{
    cross_check, duality_report, gram_report, identity_sweep, write_zeros_csv, zero_reports, zeros_json, Which,
    ZeroReport,
};
use crate::bootstrap::bootstrap_d2;
use crate::error::{Error, Result};
use crate::moments::{moments_quadrature, MomentTable};
use crate::num::{exact_string, DEFAULT_PRECISION_BITS, MIN_PRECISION_BITS};
use crate::polynomials::{GramReport, SkewPolyPair};
use crate::recursion_diffeq::{run_diffeq, unweighted, DiffeqSeeds, NormalizationLedger};
use crate::recursion_integral::{required_k_max, run_integral, IntegralRun, RecursionBand};
use crate::weight::WeightSpec;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVARIANT: i32 = 2;
pub const EXIT_PRECISION: i32 = 3;
pub const EXIT_CONFIG: i32 = 4;

/// Environment variable supplying the default working precision.
pub const PRECISION_ENV: &str = "SKEWPOLY_PRECISION_BITS";

/// Largest `j, k` of the integration-by-parts sweep.
pub const IDENTITY_SWEEP_MAX: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Integral,
    Diffeq,
    Both,
}

impl Method {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "integral" => Ok(Method::Integral),
            "diffeq" => Ok(Method::Diffeq),
            "both" => Ok(Method::Both),
            other => Err(Error::Config(format!("unknown method {other:?}"))),
        }
    }

    fn integral(self) -> bool {
        matches!(self, Method::Integral | Method::Both)
    }

    fn diffeq(self) -> bool {
        matches!(self, Method::Diffeq | Method::Both)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Emit {
    Coeffs,
    G,
    R,
    Gram,
    Zeros,
    Ledger,
    Moments,
}

impl Emit {
    pub const ALL: [Emit; 7] = [
        Emit::Coeffs,
        Emit::G,
        Emit::R,
        Emit::Gram,
        Emit::Zeros,
        Emit::Ledger,
        Emit::Moments,
    ];

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "coeffs" => Ok(Emit::Coeffs),
            "g" => Ok(Emit::G),
            "R" | "r" => Ok(Emit::R),
            "gram" => Ok(Emit::Gram),
            "zeros" => Ok(Emit::Zeros),
            "ledger" => Ok(Emit::Ledger),
            "moments" => Ok(Emit::Moments),
            other => Err(Error::Config(format!("unknown emit target {other:?}"))),
        }
    }

    /// Comma-separated list, e.g. `g,R,gram`.
    pub fn parse_list(s: &str) -> Result<BTreeSet<Emit>> {
        s.split(',').map(str::trim).filter(|t| !t.is_empty()).map(Emit::parse).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub alpha: f64,
    pub n_max: usize,
    pub precision_bits: u32,
    pub method: Method,
    pub tolerance: f64,
    pub emit: BTreeSet<Emit>,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            alpha: 0.0,
            n_max: 12,
            precision_bits: DEFAULT_PRECISION_BITS,
            method: Method::Both,
            tolerance: 1e-8,
            emit: Emit::ALL.into_iter().collect(),
            output_dir: PathBuf::from("out"),
        }
    }
}

/// Every field optional, for config files and flag overlays.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialConfig {
    pub alpha: Option<f64>,
    pub n_max: Option<usize>,
    pub precision_bits: Option<u32>,
    pub method: Option<Method>,
    pub tolerance: Option<f64>,
    pub emit: Option<BTreeSet<Emit>>,
    pub output_dir: Option<PathBuf>,
}

impl PartialConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("bad config {}: {e}", path.display())))
    }

    /// Fields set in `self` win over `base`.
    pub fn over(self, base: PartialConfig) -> PartialConfig {
        PartialConfig {
            alpha: self.alpha.or(base.alpha),
            n_max: self.n_max.or(base.n_max),
            precision_bits: self.precision_bits.or(base.precision_bits),
            method: self.method.or(base.method),
            tolerance: self.tolerance.or(base.tolerance),
            emit: self.emit.or(base.emit),
            output_dir: self.output_dir.or(base.output_dir),
        }
    }

    pub fn resolve(self) -> RunConfig {
        let d = RunConfig::default();
        RunConfig {
            alpha: self.alpha.unwrap_or(d.alpha),
            n_max: self.n_max.unwrap_or(d.n_max),
            precision_bits: self.precision_bits.unwrap_or(d.precision_bits),
            method: self.method.unwrap_or(d.method),
            tolerance: self.tolerance.unwrap_or(d.tolerance),
            emit: self.emit.unwrap_or(d.emit),
            output_dir: self.output_dir.unwrap_or(d.output_dir),
        }
    }
}

/// Precision from the environment, if set.
pub fn precision_from_env() -> Result<Option<u32>> {
    match std::env::var(PRECISION_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::Config(format!("{PRECISION_ENV}={v:?} is not an integer"))),
        Err(_) => Ok(None),
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.alpha.is_finite() {
            return Err(Error::Config(format!("alpha must be finite, got {}", self.alpha)));
        }
        if self.n_max < 4 || self.n_max % 2 != 0 {
            return Err(Error::Config(format!(
                "n_max must be an even integer >= 4, got {}",
                self.n_max
            )));
        }
        if self.precision_bits < MIN_PRECISION_BITS {
            return Err(Error::Config(format!(
                "precision_bits must be >= {MIN_PRECISION_BITS}, got {}",
                self.precision_bits
            )));
        }
        if !(self.tolerance > 0.0 && self.tolerance <= 1e-2) {
            return Err(Error::Config(format!(
                "tolerance must lie in (0, 1e-2], got {}",
                self.tolerance
            )));
        }
        Ok(())
    }

    /// Precision of the difference-equation pipeline: doubled when it is
    /// cross-checked against the integral pipeline.
    pub fn diffeq_precision(&self) -> u32 {
        if self.method == Method::Both {
            2 * self.precision_bits
        } else {
            self.precision_bits
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct InvariantCheck {
    pub name: String,
    pub stage: String,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Manifest {
    pub config: Option<RunConfig>,
    pub precision_bits: serde_json::Value,
    pub invariants: Vec<InvariantCheck>,
    pub diagnostics: serde_json::Map<String, serde_json::Value>,
    pub warnings: Vec<String>,
    pub warning_count: usize,
    pub failing_stage: Option<String>,
    pub error: Option<String>,
    pub exit_code: i32,
    pub artifacts: Vec<String>,
    pub timings_ms: Vec<(String, f64)>,
    pub wall_time_ms: f64,
}

impl Manifest {
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let mut f = BufWriter::new(File::create(dir.join("manifest.json"))?);
        serde_json::to_writer_pretty(&mut f, self)?;
        writeln!(f)?;
        Ok(())
    }
}

/// Result of [`run`]: the exit code and what was recorded.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub manifest: Manifest,
}

pub fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Config(_) => EXIT_CONFIG,
        e if e.is_precision_exhaustion() => EXIT_PRECISION,
        _ => EXIT_INVARIANT,
    }
}

/// Everything computed by one run.
#[derive(Debug)]
pub struct RunData {
    pub spec: WeightSpec,
    pub moments: MomentTable,
    pub integral: Option<IntegralRun>,
    pub ledger: Option<NormalizationLedger>,
    /// Pairs `0 ..= n_max + 1` from the primary pipeline.
    pub pairs: Vec<SkewPolyPair>,
    pub bands: Vec<RecursionBand>,
}

/// Reports computed by the analysis stage.
#[derive(Debug)]
pub struct Analysis {
    pub summary: serde_json::Value,
    pub gram: GramReport,
    pub zeros: Vec<ZeroReport>,
}

struct Runner<'a> {
    config: &'a RunConfig,
    manifest: Manifest,
    stage_start: Instant,
    stage: &'static str,
}

impl Runner<'_> {
    fn begin(&mut self, stage: &'static str) {
        self.stage = stage;
        self.stage_start = Instant::now();
    }

    fn end(&mut self) {
        let ms = self.stage_start.elapsed().as_secs_f64() * 1e3;
        self.manifest.timings_ms.push((self.stage.to_string(), ms));
    }

    fn check(&mut self, name: &str, value: f64, threshold: f64) {
        let passed = value <= threshold;
        self.manifest.invariants.push(InvariantCheck {
            name: name.to_string(),
            stage: self.stage.to_string(),
            value,
            threshold,
            passed,
        });
    }

    fn warn(&mut self, msg: String) {
        self.manifest.warnings.push(msg);
    }

    fn diag(&mut self, key: &str, value: serde_json::Value) {
        self.manifest.diagnostics.insert(key.to_string(), value);
    }

    fn compute(&mut self) -> Result<RunData> {
        let cfg = self.config;
        let prec = cfg.precision_bits;
        let spec = WeightSpec::quartic(cfg.alpha);
        spec.validate()?;
        let n_max = cfg.n_max;

        self.begin("moments");
        let k_max = required_k_max(n_max).max(2 * IDENTITY_SWEEP_MAX + 12);
        let moments = moments_quadrature(&spec, k_max, prec)?;
        self.check("moment_ibp_residual", moments.ibp_residual(), cfg.tolerance);
        self.end();

        self.begin("bootstrap");
        let boot = bootstrap_d2(&spec, &moments)?;
        self.end();

        let integral = if cfg.method.integral() {
            self.begin("recursion_integral");
            let run = run_integral(&spec, &moments, &boot, n_max)?;
            self.end();
            Some(run)
        } else {
            None
        };

        let mut ledger = if cfg.method.diffeq() {
            self.begin("recursion_diffeq");
            let seeds = DiffeqSeeds::compute(&spec, cfg.diffeq_precision())?;
            let l = run_diffeq(&spec, &seeds, n_max)?;
            self.check("diffeq_seed_consistency", l.seed_deviation, cfg.tolerance);
            let res = unweighted::residuals(&l);
            let worst = res.iter().map(|r| r.max()).fold(0.0, f64::max);
            self.diag(
                "unweighted_relations",
                serde_json::json!({
                    "max_relative_residual": worst,
                    "g_relation_n0": res.first().map(|r| r.g_relation),
                    "holds": worst <= cfg.tolerance,
                }),
            );
            self.end();
            Some(l)
        } else {
            None
        };

        let (pairs, bands) = match (&integral, &mut ledger) {
            (Some(r), _) => (r.pairs[..n_max + 2].to_vec(), r.bands.clone()),
            (None, Some(l)) => (l.pairs(n_max + 2)?, l.bands(n_max + 2)?),
            (None, None) => unreachable!("method selects at least one pipeline"),
        };
        Ok(RunData {
            spec,
            moments,
            integral,
            ledger,
            pairs,
            bands,
        })
    }

    fn analyse(&mut self, data: &RunData) -> Result<Analysis> {
        let cfg = self.config;
        let tol = cfg.tolerance;
        self.begin("analysis");
        let n = cfg.n_max + 2;
        let gram = gram_report(&data.pairs, n, &data.moments)?;
        self.check("gram_residual", gram.max_residual, tol);
        self.check("g_pair_gap", gram.g_pair_gap, tol);

        let mut summary = serde_json::Map::new();
        summary.insert("gram".into(), serde_json::json!({
            "N": gram.dimension_n,
            "max_residual": gram.max_residual,
            "g_pair_gap": gram.g_pair_gap,
            "antisymmetry_residual": gram.antisymmetry_residual,
        }));
        if let Some(run) = &data.integral {
            let d = duality_report(&run.bands, n);
            self.check("duality_reintegrated", d.reintegrated_residual, tol);
            self.check("duality_copied", d.copied_residual, 0.0);
            summary.insert("duality".into(), serde_json::to_value(&d)?);
            let worst_band = (0..run.bands.len())
                .filter_map(|row| run.band_residual(row, true))
                .fold(0.0, f64::max);
            self.check("band_residual_reintegrated", worst_band, tol);
        }
        if let (Some(run), Some(l)) = (&data.integral, &data.ledger) {
            let c = cross_check(l, run);
            self.check("cross_pipeline", c.max(), tol);
            summary.insert("cross_check".into(), serde_json::to_value(&c)?);
        }
        let sweep = identity_sweep(&data.pairs, IDENTITY_SWEEP_MAX.min(data.pairs.len() - 1), &data.moments)?;
        self.check("identity_sweep", sweep.max_residual, tol);
        summary.insert("identity_sweep".into(), serde_json::to_value(&sweep)?);

        let zeros = zero_reports(&data.pairs[..=cfg.n_max], data.moments.truncation_radius());
        let mut forced_missing = 0usize;
        for z in &zeros {
            let forced = match z.which {
                Which::Phi => z.index_n % 2 == 1,
                Which::Psi => z.index_n % 2 == 0,
            };
            if forced && !z.has_zero_at_origin {
                forced_missing += 1;
            }
            if !z.matches_claim {
                self.warn(format!(
                    "{}_{}: {} real zeros, claimed {}",
                    z.which.as_str(),
                    z.index_n,
                    z.real_zero_count,
                    z.claimed_count
                ));
            }
            if !z.complete {
                self.warn(format!(
                    "{}_{}: root scan found {} zeros, Sturm count {}",
                    z.which.as_str(),
                    z.index_n,
                    z.real_zero_count,
                    z.sturm_count
                ));
            }
        }
        self.check("parity_forced_zeros_missing", forced_missing as f64, 0.0);
        self.end();
        summary.insert("zeros".into(), zeros_json(&zeros));
        Ok(Analysis {
            summary: serde_json::Value::Object(summary),
            gram,
            zeros,
        })
    }
}

fn create(dir: &Path, name: &str, artifacts: &mut Vec<String>) -> Result<BufWriter<File>> {
    artifacts.push(name.to_string());
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn write_json(dir: &Path, name: &str, v: &serde_json::Value, artifacts: &mut Vec<String>) -> Result<()> {
    let mut f = create(dir, name, artifacts)?;
    serde_json::to_writer_pretty(&mut f, v)?;
    writeln!(f)?;
    f.flush()?;
    Ok(())
}

/// Write the requested artifacts and the run bundle.
pub fn write_artifacts(config: &RunConfig, data: &RunData, analysis: &Analysis) -> Result<Vec<String>> {
    let dir = &config.output_dir;
    fs::create_dir_all(dir)?;
    let mut arts = Vec::new();
    let emit = |e: Emit| config.emit.contains(&e);

    if emit(Emit::Coeffs) {
        let mut phi = create(dir, "phi_coeffs.csv", &mut arts)?;
        let mut psi = create(dir, "psi_coeffs.csv", &mut arts)?;
        writeln!(phi, "n,k,c_k")?;
        writeln!(psi, "n,k,q_k")?;
        for p in &data.pairs {
            for (k, c) in p.phi_coeffs().iter().enumerate() {
                writeln!(phi, "{},{k},{}", p.index_n, exact_string(c))?;
            }
            for (k, c) in p.psi_coeffs().iter().enumerate() {
                writeln!(psi, "{},{k},{}", p.index_n, exact_string(c))?;
            }
        }
        phi.flush()?;
        psi.flush()?;
        let pairs: Vec<_> = data.pairs.iter().map(SkewPolyPair::to_json).collect();
        write_json(dir, "pairs.json", &serde_json::Value::Array(pairs), &mut arts)?;
    }
    if emit(Emit::G) {
        let mut f = create(dir, "g.csv", &mut arts)?;
        writeln!(f, "n,g_n,method")?;
        for n in (0..=config.n_max).step_by(2) {
            if let Some(r) = &data.integral {
                writeln!(f, "{n},{},integral", exact_string(r.g_of(n)))?;
            }
            if let Some(l) = &data.ledger {
                writeln!(f, "{n},{},diffeq", exact_string(&l.g[n / 2]))?;
            }
        }
        f.flush()?;
    }
    if emit(Emit::R) {
        let mut f = create(dir, "R.csv", &mut arts)?;
        match &data.integral {
            Some(r) => r.write_bands_csv(&mut f)?,
            None => {
                writeln!(f, "n,m,R_nm")?;
                for band in &data.bands {
                    for (m, v) in &band.entries {
                        writeln!(f, "{},{m},{}", band.row_n, exact_string(v))?;
                    }
                }
            }
        }
        f.flush()?;
    }
    if emit(Emit::Gram) {
        write_json(dir, "gram.json", &analysis.gram.to_json(), &mut arts)?;
    }
    if emit(Emit::Zeros) {
        write_json(dir, "zeros.json", &zeros_json(&analysis.zeros), &mut arts)?;
        let mut f = create(dir, "zeros.csv", &mut arts)?;
        write_zeros_csv(&analysis.zeros, &mut f)?;
        f.flush()?;
    }
    if emit(Emit::Ledger) {
        if let Some(l) = &data.ledger {
            let mut f = create(dir, "ledger.csv", &mut arts)?;
            l.write_csv(&mut f)?;
            f.flush()?;
        }
    }
    if emit(Emit::Moments) {
        let mut f = create(dir, "moments.csv", &mut arts)?;
        data.moments.write_csv(&mut f)?;
        f.flush()?;
    }

    // the output location stays in the manifest so the bundle is relocatable
    let mut cfg_json = serde_json::to_value(config)?;
    if let Some(obj) = cfg_json.as_object_mut() {
        obj.remove("output_dir");
    }
    let bundle = serde_json::json!({
        "config": cfg_json,
        "weight": data.spec,
        "bootstrap": bootstrap_d2(&data.spec, &data.moments)?.to_json(),
        "R_integral": data.integral.as_ref().map(IntegralRun::bands_json),
        "ledger": data.ledger.as_ref().map(NormalizationLedger::to_json),
        "analysis": analysis.summary,
    });
    write_json(dir, "bundle.json", &bundle, &mut arts)?;
    Ok(arts)
}

/// Run everything and write artifacts. The manifest is written on every path
/// where the output directory can be created.
pub fn run(config: &RunConfig) -> RunOutcome {
    let start = Instant::now();
    let mut runner = Runner {
        config,
        manifest: Manifest {
            config: Some(config.clone()),
            precision_bits: serde_json::json!({
                "integral": config.method.integral().then_some(config.precision_bits),
                "diffeq": config.method.diffeq().then_some(config.diffeq_precision()),
            }),
            ..Manifest::default()
        },
        stage_start: start,
        stage: "config",
    };

    let result = config
        .validate()
        .and_then(|_| runner.compute())
        .and_then(|data| {
            let analysis = runner.analyse(&data)?;
            runner.begin("write");
            let arts = write_artifacts(config, &data, &analysis)?;
            runner.end();
            Ok(arts)
        });

    let mut m = runner.manifest;
    m.exit_code = match result {
        Ok(arts) => {
            m.artifacts = arts;
            match m.invariants.iter().find(|c| !c.passed) {
                Some(c) => {
                    m.failing_stage = Some(c.stage.clone());
                    m.error = Some(format!("invariant {} = {:e} exceeds {:e}", c.name, c.value, c.threshold));
                    EXIT_INVARIANT
                }
                None => EXIT_OK,
            }
        }
        Err(e) => {
            m.failing_stage = Some(runner.stage.to_string());
            m.error = Some(e.to_string());
            exit_code_for(&e)
        }
    };
    m.warning_count = m.warnings.len();
    m.wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
    m.artifacts.push("manifest.json".into());
    if m.write(&config.output_dir).is_err() && m.exit_code == EXIT_OK {
        m.exit_code = EXIT_INVARIANT;
    }
    RunOutcome {
        exit_code: m.exit_code,
        manifest: m,
    }
}
