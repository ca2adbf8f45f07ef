//! `wavediv`: generate coefficient fields, analyze their pointwise
//! divergence and estimate divergence spectra.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 negative
//! mathematical result (no dyadic covering).

mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use wavediv::besov::{besov_norm, default_weights, scale_profile, weighted_norm};
use wavediv::covering::{best_c0, find_dyadic_covering, CoveringSearch, DyadicCovering};
use wavediv::divergence::{grid_points, profiles, write_profiles_csv, write_summary_csv};
use wavediv::generators::{
    canonical_rational_field, deterministic_e, holder_residual_field, lineability_combination,
    point_divergent, residual_witness, saturating_random, SaturatingConfig,
};
use wavediv::params::parse_exponent;
use wavediv::spectrum::{
    coefficient_count_spectrum, default_gamma_grid, estimate_spectrum, genericity_experiment,
    write_spectrum_csv, ExperimentConfig,
};
use wavediv::{BesovParams, CoefficientField, EstimatorSettings, FitMode, WaveletSystem};

use config::{
    parse_points, read_field, read_json, read_text, resolve_seed, write_output, write_resolved,
    ExperimentFile, GenerateConfig, Kind,
};

#[derive(Parser)]
#[command(name = "wavediv", version, about = "Divergence of wavelet series in Besov sequence spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Search for a dyadic covering of a wavelet system.
    CheckCovering(CoveringArgs),
    /// Generate a coefficient field from a JSON config.
    Generate(GenerateArgs),
    /// Per-point divergence profiles of a field.
    Analyze(AnalyzeArgs),
    /// Box-counting and coefficient-counting spectra of a field.
    Spectrum(SpectrumArgs),
    /// Monte Carlo genericity experiment.
    Experiment(ExperimentArgs),
    /// Besov norm and compactness functional of a field.
    Norm(NormArgs),
}

#[derive(Args, Clone)]
struct SystemArgs {
    /// haar, schauder, indicator, db2, db3 or ricker.
    #[arg(long, default_value = "haar")]
    system: String,
    #[arg(long, default_value_t = 1)]
    d: usize,
    /// Generator count (indicator systems only).
    #[arg(long, default_value_t = 1)]
    generators: u32,
}

impl SystemArgs {
    fn build(&self) -> Result<WaveletSystem> {
        Ok(WaveletSystem::by_name(&self.system, self.d, self.generators)?)
    }
}

#[derive(Args)]
struct CoveringArgs {
    #[command(flatten)]
    system: SystemArgs,
    #[arg(long, default_value_t = 3)]
    max_depth: u32,
    /// Lower bound to certify; the best one on the grid when omitted.
    #[arg(long)]
    c0: Option<f64>,
    /// Grid points per axis in each deepest cube.
    #[arg(long, default_value_t = 8)]
    grid: usize,
    #[arg(long, short, default_value = "-")]
    out: PathBuf,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, short)]
    config: PathBuf,
    #[arg(long, short, default_value = "-")]
    out: PathBuf,
    /// Overrides the config seed and the WAVEDIV_SEED default.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Clone)]
struct EstimatorArgs {
    #[arg(long, default_value_t = 4)]
    j_min: u32,
    /// max-ratio or record-slope.
    #[arg(long, default_value = "max-ratio")]
    mode: String,
    /// Term window radius; the system default when omitted.
    #[arg(long)]
    window: Option<f64>,
}

impl EstimatorArgs {
    fn settings(&self) -> Result<EstimatorSettings> {
        Ok(EstimatorSettings {
            j_min: self.j_min,
            window_radius: self.window,
            mode: self.mode.parse::<FitMode>()?,
        })
    }
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long, short)]
    field: PathBuf,
    #[command(flatten)]
    system: SystemArgs,
    /// Points file, one point per line.
    #[arg(long, conflicts_with = "grid")]
    points: Option<PathBuf>,
    /// Use the 2^{n d} cell-centre grid.
    #[arg(long)]
    grid: Option<u32>,
    #[command(flatten)]
    estimator: EstimatorArgs,
    /// Profiles CSV.
    #[arg(long, short, default_value = "-")]
    out: PathBuf,
    /// One row per point.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Args)]
struct SpectrumArgs {
    #[arg(long, short)]
    field: PathBuf,
    #[command(flatten)]
    system: SystemArgs,
    #[arg(long, default_value_t = 10)]
    grid_bits: u32,
    #[arg(long, value_delimiter = ',', default_values_t = [2u32, 4, 6, 8])]
    box_scales: Vec<u32>,
    /// γ grid; 9 points over [-s, -s + d/p] when omitted.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    gammas: Option<Vec<f64>>,
    #[command(flatten)]
    estimator: EstimatorArgs,
    #[arg(long, short, default_value = "-")]
    out: PathBuf,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long, short)]
    config: PathBuf,
    #[arg(long, short, default_value = "-")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<u64>,
}

#[derive(Args)]
struct NormArgs {
    #[arg(long, short)]
    field: PathBuf,
    /// Measure in another space than the one recorded in the file.
    #[arg(long)]
    s: Option<f64>,
    #[arg(long)]
    p: Option<String>,
    #[arg(long)]
    q: Option<String>,
    #[arg(long, short, default_value = "-")]
    out: PathBuf,
}

/// Failure carrying its exit code.
#[derive(Debug)]
struct Negative(String);

impl std::fmt::Display for Negative {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Negative {}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::CheckCovering(a) => check_covering(a),
        Command::Generate(a) => generate(a),
        Command::Analyze(a) => analyze(a),
        Command::Spectrum(a) => spectrum(a),
        Command::Experiment(a) => experiment(a),
        Command::Norm(a) => norm(a),
    };
    match result {
        Ok(code) => code,
        Err(e) if e.is::<Negative>() => {
            eprintln!("wavediv: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("wavediv: {e:#}");
            ExitCode::from(1)
        }
    }
}

enum Cover {
    Found(DyadicCovering),
    NotFound(Vec<f64>),
}

fn search_covering(system: &WaveletSystem, max_depth: u32, c0: Option<f64>, grid: usize) -> Result<Cover> {
    let outcome = match c0 {
        Some(c0) => find_dyadic_covering(system, max_depth, c0, grid)?,
        None => match best_c0(system, max_depth, grid)? {
            Some(c) => CoveringSearch::Found(c),
            // nothing reaches even a vanishing level: report where
            None => find_dyadic_covering(system, max_depth, system.sup_bound() * 1e-12, grid)?,
        },
    };
    Ok(match outcome {
        CoveringSearch::Found(c) => Cover::Found(c),
        CoveringSearch::NotFound { witness } => Cover::NotFound(witness),
    })
}

fn require_covering(system: &WaveletSystem, max_depth: u32, c0: Option<f64>, grid: usize) -> Result<DyadicCovering> {
    match search_covering(system, max_depth, c0, grid)? {
        Cover::Found(c) => Ok(c),
        Cover::NotFound(w) => Err(Negative(format!(
            "{} has no dyadic covering of depth <= {max_depth} (witness {w:?})",
            system.name()
        ))
        .into()),
    }
}

fn check_covering(a: CoveringArgs) -> Result<ExitCode> {
    let system = a.system.build()?;
    let resolved = json!({
        "system": a.system.system, "d": a.system.d, "generators": a.system.generators,
        "max_depth": a.max_depth, "c0": a.c0, "grid": a.grid,
    });
    write_resolved(&a.out, &resolved)?;
    match search_covering(&system, a.max_depth, a.c0, a.grid)? {
        Cover::Found(c) => {
            write_output(&a.out, &c.to_json_string())?;
            Ok(ExitCode::SUCCESS)
        }
        Cover::NotFound(witness) => {
            let report = json!({
                "status": "not-found",
                "system": system.name(),
                "max_depth": a.max_depth,
                "c0": a.c0,
                "witness": witness,
            });
            write_output(&a.out, &(serde_json::to_string_pretty(&report)? + "\n"))?;
            eprintln!("wavediv: no dyadic covering found; witness {witness:?}");
            Ok(ExitCode::from(2))
        }
    }
}

fn build_field(cfg: &GenerateConfig) -> Result<CoefficientField> {
    let params = cfg.params()?;
    let system = cfg.system()?;
    let n_gen = system.generators();
    let seed = cfg.seed.unwrap_or(0);
    let covering = || require_covering(&system, cfg.max_depth, cfg.c0, cfg.grid);
    let field = match cfg.kind {
        Kind::Deterministic => deterministic_e(&params, cfg.jmax, n_gen)?,
        Kind::Saturating => saturating_random(&SaturatingConfig {
            params,
            covering: covering()?,
            jmax: cfg.jmax,
            seed,
            generators: n_gen,
        })?,
        Kind::Lineability => {
            let (Some(a), Some(k)) = (&cfg.a, &cfg.k) else {
                bail!("kind=lineability needs \"a\" and \"k\"");
            };
            lineability_combination(&params, a, k, cfg.jmax, n_gen)?
        }
        Kind::Point => {
            let x0 = cfg.x0.as_ref().context("kind=point needs \"x0\"")?;
            point_divergent(&params, &system, &covering()?, x0, cfg.jmax)?
        }
        Kind::Residual => {
            let n = cfg.n.context("kind=residual needs \"n\"")?;
            let depth = covering()?.depth;
            let f_n = canonical_rational_field(&params, n, depth, n_gen, seed)?;
            let w = residual_witness(&params, depth, &f_n, n, cfg.jmax, n_gen)?;
            let mut center = w.center;
            center.meta.insert("radius".into(), json!(w.radius));
            center.meta.insert("seed".into(), json!(seed));
            center
        }
        Kind::Holder => {
            let n = cfg.n.context("kind=holder needs \"n\"")?;
            if params.p.is_finite() || params.q.is_finite() {
                bail!("kind=holder needs p = q = inf");
            }
            let source = saturating_random(&SaturatingConfig {
                params,
                covering: covering()?,
                jmax: cfg.jmax,
                seed,
                generators: n_gen,
            })?;
            let mut out = holder_residual_field(params.s, n, cfg.jmax, &source, n_gen)?;
            out.meta.insert("seed".into(), json!(seed));
            out
        }
    };
    Ok(field)
}

fn generate(a: GenerateArgs) -> Result<ExitCode> {
    let mut cfg: GenerateConfig = read_json(&a.config)?;
    cfg.seed = Some(resolve_seed(a.seed, cfg.seed)?);
    let field = build_field(&cfg)?;
    write_output(&a.out, &field.to_json_string())?;
    write_resolved(&a.out, &cfg)?;
    Ok(ExitCode::SUCCESS)
}

fn load_for(field: &Path, system: &SystemArgs) -> Result<(CoefficientField, WaveletSystem)> {
    let f = read_field(field)?;
    let sys = system.build()?;
    if f.d() != sys.dim() {
        bail!("field has d = {} but the system has d = {}", f.d(), sys.dim());
    }
    Ok((f, sys))
}

#[derive(Serialize)]
struct AnalyzeResolved<'a> {
    field: &'a Path,
    system: &'a str,
    d: usize,
    points: Option<&'a Path>,
    grid: Option<u32>,
    j_min: u32,
    mode: &'a str,
    window: Option<f64>,
}

fn analyze(a: AnalyzeArgs) -> Result<ExitCode> {
    let (field, system) = load_for(&a.field, &a.system)?;
    let settings = a.estimator.settings()?;
    let points = match (&a.points, a.grid) {
        (Some(p), _) => parse_points(&read_text(p)?, field.d())?,
        (None, Some(n)) => grid_points(field.d(), n),
        (None, None) => bail!("give --points or --grid"),
    };
    let ps = profiles(&field, &system, &points, &settings)?;
    let mut buf = Vec::new();
    write_profiles_csv(&mut buf, &ps)?;
    write_output(&a.out, std::str::from_utf8(&buf)?)?;
    if let Some(path) = &a.summary {
        let mut buf = Vec::new();
        write_summary_csv(&mut buf, &ps)?;
        write_output(path, std::str::from_utf8(&buf)?)?;
    }
    write_resolved(
        &a.out,
        &AnalyzeResolved {
            field: &a.field,
            system: &a.system.system,
            d: a.system.d,
            points: a.points.as_deref(),
            grid: a.grid,
            j_min: settings.j_min,
            mode: settings.mode.as_str(),
            window: settings.window_radius,
        },
    )?;
    Ok(ExitCode::SUCCESS)
}

fn spectrum(a: SpectrumArgs) -> Result<ExitCode> {
    let (field, system) = load_for(&a.field, &a.system)?;
    let settings = a.estimator.settings()?;
    let gammas = a.gammas.clone().unwrap_or_else(|| default_gamma_grid(&field.params));
    let boxes = estimate_spectrum(&field, &system, &settings, a.grid_bits, &gammas, &a.box_scales)?;
    let counts = coefficient_count_spectrum(&field, &gammas);
    let mut buf = Vec::new();
    write_spectrum_csv(&mut buf, &field.params, &gammas, Some(&boxes), &counts)?;
    write_output(&a.out, std::str::from_utf8(&buf)?)?;
    write_resolved(
        &a.out,
        &json!({
            "field": a.field, "system": a.system.system, "d": a.system.d,
            "grid_bits": a.grid_bits, "box_scales": a.box_scales, "gammas": gammas,
            "j_min": settings.j_min, "mode": settings.mode.as_str(), "window": settings.window_radius,
        }),
    )?;
    Ok(ExitCode::SUCCESS)
}

fn experiment(a: ExperimentArgs) -> Result<ExitCode> {
    let mut cfg: ExperimentFile = read_json(&a.config)?;
    cfg.seed = Some(resolve_seed(a.seed, cfg.seed)?);
    if let Some(t) = a.trials {
        cfg.trials = t;
    }
    if cfg.trials == 0 {
        bail!("trials must be at least 1");
    }
    let params = cfg.params()?;
    let system = cfg.system()?;
    let covering = require_covering(&system, cfg.max_depth, cfg.c0, cfg.grid)?;
    let base_dir = a.config.parent().unwrap_or(Path::new("."));
    let bases = if cfg.bases.is_empty() {
        vec![CoefficientField::new(params, cfg.jmax)]
    } else {
        cfg.bases
            .iter()
            .map(|p| read_field(&base_dir.join(p)))
            .collect::<Result<Vec<_>>>()?
    };
    let gammas = cfg.gammas.clone().unwrap_or_else(|| vec![-params.s]);
    let exp = ExperimentConfig {
        saturating: SaturatingConfig {
            params,
            covering,
            jmax: cfg.jmax,
            seed: cfg.seed.unwrap_or(0),
            generators: system.generators(),
        },
        system,
        settings: EstimatorSettings {
            j_min: cfg.j_min,
            ..Default::default()
        },
        points: cfg.points,
        tol_min: cfg.tol_min.unwrap_or(0.3),
        tol_median: cfg.tol_median.unwrap_or(0.2),
        tol_slope: cfg.tol_slope.unwrap_or(0.25),
        gammas,
    };
    cfg.tol_min = Some(exp.tol_min);
    cfg.tol_median = Some(exp.tol_median);
    cfg.tol_slope = Some(exp.tol_slope);
    cfg.gammas = Some(exp.gammas.clone());
    let report = genericity_experiment(&bases, &exp, cfg.trials)?;
    for t in &report.trials {
        eprintln!("trial {} seed {}", t.trial, t.seed);
    }
    let text = serde_json::to_string_pretty(&json!({ "config": cfg, "report": report }))? + "\n";
    write_output(&a.out, &text)?;
    write_resolved(&a.out, &cfg)?;
    Ok(ExitCode::SUCCESS)
}

fn norm(a: NormArgs) -> Result<ExitCode> {
    let field = read_field(&a.field)?;
    let base = field.params;
    let params = BesovParams::new(
        a.s.unwrap_or(base.s),
        a.p.as_deref().map(parse_exponent).transpose()?.unwrap_or(base.p),
        a.q.as_deref().map(parse_exponent).transpose()?.unwrap_or(base.q),
        base.d,
    )?;
    let eps = scale_profile(&field, &params).eps;
    let weighted = weighted_norm(&field, &params, &default_weights(field.jmax))?;
    let sup = eps.iter().copied().fold(0.0, f64::max);
    let report = json!({
        "s": params.s,
        "p": if params.p.is_infinite() { json!("inf") } else { json!(params.p) },
        "q": if params.q.is_infinite() { json!("inf") } else { json!(params.q) },
        "besov_norm": besov_norm(&field, &params),
        "sup_eps": sup,
        "eps": eps,
        "weighted": {
            "value": weighted.value,
            "support_inside": weighted.support_inside,
            "member": weighted.member(),
        },
    });
    write_output(&a.out, &(serde_json::to_string_pretty(&report)? + "\n"))?;
    Ok(ExitCode::SUCCESS)
}
