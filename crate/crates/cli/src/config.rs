//! Run configurations read from and written next to outputs.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use wavediv::params::exponent;
use wavediv::{BesovParams, CoefficientField, WaveletSystem};

pub const SEED_ENV: &str = "WAVEDIV_SEED";

fn default_d() -> usize {
    1
}

fn default_system() -> String {
    "haar".into()
}

fn default_depth() -> u32 {
    3
}

fn default_grid() -> usize {
    8
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Saturating,
    Deterministic,
    Lineability,
    Point,
    Residual,
    Holder,
}

/// Input of `generate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateConfig {
    pub kind: Kind,
    pub s: f64,
    #[serde(with = "exponent")]
    pub p: f64,
    #[serde(with = "exponent")]
    pub q: f64,
    #[serde(default = "default_d")]
    pub d: usize,
    #[serde(rename = "Jmax")]
    pub jmax: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<u32>,
    #[serde(default = "default_system")]
    pub system: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generators: Option<u32>,
    #[serde(default = "default_depth")]
    pub max_depth: u32,
    /// Covering constant; the best one on the grid when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c0: Option<f64>,
    #[serde(default = "default_grid")]
    pub grid: usize,
}

impl GenerateConfig {
    pub fn params(&self) -> Result<BesovParams> {
        Ok(BesovParams::new(self.s, self.p, self.q, self.d)?)
    }

    pub fn system(&self) -> Result<WaveletSystem> {
        Ok(WaveletSystem::by_name(&self.system, self.d, self.generators.unwrap_or(1))?)
    }
}

fn default_trials() -> u64 {
    5
}

fn default_points() -> usize {
    200
}

fn default_j_min() -> u32 {
    4
}

/// Input of `experiment`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentFile {
    pub s: f64,
    #[serde(with = "exponent")]
    pub p: f64,
    #[serde(with = "exponent")]
    pub q: f64,
    #[serde(default = "default_d")]
    pub d: usize,
    #[serde(rename = "Jmax")]
    pub jmax: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default = "default_system")]
    pub system: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generators: Option<u32>,
    #[serde(default = "default_depth")]
    pub max_depth: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c0: Option<f64>,
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default = "default_j_min")]
    pub j_min: u32,
    #[serde(default)]
    pub tol_min: Option<f64>,
    #[serde(default)]
    pub tol_median: Option<f64>,
    #[serde(default)]
    pub tol_slope: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gammas: Option<Vec<f64>>,
    /// Field files `D_i`, relative to the config; the zero field when empty.
    #[serde(default)]
    pub bases: Vec<PathBuf>,
}

impl ExperimentFile {
    pub fn params(&self) -> Result<BesovParams> {
        Ok(BesovParams::new(self.s, self.p, self.q, self.d)?)
    }

    pub fn system(&self) -> Result<WaveletSystem> {
        Ok(WaveletSystem::by_name(&self.system, self.d, self.generators.unwrap_or(1))?)
    }
}

/// Flag, then config, then `WAVEDIV_SEED`, then 0.
pub fn resolve_seed(flag: Option<u64>, config: Option<u64>) -> Result<u64> {
    if let Some(s) = flag.or(config) {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .with_context(|| format!("{SEED_ENV}={v:?} is not an unsigned integer")),
        Err(_) => Ok(0),
    }
}

pub fn read_text(path: &Path) -> Result<String> {
    if path == Path::new("-") {
        let mut s = String::new();
        std::io::Read::read_to_string(&mut std::io::stdin(), &mut s)?;
        return Ok(s);
    }
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    serde_json::from_str(&read_text(path)?).with_context(|| format!("parsing {}", path.display()))
}

pub fn read_field(path: &Path) -> Result<CoefficientField> {
    CoefficientField::from_json_str(&read_text(path)?)
        .with_context(|| format!("reading field {}", path.display()))
}

/// Write `text` to `path` (`-` is stdout).
pub fn write_output(path: &Path, text: &str) -> Result<()> {
    if path == Path::new("-") {
        print!("{text}");
        return Ok(());
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// `<out>.config.json`, or nothing for stdout.
pub fn write_resolved<T: Serialize>(out: &Path, config: &T) -> Result<()> {
    if out == Path::new("-") {
        return Ok(());
    }
    let mut name = out.as_os_str().to_owned();
    name.push(".config.json");
    let text = serde_json::to_string_pretty(config)? + "\n";
    std::fs::write(PathBuf::from(name), text).context("writing resolved config")
}

/// Points file: one point per line, coordinates separated by `;` or `,`;
/// blank lines and `#` comments are skipped.
pub fn parse_points(text: &str, d: usize) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let x: Vec<f64> = line
            .split([';', ','])
            .map(|t| t.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .with_context(|| format!("line {}: bad coordinate", n + 1))?;
        if x.len() != d {
            bail!("line {}: expected {d} coordinates, got {}", n + 1, x.len());
        }
        out.push(x);
    }
    Ok(out)
}
