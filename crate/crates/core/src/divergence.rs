//! Pointwise behaviour of wavelet series: partial sums, per-scale term
//! maxima and finite-scale divergence exponents.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::field::CoefficientField;
use crate::output::fmt_f64;
use crate::wavelet::WaveletSystem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum FitMode {
    #[default]
    MaxRatio,
    RecordSlope,
}

impl FitMode {
    pub fn as_str(self) -> &'static str {
        match self {
            FitMode::MaxRatio => "max-ratio",
            FitMode::RecordSlope => "record-slope",
        }
    }
}

impl std::str::FromStr for FitMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max-ratio" => Ok(FitMode::MaxRatio),
            "record-slope" => Ok(FitMode::RecordSlope),
            other => Err(invalid(format!("unknown fit mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSettings {
    pub j_min: u32,
    /// Term cutoff `|2^j x - k| <= R`; `None` uses the system default.
    pub window_radius: Option<f64>,
    pub mode: FitMode,
}

impl Default for EstimatorSettings {
    fn default() -> Self {
        Self {
            j_min: 4,
            window_radius: None,
            mode: FitMode::MaxRatio,
        }
    }
}

impl EstimatorSettings {
    fn radius(&self, system: &WaveletSystem) -> Result<f64> {
        if self.j_min < 1 {
            return Err(invalid("j_min must be at least 1"));
        }
        let r = self.window_radius.unwrap_or_else(|| system.default_window());
        if let Some(sr) = system.support_radius() {
            if r < sr {
                return Err(invalid(format!(
                    "window radius {r} is below the support radius {sr}"
                )));
            }
        }
        Ok(r)
    }
}

/// Terms `c ψ(2^j x - k)` of one scale at one point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ScaleTerms {
    /// `max |c ψ(2^j x - k)|`.
    pub max: f64,
    pub sum: f64,
    /// Number of nonzero terms.
    pub count: usize,
}

fn check_compatible(field: &CoefficientField, system: &WaveletSystem, x: &[f64]) -> Result<()> {
    if field.d() != system.dim() || x.len() != system.dim() {
        return Err(Error::DimensionMismatch {
            expected: system.dim(),
            found: if field.d() != system.dim() { field.d() } else { x.len() },
        });
    }
    if field.max_generator() > system.generators() {
        return Err(Error::GeneratorOutOfRange {
            index: field.max_generator(),
            count: system.generators(),
        });
    }
    Ok(())
}

fn terms_at(field: &CoefficientField, system: &WaveletSystem, x: &[f64], j: u32, radius: f64) -> ScaleTerms {
    let d = x.len();
    let scale = (j as f64).exp2();
    let ranges: Vec<(i64, i64)> = x
        .iter()
        .map(|&xr| {
            let r = system.window_1d(xr, j, radius);
            (*r.start(), *r.end())
        })
        .collect();
    let mut out = ScaleTerms::default();
    if ranges.iter().any(|(lo, hi)| lo > hi) {
        return out;
    }
    let mut k: Vec<i64> = ranges.iter().map(|r| r.0).collect();
    let mut y = vec![0.0; d];
    let mut cube = crate::dyadic::DyadicCube::new(j, k.clone());
    loop {
        cube.k.copy_from_slice(&k);
        for i in 1..=system.generators() {
            let c = field.get_at(i, &cube);
            if c == 0.0 {
                continue;
            }
            for r in 0..d {
                y[r] = x[r] * scale - k[r] as f64;
            }
            let t = c * system.eval(i, &y);
            if t != 0.0 {
                out.count += 1;
                out.max = out.max.max(t.abs());
                out.sum += t;
            }
        }
        // odometer over the window
        let mut r = d;
        loop {
            if r == 0 {
                return out;
            }
            r -= 1;
            if k[r] < ranges[r].1 {
                k[r] += 1;
                break;
            }
            k[r] = ranges[r].0;
        }
    }
}

/// Max, sum and count of the scale-`j` terms at `x`.
pub fn scale_terms(
    field: &CoefficientField,
    system: &WaveletSystem,
    x: &[f64],
    j: u32,
    settings: &EstimatorSettings,
) -> Result<ScaleTerms> {
    check_compatible(field, system, x)?;
    Ok(terms_at(field, system, x, j, settings.radius(system)?))
}

/// `M_j(x)`.
pub fn scale_term_max(
    field: &CoefficientField,
    system: &WaveletSystem,
    x: &[f64],
    j: u32,
) -> Result<f64> {
    Ok(scale_terms(field, system, x, j, &EstimatorSettings::default())?.max)
}

/// `P_J(x) = Σ_{j <= J} Σ_{i,k} c ψ(2^j x - k)`.
pub fn partial_sum(field: &CoefficientField, system: &WaveletSystem, x: &[f64], big_j: u32) -> Result<f64> {
    check_compatible(field, system, x)?;
    if big_j > field.jmax {
        return Err(invalid(format!("J = {big_j} exceeds Jmax = {}", field.jmax)));
    }
    let radius = EstimatorSettings::default().radius(system)?;
    Ok((0..=big_j).map(|j| terms_at(field, system, x, j, radius).sum).sum())
}

/// Finite-scale data at one point, scales `0..=Jmax`.
#[derive(Debug, Clone, PartialEq)]
pub struct DivergenceProfile {
    pub x: Vec<f64>,
    pub scale_max: Vec<f64>,
    pub scale_sum: Vec<f64>,
    pub scale_count: Vec<usize>,
    pub partial_sums: Vec<f64>,
    /// `-inf` when every `M_j`, `j >= j_min`, vanishes.
    pub delta_hat: f64,
    pub mode: FitMode,
    pub j_min: u32,
    /// Scales entering the fit.
    pub scales_used: Vec<u32>,
}

impl DivergenceProfile {
    pub fn estimate(&self, mode: FitMode) -> f64 {
        estimate_exponent(&self.scale_max, self.j_min, mode).0
    }
}

/// `max_{j >= j_min, M_j > 0} log2(M_j) / j`.
fn max_ratio(m: &[f64], j_min: u32) -> (f64, Vec<u32>) {
    let mut best = f64::NEG_INFINITY;
    let mut arg = Vec::new();
    for (j, &mj) in m.iter().enumerate().skip(j_min as usize) {
        if mj > 0.0 {
            let r = mj.log2() / j as f64;
            if r > best {
                best = r;
                arg = vec![j as u32];
            }
        }
    }
    (best, arg)
}

fn ols_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Some(sxy / sxx)
}

/// Scales `j` with `log2 M_j >= log2 M_{j'} + δ (j - j')` for every
/// earlier positive scale `j'`.
fn records(pos: &[(f64, f64)], delta: f64) -> Vec<usize> {
    (0..pos.len())
        .filter(|&n| {
            let (j, l) = pos[n];
            pos[..n]
                .iter()
                .all(|(jp, lp)| l >= lp + delta * (j - jp) - 1e-12)
        })
        .collect()
}

fn estimate_exponent(m: &[f64], j_min: u32, mode: FitMode) -> (f64, Vec<u32>) {
    let (ratio, arg) = max_ratio(m, j_min);
    if ratio == f64::NEG_INFINITY || mode == FitMode::MaxRatio {
        return (ratio, arg);
    }
    let pos: Vec<(f64, f64)> = m
        .iter()
        .enumerate()
        .skip(j_min as usize)
        .filter(|(_, &v)| v > 0.0)
        .map(|(j, &v)| (j as f64, v.log2()))
        .collect();
    let fit = |idx: &[usize]| {
        let xs: Vec<f64> = idx.iter().map(|&n| pos[n].0).collect();
        let ys: Vec<f64> = idx.iter().map(|&n| pos[n].1).collect();
        ols_slope(&xs, &ys)
    };
    let all: Vec<usize> = (0..pos.len()).collect();
    let Some(mut delta) = fit(&all) else {
        return (ratio, arg);
    };
    let mut used = all;
    // iterate to a fixed point; the record set shrinks or stabilizes
    for _ in 0..50 {
        let rec = records(&pos, delta);
        let Some(next) = fit(&rec) else { break };
        let done = rec == used && (next - delta).abs() < 1e-12;
        delta = next;
        used = rec;
        if done {
            break;
        }
    }
    (delta, used.iter().map(|&n| pos[n].0 as u32).collect())
}

/// Profile of the field at `x`.
pub fn profile(
    field: &CoefficientField,
    system: &WaveletSystem,
    x: &[f64],
    settings: &EstimatorSettings,
) -> Result<DivergenceProfile> {
    check_compatible(field, system, x)?;
    let radius = settings.radius(system)?;
    let terms: Vec<ScaleTerms> = (0..=field.jmax)
        .map(|j| terms_at(field, system, x, j, radius))
        .collect();
    let mut acc = 0.0;
    let partial_sums = terms
        .iter()
        .map(|t| {
            acc += t.sum;
            acc
        })
        .collect();
    let scale_max: Vec<f64> = terms.iter().map(|t| t.max).collect();
    let (delta_hat, scales_used) = estimate_exponent(&scale_max, settings.j_min, settings.mode);
    Ok(DivergenceProfile {
        x: x.to_vec(),
        scale_sum: terms.iter().map(|t| t.sum).collect(),
        scale_count: terms.iter().map(|t| t.count).collect(),
        scale_max,
        partial_sums,
        delta_hat,
        mode: settings.mode,
        j_min: settings.j_min,
        scales_used,
    })
}

/// `δ̂(x)`. Requires `Jmax >= j_min + 4`.
pub fn divergence_exponent(
    field: &CoefficientField,
    system: &WaveletSystem,
    x: &[f64],
    settings: &EstimatorSettings,
) -> Result<f64> {
    if field.jmax < settings.j_min + 4 {
        return Err(invalid(format!(
            "Jmax = {} is below j_min + 4 = {}",
            field.jmax,
            settings.j_min + 4
        )));
    }
    Ok(profile(field, system, x, settings)?.delta_hat)
}

/// Profiles at many points, in input order.
pub fn profiles(
    field: &CoefficientField,
    system: &WaveletSystem,
    points: &[Vec<f64>],
    settings: &EstimatorSettings,
) -> Result<Vec<DivergenceProfile>> {
    if field.jmax < settings.j_min + 4 {
        return Err(invalid(format!(
            "Jmax = {} is below j_min + 4 = {}",
            field.jmax,
            settings.j_min + 4
        )));
    }
    points
        .par_iter()
        .map(|x| profile(field, system, x, settings))
        .collect()
}

/// Outcome of a convergence check at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    /// The constant of the premise `|c ψ(x)| <= C1 2^{γ j}`; fitted as the
    /// smallest valid one when none is supplied.
    pub c1: f64,
    /// First scale where a supplied `C1` fails.
    pub violated_at: Option<u32>,
    /// `|P_Jmax - P_J|`, `J = 0..=Jmax`.
    pub tails: Vec<f64>,
    /// `Σ_{J < j <= Jmax} n_j C1 2^{γ j}` with `n_j` the number of terms.
    pub bounds: Vec<f64>,
    /// Least-squares slope of `log2` of the positive tails.
    pub fitted_rate: Option<f64>,
}

impl RateReport {
    pub fn hypothesis_violated(&self) -> bool {
        self.violated_at.is_some()
    }

    /// Premise holds and every tail sits under its geometric bound.
    pub fn converges(&self) -> bool {
        !self.hypothesis_violated()
            && self
                .tails
                .iter()
                .zip(&self.bounds)
                .all(|(t, b)| *t <= b * (1.0 + 1e-12) + 1e-300)
    }
}

pub fn convergence_rate_check(
    field: &CoefficientField,
    system: &WaveletSystem,
    x: &[f64],
    gamma: f64,
    c1: Option<f64>,
) -> Result<RateReport> {
    if !(gamma < 0.0) {
        return Err(invalid(format!("convergence needs γ < 0, got {gamma}")));
    }
    let settings = EstimatorSettings {
        j_min: 1,
        ..Default::default()
    };
    let p = profile(field, system, x, &settings)?;
    let ratio = |j: usize| p.scale_max[j] * (-gamma * j as f64).exp2();
    let fitted = (0..p.scale_max.len()).map(ratio).fold(0.0, f64::max);
    let (c1, violated_at) = match c1 {
        Some(c) => (
            c,
            (0..p.scale_max.len())
                .find(|&j| ratio(j) > c * (1.0 + 1e-12))
                .map(|j| j as u32),
        ),
        None => (fitted, None),
    };
    let top = *p.partial_sums.last().expect("at least scale 0");
    let tails: Vec<f64> = p.partial_sums.iter().map(|s| (top - s).abs()).collect();
    let n = tails.len();
    let mut bounds = vec![0.0; n];
    for big_j in (0..n.saturating_sub(1)).rev() {
        let j = big_j + 1;
        bounds[big_j] = bounds[j] + p.scale_count[j] as f64 * c1 * (gamma * j as f64).exp2();
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = tails
        .iter()
        .enumerate()
        .filter(|(_, t)| **t > 0.0)
        .map(|(j, t)| (j as f64, t.log2()))
        .unzip();
    Ok(RateReport {
        c1,
        violated_at,
        tails,
        bounds,
        fitted_rate: ols_slope(&xs, &ys),
    })
}

/// Outcome of the partial-sum to single-term transfer at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferReport {
    /// Scales `j >= j_min` with `|P_j(x)| >= 2^{γ j}`.
    pub premise_scales: Vec<u32>,
    /// For each premise scale `j`, a scale `j' <= j` whose terms carry at
    /// least a `1/(j+1)` share of `|P_j|`: `n_{j'} M_{j'} (j+1) >= |P_j|`.
    pub witnesses: Vec<(u32, u32)>,
    /// `max_{j >= j_min} log2(M_j)/j`.
    pub term_rate: f64,
}

impl TransferReport {
    /// Every premise scale has its witness (vacuous without premise).
    pub fn holds(&self) -> bool {
        self.witnesses.len() == self.premise_scales.len()
    }

    /// Whether a divergence rate `δ` is witnessed by single terms; always
    /// true without premise.
    pub fn witnesses_rate(&self, delta: f64) -> bool {
        self.premise_scales.is_empty() || self.term_rate >= delta
    }
}

pub fn rate_transfer_check(
    field: &CoefficientField,
    system: &WaveletSystem,
    x: &[f64],
    gamma: f64,
    settings: &EstimatorSettings,
) -> Result<TransferReport> {
    if !(gamma > 0.0) {
        return Err(invalid(format!("rate transfer needs γ > 0, got {gamma}")));
    }
    let p = profile(field, system, x, settings)?;
    let premise_scales: Vec<u32> = (settings.j_min..=field.jmax)
        .filter(|&j| p.partial_sums[j as usize].abs() >= (gamma * j as f64).exp2())
        .collect();
    let witnesses = premise_scales
        .iter()
        .filter_map(|&j| {
            let target = p.partial_sums[j as usize].abs();
            (0..=j)
                .find(|&jp| {
                    let share = p.scale_count[jp as usize] as f64 * p.scale_max[jp as usize];
                    share * (j as f64 + 1.0) >= target * (1.0 - 1e-12)
                })
                .map(|jp| (j, jp))
        })
        .collect();
    Ok(TransferReport {
        premise_scales,
        witnesses,
        term_rate: max_ratio(&p.scale_max, settings.j_min).0,
    })
}

/// Cell centres of the `2^{nd}` grid of `[0,1)^d`: `(t + 1/2) 2^{-n}`.
pub fn grid_points(d: usize, n: u32) -> Vec<Vec<f64>> {
    let side = 1usize << n;
    let h = (-(n as f64)).exp2();
    (0..side.pow(d as u32))
        .map(|mut t| {
            let mut x = vec![0.0; d];
            for slot in x.iter_mut().rev() {
                *slot = ((t % side) as f64 + 0.5) * h;
                t /= side;
            }
            x
        })
        .collect()
}

fn join_x(x: &[f64]) -> String {
    x.iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>().join(";")
}

/// Long-format profile CSV: `x,j,M_j,P_j` rows per point, then a summary
/// row `x,delta_hat,<value>,<mode>`.
pub fn write_profiles_csv<W: Write>(mut w: W, profiles: &[DivergenceProfile]) -> Result<()> {
    writeln!(w, "x,j,M_j,P_j")?;
    for p in profiles {
        let x = join_x(&p.x);
        for (j, (m, s)) in p.scale_max.iter().zip(&p.partial_sums).enumerate() {
            writeln!(w, "{x},{j},{},{}", fmt_f64(*m), fmt_f64(*s))?;
        }
        writeln!(w, "{x},delta_hat,{},{}", fmt_f64(p.delta_hat), p.mode.as_str())?;
    }
    Ok(())
}

/// One row per point: `x,delta_hat,mode`.
pub fn write_summary_csv<W: Write>(mut w: W, profiles: &[DivergenceProfile]) -> Result<()> {
    writeln!(w, "x,delta_hat,mode")?;
    for p in profiles {
        writeln!(w, "{},{},{}", join_x(&p.x), fmt_f64(p.delta_hat), p.mode.as_str())?;
    }
    Ok(())
}
