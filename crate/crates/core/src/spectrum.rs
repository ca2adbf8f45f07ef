//! Divergence spectra: closed form, box counting on a point grid,
//! coefficient counting, seeded approximable points and Monte Carlo
//! genericity runs.

use std::collections::HashSet;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::besov::count_large;
use crate::divergence::{grid_points, profiles, EstimatorSettings};
use crate::error::{invalid, Result};
use crate::field::CoefficientField;
use crate::generators::{saturating_random, SaturatingConfig};
use crate::output::{fmt_f64, fmt_opt};
use crate::params::BesovParams;
use crate::rng::{trial_seed, CounterRng};
use crate::wavelet::WaveletSystem;

/// `d - sp - γp` on `[-s, -s + d/p]`, `None` outside.
pub fn theoretical_spectrum(params: &BesovParams, gamma: f64) -> Option<f64> {
    let lo = -params.s;
    let hi = -params.s + params.d_over_p();
    let tol = 1e-12;
    if gamma < lo - tol || gamma > hi + tol {
        return None;
    }
    if params.p.is_infinite() {
        return Some(params.d as f64);
    }
    let v = params.d as f64 - params.p * (params.s + gamma);
    Some(v.clamp(0.0, params.d as f64))
}

/// Default γ grid: 9 evenly spaced values over `[-s, -s + d/p]`.
pub fn default_gamma_grid(params: &BesovParams) -> Vec<f64> {
    let lo = -params.s;
    let w = params.d_over_p();
    (0..9).map(|t| lo + w * t as f64 / 8.0).collect()
}

/// Points `x = k / 2^{⌊j/α⌋} + u 2^{-j}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlphaSeed {
    pub alpha: f64,
    pub points: Vec<Vec<f64>>,
    /// Generating `(j, k)` of each point.
    pub sources: Vec<(u32, Vec<i64>)>,
    pub gamma_target: f64,
}

/// `⌊j/α⌋`.
pub fn coarse_scale(j: u32, alpha: f64) -> u32 {
    (j as f64 / alpha).floor() as u32
}

/// Whether `0 <= x - k/2^{⌊j/α⌋} < 2^{-j}` in every coordinate.
pub fn seed_inequality_holds(x: &[f64], j: u32, k: &[i64], alpha: f64) -> bool {
    let c = coarse_scale(j, alpha);
    let h = (-(j as f64)).exp2();
    x.iter().zip(k).all(|(&xr, &kr)| {
        let off = xr - kr as f64 * (-(c as f64)).exp2();
        (0.0..h).contains(&off)
    })
}

pub fn alpha_seeds(
    params: &BesovParams,
    alpha: f64,
    scales: &[u32],
    count: usize,
    seed: u64,
) -> Result<AlphaSeed> {
    if !(alpha >= 1.0) {
        return Err(invalid(format!("alpha must be at least 1, got {alpha}")));
    }
    if scales.is_empty() {
        return Err(invalid("at least one scale is required"));
    }
    let root = CounterRng::new(seed).key(alpha.to_bits());
    let mut points = Vec::with_capacity(count);
    let mut sources = Vec::with_capacity(count);
    for n in 0..count {
        let j = scales[n % scales.len()];
        let c = coarse_scale(j, alpha);
        let rng = root.key(n as u64);
        let k: Vec<i64> = (0..params.d)
            .map(|r| rng.below(r as u64, 1u64 << c) as i64)
            .collect();
        // redraw the offset in the (rounding-only) case it lands on 2^-j
        let mut counter = params.d as u64;
        let x = loop {
            let x: Vec<f64> = k
                .iter()
                .enumerate()
                .map(|(r, &kr)| {
                    let u = rng.uniform(counter + r as u64);
                    kr as f64 * (-(c as f64)).exp2() + u * (-(j as f64)).exp2()
                })
                .collect();
            if seed_inequality_holds(&x, j, &k, alpha) {
                break x;
            }
            counter += params.d as u64;
        };
        points.push(x);
        sources.push((j, k));
    }
    Ok(AlphaSeed {
        alpha,
        points,
        sources,
        gamma_target: params.gamma_alpha(alpha),
    })
}

/// A least-squares slope with a 95% confidence interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub points: usize,
}

fn fit_slope(xs: &[f64], ys: &[f64]) -> Option<SlopeFit> {
    let n = xs.len();
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let (lo, hi) = if n > 2 {
        let rss: f64 = xs
            .iter()
            .zip(ys)
            .map(|(x, y)| (y - my - slope * (x - mx)).powi(2))
            .sum();
        let se = (rss / (nf - 2.0) / sxx).sqrt();
        let t = StudentsT::new(0.0, 1.0, nf - 2.0)
            .expect("positive degrees of freedom")
            .inverse_cdf(0.975);
        (slope - t * se, slope + t * se)
    } else {
        (f64::NEG_INFINITY, f64::INFINITY)
    };
    Some(SlopeFit {
        slope,
        ci_low: lo,
        ci_high: hi,
        points: n,
    })
}

/// Box-counting estimate of `γ ↦ dim {x : δ̂(x) >= γ}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumEstimate {
    pub gamma_grid: Vec<f64>,
    /// Nonincreasing envelope of the raw fits (running minimum over γ).
    pub dims: Vec<Option<f64>>,
    pub raw: Vec<Option<SlopeFit>>,
    /// `counts[g][b]`: boxes of scale `box_scales[b]` hit at `gamma_grid[g]`.
    pub counts: Vec<Vec<usize>>,
    pub box_scales: Vec<u32>,
    pub grid_bits: u32,
    pub delta_hat: Vec<f64>,
}

/// Slopes of `log2(#boxes)` against box scale, from exponent values on the
/// `2^{nd}` grid in [`grid_points`] order.
/// Per-γ box counts and their fits.
pub type BoxCounts = (Vec<Vec<usize>>, Vec<Option<SlopeFit>>);

pub fn box_count_dims(
    d: usize,
    grid_bits: u32,
    delta_hat: &[f64],
    gamma_grid: &[f64],
    box_scales: &[u32],
) -> Result<BoxCounts> {
    if box_scales.len() < 3 {
        return Err(invalid("at least three box scales are required"));
    }
    if let Some(b) = box_scales.iter().find(|&&b| b > grid_bits) {
        return Err(invalid(format!("box scale {b} exceeds the grid resolution {grid_bits}")));
    }
    let side = 1usize << grid_bits;
    if delta_hat.len() != side.pow(d as u32) {
        return Err(invalid("exponent values do not match the grid"));
    }
    let results: Vec<(Vec<usize>, Option<SlopeFit>)> = gamma_grid
        .par_iter()
        .map(|&g| {
            let counts: Vec<usize> = box_scales
                .iter()
                .map(|&b| {
                    let shift = grid_bits - b;
                    let mut boxes = HashSet::new();
                    for (t, &dh) in delta_hat.iter().enumerate() {
                        if dh >= g {
                            // per-coordinate cell index, coarsened to scale b
                            let mut rest = t;
                            let mut key = 0usize;
                            let mut mult = 1usize;
                            for _ in 0..d {
                                key += ((rest % side) >> shift) * mult;
                                mult <<= b;
                                rest /= side;
                            }
                            boxes.insert(key);
                        }
                    }
                    boxes.len()
                })
                .collect();
            let (xs, ys): (Vec<f64>, Vec<f64>) = box_scales
                .iter()
                .zip(&counts)
                .filter(|(_, &c)| c > 0)
                .map(|(&b, &c)| (b as f64, (c as f64).log2()))
                .unzip();
            let fit = if xs.len() >= 3 { fit_slope(&xs, &ys) } else { None };
            (counts, fit)
        })
        .collect();
    Ok(results.into_iter().unzip())
}

fn envelope(raw: &[Option<SlopeFit>]) -> Vec<Option<f64>> {
    let mut cap = f64::INFINITY;
    raw.iter()
        .map(|f| {
            f.map(|f| {
                cap = cap.min(f.slope);
                cap
            })
        })
        .collect()
}

pub fn estimate_spectrum(
    field: &CoefficientField,
    system: &WaveletSystem,
    settings: &EstimatorSettings,
    grid_bits: u32,
    gamma_grid: &[f64],
    box_scales: &[u32],
) -> Result<SpectrumEstimate> {
    let d = field.d();
    if grid_bits as usize * d > 24 {
        return Err(invalid(format!("a 2^{} point grid is too large", grid_bits as usize * d)));
    }
    // fail fast on box-scale problems before the expensive evaluation
    if box_scales.len() < 3 || box_scales.iter().any(|&b| b > grid_bits) {
        return Err(invalid("need at least three box scales, each at most the grid resolution"));
    }
    let points = grid_points(d, grid_bits);
    let delta_hat: Vec<f64> = profiles(field, system, &points, settings)?
        .into_iter()
        .map(|p| p.delta_hat)
        .collect();
    let (counts, raw) = box_count_dims(d, grid_bits, &delta_hat, gamma_grid, box_scales)?;
    Ok(SpectrumEstimate {
        gamma_grid: gamma_grid.to_vec(),
        dims: envelope(&raw),
        raw,
        counts,
        box_scales: box_scales.to_vec(),
        grid_bits,
        delta_hat,
    })
}

/// Slope of `log2 Card(E_{j,γ})` against `j` for one `γ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountSlope {
    pub gamma: f64,
    pub counts: Vec<usize>,
    pub fit: Option<SlopeFit>,
}

impl CountSlope {
    pub fn slope(&self) -> Option<f64> {
        self.fit.map(|f| f.slope)
    }
}

/// Coefficient-side dimension proxy over scales `j_from..=Jmax` with a
/// positive count.
pub fn coefficient_count_spectrum_from(
    field: &CoefficientField,
    gamma_grid: &[f64],
    j_from: u32,
) -> Vec<CountSlope> {
    gamma_grid
        .iter()
        .map(|&g| {
            let counts: Vec<usize> = (0..=field.jmax).map(|j| count_large(field, j, g)).collect();
            let (xs, ys): (Vec<f64>, Vec<f64>) = counts
                .iter()
                .enumerate()
                .skip(j_from as usize)
                .filter(|(_, &c)| c > 0)
                .map(|(j, &c)| (j as f64, (c as f64).log2()))
                .unzip();
            CountSlope {
                gamma: g,
                counts,
                fit: fit_slope(&xs, &ys),
            }
        })
        .collect()
}

/// [`coefficient_count_spectrum_from`] over all scales.
pub fn coefficient_count_spectrum(field: &CoefficientField, gamma_grid: &[f64]) -> Vec<CountSlope> {
    coefficient_count_spectrum_from(field, gamma_grid, 0)
}

/// Spectrum CSV: `gamma,dim_boxcount,dim_coeffcount,dim_theory,ci_low,ci_high`.
/// The interval is that of the box-counting fit.
pub fn write_spectrum_csv<W: Write>(
    mut w: W,
    params: &BesovParams,
    gamma_grid: &[f64],
    boxes: Option<&SpectrumEstimate>,
    counts: &[CountSlope],
) -> Result<()> {
    writeln!(w, "gamma,dim_boxcount,dim_coeffcount,dim_theory,ci_low,ci_high")?;
    for (n, &g) in gamma_grid.iter().enumerate() {
        let bc = boxes.and_then(|b| b.dims[n]);
        let raw = boxes.and_then(|b| b.raw[n]);
        let cc = counts.get(n).and_then(|c| c.slope());
        writeln!(
            w,
            "{},{},{},{},{},{}",
            fmt_f64(g),
            fmt_opt(bc),
            fmt_opt(cc),
            fmt_opt(theoretical_spectrum(params, g)),
            fmt_opt(raw.map(|f| f.ci_low)),
            fmt_opt(raw.map(|f| f.ci_high)),
        )?;
    }
    Ok(())
}

/// Settings of a genericity run.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    /// The saturating template; its seed is the root seed of the run.
    pub saturating: SaturatingConfig,
    pub system: WaveletSystem,
    pub settings: EstimatorSettings,
    /// Uniform test points per trial.
    pub points: usize,
    /// Indicator (1): `min δ̂ >= -s - tol_min`.
    pub tol_min: f64,
    /// Indicator (2): `|median δ̂ + s| <= tol_median`.
    pub tol_median: f64,
    /// Indicator (3): count slopes within `tol_slope` of the theory at
    /// `gammas`.
    pub tol_slope: f64,
    pub gammas: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseOutcome {
    #[serde(with = "crate::output::sentinel")]
    pub min_delta: f64,
    #[serde(with = "crate::output::sentinel")]
    pub median_delta: f64,
    pub slopes: Vec<Option<f64>>,
    /// `[everywhere lower bound, median at -s, count slopes]`.
    pub indicators: [bool; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub trial: u64,
    pub seed: u64,
    pub bases: Vec<BaseOutcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub root_seed: u64,
    pub trials: Vec<TrialOutcome>,
    /// `pass_rates[base][indicator]`.
    pub pass_rates: Vec<[f64; 3]>,
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        values[n / 2]
    } else {
        let (a, b) = (values[n / 2 - 1], values[n / 2]);
        if a == b {
            a
        } else {
            0.5 * (a + b)
        }
    }
}

/// Uniform points of `[0,1)^d` drawn from `seed`.
pub fn uniform_points(d: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let rng = CounterRng::new(seed).key(0x706f_696e_7473);
    (0..count)
        .map(|n| (0..d).map(|r| rng.uniform((n * d + r) as u64)).collect())
        .collect()
}

pub fn genericity_experiment(
    bases: &[CoefficientField],
    config: &ExperimentConfig,
    trials: u64,
) -> Result<ExperimentReport> {
    if trials == 0 {
        return Err(invalid("trials must be at least 1"));
    }
    let params = config.saturating.params;
    if bases.iter().any(|b| b.params != params) {
        return Err(invalid("all base fields must share the saturating parameters"));
    }
    let root = config.saturating.seed;
    let mut outcomes = Vec::new();
    for t in 0..trials {
        let seed = trial_seed(root, t);
        let c = saturating_random(&SaturatingConfig {
            seed,
            ..config.saturating.clone()
        })?;
        let pts = uniform_points(params.d, config.points, seed);
        let mut per_base = Vec::new();
        for base in bases {
            let sum = base.added(&c)?;
            let mut deltas: Vec<f64> = profiles(&sum, &config.system, &pts, &config.settings)?
                .into_iter()
                .map(|p| p.delta_hat)
                .collect();
            let min_delta = deltas.iter().copied().fold(f64::INFINITY, f64::min);
            let median_delta = median(&mut deltas);
            let slopes: Vec<Option<f64>> = coefficient_count_spectrum(&sum, &config.gammas)
                .iter()
                .map(|c| c.slope())
                .collect();
            let slope_ok = config.gammas.iter().zip(&slopes).all(|(&g, s)| {
                match (theoretical_spectrum(&params, g), s) {
                    (Some(th), Some(s)) => (s - th).abs() <= config.tol_slope,
                    (None, _) => true,
                    (Some(_), None) => false,
                }
            });
            per_base.push(BaseOutcome {
                min_delta,
                median_delta,
                slopes,
                indicators: [
                    min_delta >= -params.s - config.tol_min,
                    (median_delta + params.s).abs() <= config.tol_median,
                    slope_ok,
                ],
            });
        }
        outcomes.push(TrialOutcome {
            trial: t,
            seed,
            bases: per_base,
        });
    }
    let pass_rates = (0..bases.len())
        .map(|b| {
            let mut r = [0.0; 3];
            for (n, slot) in r.iter_mut().enumerate() {
                *slot = outcomes.iter().filter(|o| o.bases[b].indicators[n]).count() as f64
                    / trials as f64;
            }
            r
        })
        .collect();
    Ok(ExperimentReport {
        root_seed: root,
        trials: outcomes,
        pass_rates,
    })
}
