//! Discrete Besov quantities on truncated fields.
//!
//! `ε_j = (Σ_{(i,λ) ∈ Λ_j} |c 2^{(s - d/p) j}|^p)^{1/p}` and the `ℓ^q` norm of
//! `(ε_j)`. For `p, q < 1` these are quasi-norms; nothing below relies on a
//! triangle inequality.

use std::io::Write;

use crate::error::{invalid, Result};
use crate::field::CoefficientField;
use crate::output::fmt_f64;
use crate::params::BesovParams;

/// Per-scale values `ε_j`, `j = 0..=Jmax`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleProfile {
    pub eps: Vec<f64>,
}

/// `ε_j` of `field` measured in the space `params`.
pub fn scale_lp(field: &CoefficientField, params: &BesovParams, j: u32) -> f64 {
    let weight = ((params.s - params.d_over_p()) * j as f64).exp2();
    if params.p.is_infinite() {
        field
            .scale(j)
            .fold(0.0, |m, (_, c)| m.max(c.abs() * weight))
    } else {
        let p = params.p;
        let sum: f64 = field.scale(j).map(|(_, c)| (c.abs() * weight).powf(p)).sum();
        sum.powf(1.0 / p)
    }
}

pub fn scale_profile(field: &CoefficientField, params: &BesovParams) -> ScaleProfile {
    ScaleProfile {
        eps: (0..=field.jmax).map(|j| scale_lp(field, params, j)).collect(),
    }
}

fn lq(values: impl Iterator<Item = f64>, q: f64) -> f64 {
    if q.is_infinite() {
        values.fold(0.0, f64::max)
    } else {
        values.map(|e| e.powf(q)).sum::<f64>().powf(1.0 / q)
    }
}

/// `ℓ^q` norm of the scale profile, scales `0..=Jmax`.
pub fn besov_norm(field: &CoefficientField, params: &BesovParams) -> f64 {
    lq(scale_profile(field, params).eps.into_iter(), params.q)
}

/// Default compactness weights `a_j = 1 + log2(1 + j)`.
pub fn default_weights(jmax: u32) -> Vec<f64> {
    (0..=jmax).map(|j| 1.0 + (1.0 + j as f64).log2()).collect()
}

/// Value of `Σ_j a_j ε_j^q` (`sup_j a_j ε_j` when `q = inf`) together with
/// the membership verdict for the compact set `{value <= 1, support in
/// [0,1)^d}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedNorm {
    pub value: f64,
    pub support_inside: bool,
}

impl WeightedNorm {
    pub fn member(&self) -> bool {
        self.support_inside && self.value <= 1.0
    }
}

/// The compactness functional with caller weights `a_j`, one per scale
/// `0..=Jmax`. Weights must be positive and nondecreasing.
pub fn weighted_norm(
    field: &CoefficientField,
    params: &BesovParams,
    weights: &[f64],
) -> Result<WeightedNorm> {
    if weights.len() < field.jmax as usize + 1 {
        return Err(invalid(format!(
            "need {} weights, got {}",
            field.jmax + 1,
            weights.len()
        )));
    }
    if weights.iter().any(|&a| !(a > 0.0)) || weights.windows(2).any(|w| w[1] < w[0]) {
        return Err(invalid("weights must be positive and nondecreasing"));
    }
    let eps = scale_profile(field, params).eps;
    let value = if params.q.is_infinite() {
        eps.iter().zip(weights).fold(0.0f64, |m, (e, a)| m.max(a * e))
    } else {
        eps.iter().zip(weights).map(|(e, a)| a * e.powf(params.q)).sum()
    };
    Ok(WeightedNorm {
        value,
        support_inside: field.supported_in_unit_cube(),
    })
}

/// Partial sums of the compactness functional, one per truncation scale.
pub fn weighted_partial_sums(
    field: &CoefficientField,
    params: &BesovParams,
    weights: &[f64],
) -> Vec<f64> {
    let eps = scale_profile(field, params).eps;
    let mut acc = 0.0;
    eps.iter()
        .zip(weights)
        .map(|(e, a)| {
            if params.q.is_infinite() {
                acc = f64::max(acc, a * e);
            } else {
                acc += a * e.powf(params.q);
            }
            acc
        })
        .collect()
}

/// Smallest `C` with `|c| <= C 2^{(d/p - s) j}` over all stored entries.
pub fn sup_coefficient_bound(field: &CoefficientField, params: &BesovParams) -> f64 {
    let crit = params.critical();
    field
        .iter()
        .fold(0.0, |m, (idx, c)| m.max(c.abs() * (-crit * idx.j() as f64).exp2()))
}

/// `Card(E_{j,γ})`: number of `(i,λ) ∈ Λ_j` with `|c| >= 2^{γ j}`.
pub fn count_large(field: &CoefficientField, j: u32, gamma: f64) -> usize {
    let threshold = (gamma * j as f64).exp2();
    field.scale(j).filter(|(_, c)| c.abs() >= threshold).count()
}

/// CSV with columns `j, eps_j` and one `count_large` column per `γ`.
pub fn write_scale_csv<W: Write>(
    mut w: W,
    field: &CoefficientField,
    params: &BesovParams,
    gammas: &[f64],
) -> Result<()> {
    let mut header = String::from("j,eps_j");
    for g in gammas {
        header.push_str(&format!(",count_large[{}]", fmt_f64(*g)));
    }
    writeln!(w, "{header}")?;
    for j in 0..=field.jmax {
        let mut row = format!("{j},{}", fmt_f64(scale_lp(field, params, j)));
        for &g in gammas {
            row.push_str(&format!(",{}", count_large(field, j, g)));
        }
        writeln!(w, "{row}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::CoeffIndex;
    use approx::assert_relative_eq;

    fn single(params: BesovParams, j: u32, v: f64) -> CoefficientField {
        let mut f = CoefficientField::new(params, j.max(1));
        f.set(CoeffIndex::new(1, j, vec![0; params.d]), v).unwrap();
        f
    }

    #[test]
    fn single_entry_at_critical_smoothness() {
        let params = BesovParams::new(0.5, 2.0, 2.0, 1).unwrap();
        let f = single(params, 2, 1.0);
        assert_relative_eq!(scale_lp(&f, &params, 2), 1.0);
        assert_eq!(scale_lp(&f, &params, 1), 0.0);
        let params3 = BesovParams::new(1.0, 3.0, 1.5, 3).unwrap();
        assert_relative_eq!(besov_norm(&single(params3, 0, 1.0), &params3), 1.0);
    }

    #[test]
    fn homogeneity_including_quasi_norms() {
        for (p, q) in [(2.0, 2.0), (0.5, 0.7), (1.0, f64::INFINITY), (f64::INFINITY, 0.3)] {
            let params = BesovParams::new(0.3, p, q, 1).unwrap();
            let mut f = CoefficientField::new(params, 4);
            for (j, k, v) in [(1, 0, 0.7), (2, 3, -1.2), (4, 9, 0.01), (4, 2, 2.5)] {
                f.set(CoeffIndex::new(1, j, vec![k]), v).unwrap();
            }
            let t = -3.25;
            assert_relative_eq!(
                besov_norm(&f.scaled(t), &params),
                t.abs() * besov_norm(&f, &params),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn infinite_p_and_q_is_the_holder_sup() {
        let params = BesovParams::new(0.7, f64::INFINITY, f64::INFINITY, 1).unwrap();
        let mut f = CoefficientField::new(params, 5);
        let entries = [(0, 0, 0.3), (3, 5, -0.9), (5, 17, 0.2)];
        for (j, k, v) in entries {
            f.set(CoeffIndex::new(1, j, vec![k]), v).unwrap();
        }
        let expected = entries
            .iter()
            .map(|&(j, _, v): &(u32, i64, f64)| (0.7 * j as f64).exp2() * v.abs())
            .fold(0.0, f64::max);
        assert_eq!(besov_norm(&f, &params), expected);
    }

    #[test]
    fn weighted_norm_membership() {
        let params = BesovParams::new(0.5, 2.0, 2.0, 1).unwrap();
        let zero = CoefficientField::new(params, 3);
        let w = weighted_norm(&zero, &params, &default_weights(3)).unwrap();
        assert_eq!(w.value, 0.0);
        assert!(w.member());

        let mut outside = CoefficientField::new(params, 3);
        outside.set(CoeffIndex::new(1, 2, vec![4]), 1e-9).unwrap();
        let w = weighted_norm(&outside, &params, &default_weights(3)).unwrap();
        assert!(w.value < 1.0);
        assert!(!w.member());

        assert!(weighted_norm(&zero, &params, &[1.0, 2.0]).is_err());
        assert!(weighted_norm(&zero, &params, &[1.0, 2.0, 1.5, 3.0]).is_err());
    }

    #[test]
    fn count_large_and_sup_bound() {
        let params = BesovParams::new(0.0, 2.0, 2.0, 1).unwrap();
        let mut f = CoefficientField::new(params, 3);
        for (k, v) in [(0, 8.0), (1, 1.0), (2, -4.0), (3, 0.5)] {
            f.set(CoeffIndex::new(1, 3, vec![k]), v).unwrap();
        }
        assert_eq!(count_large(&f, 3, 0.0), 3);
        assert_eq!(count_large(&f, 3, 2.0 / 3.0), 2);
        assert_eq!(count_large(&f, 3, 1.0), 1);
        assert_eq!(count_large(&f, 2, -10.0), 0);
        // d/p - s = 1/2: C = 8 / 2^{1.5}
        assert_relative_eq!(sup_coefficient_bound(&f, &params), 8.0 / 1.5f64.exp2());
        assert_eq!(sup_coefficient_bound(&CoefficientField::new(params, 3), &params), 0.0);
    }

    #[test]
    fn csv_layout() {
        let params = BesovParams::new(0.5, 2.0, 2.0, 1).unwrap();
        let f = single(params, 1, 1.0);
        let mut buf = Vec::new();
        write_scale_csv(&mut buf, &f, &params, &[0.0]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "j,eps_j,count_large[0.0000000000000000e0]");
        assert_eq!(lines.len(), 3);
        assert!(lines[2].starts_with("1,1.0000000000000000e0,1"));
    }
}
