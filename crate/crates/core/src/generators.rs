//! Explicit coefficient sequences.
//!
//! All logarithms are base 2: the log-correction weight is
//! `2^{-(log2 j)^2}`. Fields record this in their metadata.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde_json::json;

use crate::covering::{covering_lower_bound_at, covering_map, DyadicCovering};
use crate::dyadic::{irreducible, unit_positions, CoeffIndex, DyadicCube};
use crate::error::{invalid, Error, Result};
use crate::field::CoefficientField;
use crate::params::BesovParams;
use crate::rng::CounterRng;
use crate::wavelet::WaveletSystem;

/// `2^{-(log2 j)^2}`; zero at `j = 0`.
pub fn log_weight(j: u32) -> f64 {
    if j == 0 {
        return 0.0;
    }
    let l = (j as f64).log2();
    (-l * l).exp2()
}

/// Entry of the hierarchical sequence `E` at `(j, k)`; zero at `j = 0`.
pub fn e_value(params: &BesovParams, j: u32, k: &[i64]) -> f64 {
    if j == 0 {
        return 0.0;
    }
    let (big_j, _) = irreducible(j, k);
    let l = (j as f64).log2();
    let dp = params.d_over_p();
    (-l * l + params.critical() * j as f64 - dp * big_j as f64).exp2()
}

fn base_meta(field: &mut CoefficientField, kind: &str) {
    field.meta.insert("kind".into(), json!(kind));
    field.meta.insert("log_base".into(), json!(2));
}

fn check_generators(generators: u32) -> Result<()> {
    if generators == 0 {
        return Err(invalid("at least one generator is required"));
    }
    Ok(())
}

/// Fill `field` with `weight(j) * e` for every generator and every cube of
/// `[0,1)^d` at scales `1..=jmax`.
fn fill_weighted_e(
    field: &mut CoefficientField,
    generators: u32,
    weight: impl Fn(u32) -> f64 + Sync,
) -> Result<()> {
    let params = field.params;
    let d = params.d;
    let per_scale: Vec<Vec<(Vec<i64>, f64)>> = (1..=field.jmax)
        .into_par_iter()
        .map(|j| {
            let w = weight(j);
            unit_positions(d, j)
                .map(|k| {
                    let v = w * e_value(&params, j, &k);
                    (k, v)
                })
                .collect()
        })
        .collect();
    for (j, row) in (1..=field.jmax).zip(per_scale) {
        for (k, v) in row {
            for i in 1..=generators {
                field.set(CoeffIndex::new(i, j, k.clone()), v)?;
            }
        }
    }
    Ok(())
}

/// The deterministic sequence `E` on `[0,1)^d`, scales `1..=jmax`, the same
/// value for each of the `generators` generators.
pub fn deterministic_e(params: &BesovParams, jmax: u32, generators: u32) -> Result<CoefficientField> {
    params.validate()?;
    check_generators(generators)?;
    if jmax < 1 {
        return Err(invalid("Jmax must be at least 1"));
    }
    let mut field = CoefficientField::new(*params, jmax);
    fill_weighted_e(&mut field, generators, |_| 1.0)?;
    base_meta(&mut field, "deterministic");
    Ok(field)
}

/// First parent→child edge (both entries present) along which
/// `2^{βj}|c|` increases, as `(parent, child)`.
pub fn hierarchy_violation(field: &CoefficientField, beta: f64) -> Option<(CoeffIndex, CoeffIndex)> {
    field.iter().find_map(|(idx, v)| {
        let parent = idx.cube.parent()?;
        let pv = field.get_at(idx.i, &parent);
        if pv == 0.0 {
            return None;
        }
        let j = idx.j() as f64;
        let child = (beta * j).exp2() * v.abs();
        let up = (beta * (j - 1.0)).exp2() * pv.abs();
        (child > up * (1.0 + 1e-12)).then(|| {
            (
                CoeffIndex {
                    i: idx.i,
                    cube: parent,
                },
                idx.clone(),
            )
        })
    })
}

/// Whether `2^{βj}|c|` is nonincreasing along every edge present.
pub fn hierarchy_check(field: &CoefficientField, beta: f64) -> bool {
    hierarchy_violation(field, beta).is_none()
}

/// Configuration of a saturating realization.
#[derive(Debug, Clone)]
pub struct SaturatingConfig {
    pub params: BesovParams,
    pub covering: DyadicCovering,
    pub jmax: u32,
    pub seed: u64,
    /// Number of generators of the wavelet system.
    pub generators: u32,
}

/// The envelope `f` of a saturating field: for every block `m` with
/// `(m+1)M <= Jmax`, every cube `ν ⊆ [0,1)^d` of scale `mM` and every `l`,
/// `f(μ^l(ν)) = max e_ν` over all preimages.
pub fn saturating_envelope(config: &SaturatingConfig) -> Result<BTreeMap<DyadicCube, f64>> {
    let params = &config.params;
    params.validate()?;
    check_generators(config.generators)?;
    let cov = &config.covering;
    if cov.dim() != params.d {
        return Err(Error::DimensionMismatch {
            expected: params.d,
            found: cov.dim(),
        });
    }
    let m_depth = cov.depth;
    if config.jmax < m_depth {
        return Err(invalid(format!(
            "Jmax = {} cannot hold one block of depth M = {}",
            config.jmax, m_depth
        )));
    }
    let blocks = config.jmax / m_depth;
    let images: Vec<Vec<(DyadicCube, f64)>> = (0..blocks)
        .into_par_iter()
        .map(|m| {
            let j = m * m_depth;
            let mut out = Vec::new();
            for k in unit_positions(params.d, j) {
                let e = e_value(params, j, &k);
                if e == 0.0 {
                    continue;
                }
                let nu = DyadicCube::new(j, k);
                for l in 1..=cov.len() {
                    out.push((covering_map(cov, l, &nu).expect("validated covering"), e));
                }
            }
            out
        })
        .collect();
    let mut f = BTreeMap::new();
    for (cube, e) in images.into_iter().flatten() {
        let slot = f.entry(cube).or_insert(0.0f64);
        *slot = slot.max(e);
    }
    Ok(f)
}

/// Uniform `ξ ∈ [-1, 1)` attached to `(i, λ)` under `seed`.
pub fn xi(seed: u64, i: u32, cube: &DyadicCube) -> f64 {
    let mut rng = CounterRng::new(seed).key(i as u64).key(cube.j as u64);
    for &kr in &cube.k {
        rng = rng.key_signed(kr);
    }
    rng.symmetric(0)
}

/// The random saturating sequence `c = ξ f`.
pub fn saturating_random(config: &SaturatingConfig) -> Result<CoefficientField> {
    let f = saturating_envelope(config)?;
    let mut field = CoefficientField::new(config.params, config.jmax);
    for (cube, fv) in &f {
        for i in 1..=config.generators {
            field.set(
                CoeffIndex {
                    i,
                    cube: cube.clone(),
                },
                xi(config.seed, i, cube) * fv,
            )?;
        }
    }
    base_meta(&mut field, "saturating");
    field.meta.insert("seed".into(), json!(config.seed));
    field.meta.insert("M".into(), json!(config.covering.depth));
    field.meta.insert("blocks".into(), json!(config.jmax / config.covering.depth));
    field.meta.insert("L".into(), json!(config.covering.len()));
    Ok(field)
}

/// Entrywise sum.
pub fn add_fields(a: &CoefficientField, b: &CoefficientField) -> Result<CoefficientField> {
    a.added(b)
}

/// Entrywise multiple.
pub fn scale_field(a: &CoefficientField, t: f64) -> CoefficientField {
    a.scaled(t)
}

/// `E_a`: entries `j^{-a} e`.
pub fn lineability_basis(
    params: &BesovParams,
    a: f64,
    jmax: u32,
    generators: u32,
) -> Result<CoefficientField> {
    Combination::new(&[a], &[1.0])?.field(params, jmax, generators)
}

/// A finite combination `D = Σ k_i E_{a_i}`, terms sorted by `a`.
#[derive(Debug, Clone, PartialEq)]
pub struct Combination {
    terms: Vec<(f64, f64)>,
}

impl Combination {
    pub fn new(a: &[f64], k: &[f64]) -> Result<Self> {
        if a.len() != k.len() || a.is_empty() {
            return Err(invalid("need matching, nonempty a and k"));
        }
        if a.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
            return Err(invalid("exponents a must be positive"));
        }
        if k.iter().any(|&x| x == 0.0 || !x.is_finite()) {
            return Err(invalid("weights k must be nonzero"));
        }
        let mut terms: Vec<(f64, f64)> = a.iter().copied().zip(k.iter().copied()).collect();
        terms.sort_by(|x, y| x.0.total_cmp(&y.0));
        if terms.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(invalid("exponents a must be distinct"));
        }
        Ok(Self { terms })
    }

    pub fn terms(&self) -> &[(f64, f64)] {
        &self.terms
    }

    /// `Σ k_i j^{-a_i}`; the coefficients of `D` are this times `e`.
    pub fn factor(&self, j: u32) -> f64 {
        let j = j as f64;
        self.terms.iter().map(|&(a, k)| k * j.powf(-a)).sum()
    }

    /// `|k_1| / (2 j^{a_1}) <= |factor| <= 2 |k_1| j^{-a_1}`.
    pub fn sandwich_holds_at(&self, j: u32) -> bool {
        let (a1, k1) = self.terms[0];
        let lead = k1.abs() * (j as f64).powf(-a1);
        let f = self.factor(j).abs();
        0.5 * lead <= f && f <= 2.0 * lead
    }

    fn tail_ratio(&self, j: u32) -> f64 {
        let (a1, k1) = self.terms[0];
        let j = j as f64;
        self.terms[1..]
            .iter()
            .map(|&(a, k)| k.abs() * j.powf(a1 - a))
            .sum::<f64>()
            / k1.abs()
    }

    /// Smallest `j >= 1` with `Σ_{i>=2} |k_i| j^{a_1 - a_i} <= |k_1| / 2`.
    /// The left side decreases in `j`, so the sandwich holds from there on.
    pub fn certificate_scale(&self) -> u32 {
        if self.tail_ratio(1) <= 0.5 {
            return 1;
        }
        let mut hi = 2u32;
        while self.tail_ratio(hi) > 0.5 {
            hi = hi.checked_mul(2).expect("certificate scale overflow");
        }
        let mut lo = hi / 2;
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if self.tail_ratio(mid) <= 0.5 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    /// Smallest `j_0` such that the sandwich holds at every `j >= j_0`:
    /// scanned below the certificate scale, certified above it.
    pub fn j0(&self) -> u32 {
        let cert = self.certificate_scale();
        (1..cert)
            .rev()
            .find(|&j| !self.sandwich_holds_at(j))
            .map_or(1, |j| j + 1)
    }

    pub fn field(&self, params: &BesovParams, jmax: u32, generators: u32) -> Result<CoefficientField> {
        params.validate()?;
        check_generators(generators)?;
        if jmax < 1 {
            return Err(invalid("Jmax must be at least 1"));
        }
        let mut field = CoefficientField::new(*params, jmax);
        fill_weighted_e(&mut field, generators, |j| self.factor(j))?;
        base_meta(&mut field, "lineability");
        field.meta.insert(
            "a".into(),
            json!(self.terms.iter().map(|t| t.0).collect::<Vec<_>>()),
        );
        field.meta.insert(
            "k".into(),
            json!(self.terms.iter().map(|t| t.1).collect::<Vec<_>>()),
        );
        Ok(field)
    }
}

/// `Σ k_i E_{a_i}`.
pub fn lineability_combination(
    params: &BesovParams,
    a: &[f64],
    k: &[f64],
    jmax: u32,
    generators: u32,
) -> Result<CoefficientField> {
    Combination::new(a, k)?.field(params, jmax, generators)
}

/// One coefficient `2^{-(log2 j)^2} 2^{(d/p - s) j}` per block, on the cube
/// the covering selects at `x0`.
pub fn point_divergent(
    params: &BesovParams,
    system: &WaveletSystem,
    covering: &DyadicCovering,
    x0: &[f64],
    jmax: u32,
) -> Result<CoefficientField> {
    params.validate()?;
    if x0.len() != params.d || system.dim() != params.d {
        return Err(Error::DimensionMismatch {
            expected: params.d,
            found: x0.len(),
        });
    }
    let mut field = CoefficientField::new(*params, jmax);
    let mut m = 0u32;
    loop {
        let base = m * covering.depth;
        if base + 1 > jmax {
            break;
        }
        let w = covering_lower_bound_at(system, covering, x0, base)?;
        let j = w.cube.j;
        if j <= jmax {
            let v = log_weight(j) * (params.critical() * j as f64).exp2();
            field.set(CoeffIndex { i: w.i, cube: w.cube }, v)?;
        }
        m += 1;
    }
    base_meta(&mut field, "point");
    field.meta.insert("x0".into(), json!(x0));
    field.meta.insert("M".into(), json!(covering.depth));
    Ok(field)
}

/// Center and radius of a ball of sequences that diverge at rate
/// `d/p - s` on a whole block of scales.
#[derive(Debug, Clone)]
pub struct ResidualWitness {
    pub center: CoefficientField,
    pub radius: f64,
    pub n: u32,
    pub cutoff: u32,
}

/// `N_n = nM + n`.
pub fn residual_cutoff(n: u32, depth: u32) -> u32 {
    n * depth + n
}

/// `r_n = 2^{-(log2(N_n+M))^2} 2^{-d(N_n+M)/p} / (2 N_n)`.
pub fn residual_radius(params: &BesovParams, cutoff: u32, depth: u32) -> f64 {
    let top = (cutoff + depth) as f64;
    let l = top.log2();
    (-l * l - params.d_over_p() * top).exp2() / (2.0 * cutoff as f64)
}

/// `G_n = F_n + E / N_n` with `E` up to `jmax` and the radius `r_n`.
pub fn residual_witness(
    params: &BesovParams,
    depth: u32,
    f_n: &CoefficientField,
    n: u32,
    jmax: u32,
    generators: u32,
) -> Result<ResidualWitness> {
    if !(params.p.is_finite() && params.q.is_finite()) {
        return Err(invalid("residual witnesses need finite p and q"));
    }
    if n == 0 || depth == 0 {
        return Err(invalid("n and M must be positive"));
    }
    let cutoff = residual_cutoff(n, depth);
    if let Some((idx, _)) = f_n.iter().find(|(idx, _)| idx.j() >= cutoff) {
        return Err(invalid(format!(
            "F_n has an entry at scale {} >= N_n = {cutoff}",
            idx.j()
        )));
    }
    if jmax < cutoff + depth {
        return Err(invalid(format!("Jmax must be at least N_n + M = {}", cutoff + depth)));
    }
    let e = deterministic_e(params, jmax, generators)?;
    let mut center = f_n.added(&e.scaled(1.0 / cutoff as f64))?;
    center.params = *params;
    base_meta(&mut center, "residual");
    center.meta.insert("n".into(), json!(n));
    center.meta.insert("N_n".into(), json!(cutoff));
    Ok(ResidualWitness {
        center,
        radius: residual_radius(params, cutoff, depth),
        n,
        cutoff,
    })
}

/// Canonical `F_n`: every cube of `[0,1)^d` at scales `< N_n` carries a
/// dyadic rational `u / 2^b`, `b <= n`, `|u| <= 2^b`, drawn from `seed`.
pub fn canonical_rational_field(
    params: &BesovParams,
    n: u32,
    depth: u32,
    generators: u32,
    seed: u64,
) -> Result<CoefficientField> {
    check_generators(generators)?;
    let cutoff = residual_cutoff(n, depth);
    let jmax = cutoff.saturating_sub(1);
    let mut field = CoefficientField::new(*params, jmax);
    if cutoff == 0 {
        return Ok(field);
    }
    let root = CounterRng::new(seed).key(n as u64);
    for j in 0..cutoff {
        for k in unit_positions(params.d, j) {
            for i in 1..=generators {
                let mut rng = root.key(i as u64).key(j as u64);
                for &kr in &k {
                    rng = rng.key_signed(kr);
                }
                let b = rng.below(0, n as u64 + 1) as u32;
                let span = 1i64 << b;
                let u = rng.below(1, 2 * span as u64 + 1) as i64 - span;
                field.set(CoeffIndex::new(i, j, k.clone()), u as f64 / span as f64)?;
            }
        }
    }
    Ok(field)
}

/// Lattice approximation in `C^s = b^{s,∞}_∞`: every cube of `[0,1)^d` at
/// scales `0..=jmax` gets a nonzero multiple of `2^{-sj-n}` within `2^{-n}`
/// of `source` in the `C^s` norm.
pub fn holder_residual_field(
    s: f64,
    n: u32,
    jmax: u32,
    source: &CoefficientField,
    generators: u32,
) -> Result<CoefficientField> {
    check_generators(generators)?;
    if source.params.p.is_finite() || source.params.q.is_finite() {
        return Err(invalid("the Hölder lattice needs p = q = inf"));
    }
    let params = BesovParams::new(s, f64::INFINITY, f64::INFINITY, source.d())?;
    let mut out = CoefficientField::new(params, jmax);
    for j in 0..=jmax {
        let step = (-s * j as f64 - n as f64).exp2();
        for k in unit_positions(params.d, j) {
            let cube = DyadicCube::new(j, k);
            for i in 1..=generators {
                let b = source.get_at(i, &cube);
                let q = (b / step).floor();
                let v = if q != 0.0 { q * step } else { step };
                out.set(
                    CoeffIndex {
                        i,
                        cube: cube.clone(),
                    },
                    v,
                )?;
            }
        }
    }
    base_meta(&mut out, "holder");
    out.meta.insert("n".into(), json!(n));
    Ok(out)
}

/// `Σ_k e^{-|k|_1} C^k(· - k)` over a finite window of translates; each
/// field must be supported in `[0,1)^d`.
pub fn full_space_extension(parts: &[(Vec<i64>, CoefficientField)]) -> Result<CoefficientField> {
    let (_, first) = parts
        .first()
        .ok_or_else(|| invalid("the translate window is empty"))?;
    let d = first.d();
    let jmax = parts.iter().map(|(_, f)| f.jmax).max().unwrap_or(0);
    let mut out = CoefficientField::new(first.params, jmax);
    for (k, f) in parts {
        if k.len() != d || f.d() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: k.len().max(f.d()),
            });
        }
        if !f.supported_in_unit_cube() {
            return Err(invalid(format!("translate {k:?} is not supported in [0,1)^d")));
        }
        let w = (-(k.iter().map(|x| x.abs()).sum::<i64>() as f64)).exp();
        for (idx, v) in f.iter() {
            let j = idx.j();
            let shifted: Vec<i64> = idx.cube.k.iter().zip(k).map(|(a, b)| a + (b << j)).collect();
            out.set(CoeffIndex::new(idx.i, j, shifted), w * v)?;
        }
    }
    out.meta.insert("kind".into(), json!("extension"));
    out.meta.insert("log_base".into(), json!(2));
    Ok(out)
}

/// Independent saturating realizations on every translate `k` with
/// `|k|_∞ <= radius`, combined by [`full_space_extension`].
pub fn saturating_extension(config: &SaturatingConfig, radius: i64) -> Result<CoefficientField> {
    let d = config.params.d;
    let side = (2 * radius + 1) as usize;
    let mut parts = Vec::new();
    for mut n in 0..side.pow(d as u32) {
        let mut k = vec![0i64; d];
        for slot in k.iter_mut().rev() {
            *slot = (n % side) as i64 - radius;
            n /= side;
        }
        let mut rng = CounterRng::new(config.seed).key(0x7472_616e);
        for &kr in &k {
            rng = rng.key_signed(kr);
        }
        let cfg = SaturatingConfig {
            seed: rng.bits(0),
            ..config.clone()
        };
        parts.push((k, saturating_random(&cfg)?));
    }
    full_space_extension(&parts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::besov::{besov_norm, count_large, scale_lp};
    use crate::covering::{Certification, Triplet};
    use approx::assert_relative_eq;

    fn haar_cov() -> DyadicCovering {
        DyadicCovering::new(
            vec![Triplet { i: 1, j: 1, k: vec![0] }, Triplet { i: 1, j: 1, k: vec![1] }],
            1.0,
            Certification::GridOnly,
        )
        .unwrap()
    }

    fn p2() -> BesovParams {
        BesovParams::new(0.5, 2.0, 2.0, 1).unwrap()
    }

    /// `J` by brute force: smallest `J` with `k 2^{J-j}` an integer.
    fn brute_j(j: u32, k: i64) -> u32 {
        (0..=j).find(|&jj| (k % (1i64 << (j - jj))) == 0).unwrap()
    }

    #[test]
    fn e_values() {
        let p = p2();
        assert_eq!(brute_j(4, 8), 1);
        assert_relative_eq!(e_value(&p, 4, &[8]), (-4.5f64).exp2(), max_relative = 1e-14);
        assert_relative_eq!(e_value(&p, 4, &[8]), 0.044194173824159216, max_relative = 1e-12);
        assert_relative_eq!(e_value(&p, 1, &[1]), (-0.5f64).exp2(), max_relative = 1e-14);
        let holder = BesovParams::new(0.3, f64::INFINITY, f64::INFINITY, 1).unwrap();
        for k in 0..16 {
            assert_relative_eq!(
                e_value(&holder, 4, &[k]),
                (-4.0 - 1.2f64).exp2(),
                max_relative = 1e-14
            );
        }
        let e = deterministic_e(&p, 6, 1).unwrap();
        assert_eq!(e.len(), (1..=6).map(|j| 1usize << j).sum::<usize>());
        for (idx, v) in e.iter() {
            let jj = brute_j(idx.j(), idx.cube.k[0]);
            let l = (idx.j() as f64).log2();
            let oracle = (-l * l).exp2() * (0.0f64).exp2() * (-0.5 * jj as f64).exp2();
            assert_relative_eq!(v, oracle, max_relative = 1e-13);
        }
    }

    #[test]
    fn hierarchy() {
        let p = p2();
        let e = deterministic_e(&p, 12, 1).unwrap();
        let beta = p.s - p.d_over_p();
        assert!(hierarchy_check(&e, beta));
        // a smaller β only strengthens the decrease
        assert!(hierarchy_check(&e, beta - 1.0));
        // 2^{j - (log j)^2} increases along the k = 0 branch for j >= 10
        let (parent, child) = hierarchy_violation(&e, beta + 1.0).unwrap();
        assert_eq!(child.cube.parent().unwrap(), parent.cube);
        assert!(child.j() >= 10);
        assert!(hierarchy_check(&CoefficientField::new(p, 4), 100.0));
    }

    #[test]
    fn saturating_under_haar() {
        let p = p2();
        let cfg = SaturatingConfig {
            params: p,
            covering: haar_cov(),
            jmax: 8,
            seed: 11,
            generators: 1,
        };
        let f = saturating_envelope(&cfg).unwrap();
        let c = saturating_random(&cfg).unwrap();
        // each cube has exactly one preimage: its parent
        for (cube, fv) in &f {
            let parent = cube.parent().unwrap();
            assert_eq!(*fv, e_value(&p, parent.j, &parent.k));
        }
        for (idx, v) in c.iter() {
            assert!(v.abs() <= f[&idx.cube]);
            assert!(idx.cube.in_unit_cube());
            assert!(idx.j() >= 2);
        }
        // reproducible, seed-dependent
        assert_eq!(c, saturating_random(&cfg).unwrap());
        let other = saturating_random(&SaturatingConfig { seed: 12, ..cfg.clone() }).unwrap();
        assert_ne!(c, other);
        assert!(saturating_random(&SaturatingConfig {
            jmax: 0,
            ..cfg
        })
        .is_err());
    }

    #[test]
    fn saturating_envelope_dominates_preimages() {
        let p = BesovParams::new(0.2, 1.5, 2.0, 1).unwrap();
        let cov = DyadicCovering::new(
            vec![
                Triplet { i: 1, j: 1, k: vec![0] },
                Triplet { i: 1, j: 2, k: vec![1] },
                Triplet { i: 1, j: 2, k: vec![3] },
            ],
            0.5,
            Certification::GridOnly,
        )
        .unwrap();
        let cfg = SaturatingConfig {
            params: p,
            covering: cov.clone(),
            jmax: 9,
            seed: 3,
            generators: 1,
        };
        let f = saturating_envelope(&cfg).unwrap();
        for m in 1..(9 / 2) {
            for k in unit_positions(1, 2 * m) {
                let nu = DyadicCube::new(2 * m, k);
                for l in 1..=3 {
                    let img = covering_map(&cov, l, &nu).unwrap();
                    assert!(f[&img] >= e_value(&p, nu.j, &nu.k));
                }
            }
        }
        assert!(f.keys().all(|c| c.j <= 8));
    }

    #[test]
    fn lineability() {
        let p = p2();
        let e = deterministic_e(&p, 6, 1).unwrap();
        let ea = lineability_basis(&p, 1.5, 6, 1).unwrap();
        for (idx, v) in e.iter() {
            let w = ea.get(idx);
            if idx.j() == 1 {
                assert_eq!(w, v);
            }
            assert!(w <= v);
        }
        assert!(lineability_basis(&p, 0.0, 6, 1).is_err());
        assert!(Combination::new(&[1.0, 1.0], &[1.0, 2.0]).is_err());

        let c = Combination::new(&[2.0, 0.5, 1.25], &[3.0, -2.0, 5.0]).unwrap();
        assert_eq!(c.terms()[0], (0.5, -2.0));
        let j0 = c.j0();
        let cert = c.certificate_scale();
        assert!(j0 <= cert);
        for j in j0..=cert.max(j0) + 200 {
            assert!(c.sandwich_holds_at(j), "j = {j}");
        }
        if j0 > 1 {
            assert!(!c.sandwich_holds_at(j0 - 1));
        }
        let d = c.field(&p, 8, 1).unwrap();
        for (idx, v) in d.iter() {
            let oracle = c.factor(idx.j()) * e_value(&p, idx.j(), &idx.cube.k);
            assert_relative_eq!(v, oracle, max_relative = 1e-12);
        }
    }

    #[test]
    fn point_divergent_follows_binary_expansion() {
        let p = BesovParams::new(0.0, 2.0, 2.0, 1).unwrap();
        let haar = WaveletSystem::haar(1).unwrap();
        let x0 = [1.0 / 3.0];
        let f = point_divergent(&p, &haar, &haar_cov(), &x0, 12).unwrap();
        assert_eq!(f.len(), 12);
        for j in 1..=12 {
            assert!(count_large(&f, j, -100.0) <= 1);
            assert!(scale_lp(&f, &p, j) <= log_weight(j) * (1.0 + 1e-12));
            // brute force: the child at scale j whose Haar wavelet is largest at x0
            let best = (0..(1i64 << j))
                .max_by(|&a, &b| {
                    let va = haar.eval(1, &[x0[0] * (j as f64).exp2() - a as f64]).abs();
                    let vb = haar.eval(1, &[x0[0] * (j as f64).exp2() - b as f64]).abs();
                    va.total_cmp(&vb).then(b.cmp(&a))
                })
                .unwrap();
            let (idx, _) = f.scale(j).next().unwrap();
            assert_eq!(idx.cube.k[0], best);
            assert!(idx.cube.contains(&x0));
        }
        // 1/3 = 0.010101...: digits alternate
        let ks: Vec<i64> = (1..=4).map(|j| f.scale(j).next().unwrap().0.cube.k[0]).collect();
        assert_eq!(ks, vec![0, 1, 2, 5]);

        let outside = point_divergent(&p, &haar, &haar_cov(), &[-2.7], 6).unwrap();
        for (idx, _) in outside.iter() {
            assert!(idx.cube.contains(&[-2.7]));
        }
    }

    #[test]
    fn residual() {
        let p = BesovParams::new(0.5, 2.0, 2.0, 1).unwrap();
        let l = 9f64.log2();
        assert_relative_eq!(
            residual_radius(&p, 8, 1),
            (1.0 / 16.0) * (-l * l).exp2() * (-4.5f64).exp2(),
            max_relative = 1e-14
        );
        let zero = CoefficientField::new(p, 3);
        let w = residual_witness(&p, 1, &zero, 4, 10, 1).unwrap();
        assert_eq!(w.cutoff, 8);
        let e = deterministic_e(&p, 10, 1).unwrap();
        for (idx, v) in e.iter() {
            assert_eq!(w.center.get(idx), v * (1.0 / 8.0));
        }
        assert_eq!(w.center.len(), e.len());

        let fn_ = canonical_rational_field(&p, 3, 1, 1, 5).unwrap();
        assert!(fn_.iter().all(|(idx, v)| idx.j() < 6 && (v * 8.0).fract() == 0.0 && v.abs() <= 1.0));
        assert!(residual_witness(&p, 1, &fn_, 3, 7, 1).is_ok());
        assert!(residual_witness(&p, 1, &fn_, 2, 7, 1).is_err());
        let inf = BesovParams::new(0.5, f64::INFINITY, 2.0, 1).unwrap();
        assert!(residual_witness(&inf, 1, &zero, 4, 10, 1).is_err());
    }

    #[test]
    fn holder_lattice() {
        let hp = BesovParams::new(0.4, f64::INFINITY, f64::INFINITY, 1).unwrap();
        let zero = CoefficientField::new(hp, 5);
        let b = holder_residual_field(0.4, 3, 5, &zero, 1).unwrap();
        for (idx, v) in b.iter() {
            assert_relative_eq!(v, (-0.4 * idx.j() as f64 - 3.0).exp2(), max_relative = 1e-14);
        }
        let src = saturating_random(&SaturatingConfig {
            params: hp,
            covering: haar_cov(),
            jmax: 6,
            seed: 1,
            generators: 1,
        })
        .unwrap();
        let b = holder_residual_field(0.4, 4, 6, &src, 1).unwrap();
        let diff = b.added(&src.scaled(-1.0)).unwrap();
        assert!(besov_norm(&diff, &hp) <= (-4f64).exp2());
        for (idx, v) in b.iter() {
            assert!((0.4 * idx.j() as f64).exp2() * v.abs() >= (-4f64).exp2() * (1.0 - 1e-12));
        }
        assert!(holder_residual_field(0.4, 3, 5, &CoefficientField::new(p2(), 2), 1).is_err());
    }

    #[test]
    fn extension() {
        let p = p2();
        let cfg = SaturatingConfig {
            params: p,
            covering: haar_cov(),
            jmax: 6,
            seed: 9,
            generators: 1,
        };
        let c = saturating_random(&cfg).unwrap();
        let id = full_space_extension(&[(vec![0], c.clone())]).unwrap();
        assert_eq!(id.iter().collect::<Vec<_>>(), c.iter().collect::<Vec<_>>());

        let ext = saturating_extension(&cfg, 1).unwrap();
        let bound = c.iter().fold(0.0f64, |m, (idx, _)| {
            let parent = idx.cube.parent().unwrap();
            m.max(e_value(&p, parent.j, &parent.k))
        });
        for (idx, v) in ext.iter() {
            let t = idx.cube.k[0].div_euclid(1 << idx.j());
            assert!(v.abs() <= (-(t.abs() as f64)).exp() * bound);
        }
        let single = besov_norm(&c, &p);
        let mut max_single = single;
        for t in [-1i64, 0, 1] {
            let part: Vec<_> = ext
                .iter()
                .filter(|(idx, _)| idx.cube.k[0].div_euclid(1 << idx.j()) == t)
                .collect();
            let mut f = CoefficientField::new(p, 6);
            for (idx, v) in part {
                let k = idx.cube.k[0] - (t << idx.j());
                f.set(CoeffIndex::new(idx.i, idx.j(), vec![k]), v / (-(t.abs() as f64)).exp()).unwrap();
            }
            max_single = max_single.max(besov_norm(&f, &p));
        }
        let weights: f64 = [1.0, 0.0, 1.0].iter().map(|t: &f64| (-t).exp()).sum();
        assert!(besov_norm(&ext, &p) <= weights * max_single * (1.0 + 1e-12));
    }
}
