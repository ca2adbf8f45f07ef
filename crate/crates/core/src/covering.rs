//! The dyadic covering property and the covering maps `μ^l`.
//!
//! A covering is a finite list of triplets `(i_l, j_l, k_l)` such that every
//! point of `[0,1)^d` has some `l` with `|ψ^(i_l)(2^{j_l} x - k_l)| >= c0`.
//! The continuum statement is checked on a grid; when the system carries a
//! Lipschitz constant the threshold is raised by `Lip * 2^j * h` so that the
//! bound also holds between grid points.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dyadic::{containing_cube, DyadicCube};
use crate::error::{invalid, Error, Result};
use crate::wavelet::WaveletSystem;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Triplet {
    pub i: u32,
    pub j: u32,
    pub k: Vec<i64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Certification {
    /// Holds on the continuum under the system's Lipschitz bound.
    #[serde(rename = "lipschitz")]
    Lipschitz,
    /// Only checked at grid points.
    #[serde(rename = "grid-only")]
    GridOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DyadicCovering {
    pub c0: f64,
    #[serde(rename = "M")]
    pub depth: u32,
    pub triplets: Vec<Triplet>,
    pub certified: Certification,
}

/// Outcome of a covering search. `NotFound` is a mathematical answer and
/// carries a grid point no candidate reaches.
#[derive(Debug, Clone, PartialEq)]
pub enum CoveringSearch {
    Found(DyadicCovering),
    NotFound { witness: Vec<f64> },
}

impl CoveringSearch {
    pub fn found(self) -> Option<DyadicCovering> {
        match self {
            CoveringSearch::Found(c) => Some(c),
            CoveringSearch::NotFound { .. } => None,
        }
    }
}

impl DyadicCovering {
    pub fn new(triplets: Vec<Triplet>, c0: f64, certified: Certification) -> Result<Self> {
        if triplets.is_empty() {
            return Err(invalid("a covering needs at least one triplet"));
        }
        if triplets.iter().any(|t| t.j == 0) {
            return Err(invalid("covering triplets need j_l > 0"));
        }
        if !(c0 > 0.0) {
            return Err(invalid(format!("c0 must be positive, got {c0}")));
        }
        let depth = triplets.iter().map(|t| t.j).max().unwrap_or(0);
        Ok(Self {
            c0,
            depth,
            triplets,
            certified,
        })
    }

    /// Number of triplets `L`.
    pub fn len(&self) -> usize {
        self.triplets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triplets.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.triplets.first().map_or(0, |t| t.k.len())
    }

    /// `l` is 1-based.
    pub fn triplet(&self, l: usize) -> Result<&Triplet> {
        l.checked_sub(1)
            .and_then(|idx| self.triplets.get(idx))
            .ok_or(Error::TripletOutOfRange {
                index: l,
                count: self.triplets.len(),
            })
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("covering serializes") + "\n"
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let raw: DyadicCovering = serde_json::from_str(text)?;
        let checked = DyadicCovering::new(raw.triplets, raw.c0, raw.certified)?;
        if checked.depth != raw.depth {
            return Err(Error::Malformed(format!(
                "M = {} does not match the largest j_l = {}",
                raw.depth, checked.depth
            )));
        }
        Ok(checked)
    }
}

/// `μ^l(λ)`: the image of `λ` under the dilation-translation that maps
/// `[0,1)^d` onto the cube `(j_l, k_l)`.
pub fn covering_map(covering: &DyadicCovering, l: usize, cube: &DyadicCube) -> Result<DyadicCube> {
    let t = covering.triplet(l)?;
    if t.k.len() != cube.dim() {
        return Err(Error::DimensionMismatch {
            expected: t.k.len(),
            found: cube.dim(),
        });
    }
    Ok(DyadicCube {
        j: cube.j + t.j,
        k: cube
            .k
            .iter()
            .zip(&t.k)
            .map(|(&k, &kl)| (k << t.j) + kl)
            .collect(),
    })
}

/// A covering triplet that reaches `c0` at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverWitness {
    /// 1-based triplet index.
    pub l: usize,
    /// `|ψ^(i_l)_{μ^l(λ)}(x)|`.
    pub value: f64,
    /// `μ^l(λ)`.
    pub cube: DyadicCube,
    pub i: u32,
}

/// For `λ` the generation-`j` cube containing `x`, the triplet `l` that
/// maximizes `|ψ^(i_l)_{μ^l(λ)}(x)|` (first one on ties). Fails with
/// [`Error::CoveringViolation`] if the maximum is below `c0`.
pub fn covering_lower_bound_at(
    system: &WaveletSystem,
    covering: &DyadicCovering,
    x: &[f64],
    j: u32,
) -> Result<CoverWitness> {
    if x.len() != system.dim() || covering.dim() != system.dim() {
        return Err(Error::DimensionMismatch {
            expected: system.dim(),
            found: x.len(),
        });
    }
    let lambda = containing_cube(x, j);
    let scale = (j as f64).exp2();
    // local coordinates in [0,1)^d
    let local: Vec<f64> = x
        .iter()
        .zip(&lambda.k)
        .map(|(&xr, &kr)| xr * scale - kr as f64)
        .collect();
    let mut best: Option<(usize, f64)> = None;
    for (idx, t) in covering.triplets.iter().enumerate() {
        let v = eval_triplet(system, t, &local).abs();
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((idx + 1, v));
        }
    }
    let (l, value) = best.expect("covering has triplets");
    if value < covering.c0 {
        return Err(Error::CoveringViolation {
            x: x.to_vec(),
            c0: covering.c0,
            best: value,
        });
    }
    let t = &covering.triplets[l - 1];
    Ok(CoverWitness {
        l,
        value,
        cube: covering_map(covering, l, &lambda)?,
        i: t.i,
    })
}

fn eval_triplet(system: &WaveletSystem, t: &Triplet, x: &[f64]) -> f64 {
    let scale = (t.j as f64).exp2();
    let y: Vec<f64> = x
        .iter()
        .zip(&t.k)
        .map(|(&xr, &kr)| xr * scale - kr as f64)
        .collect();
    system.eval(t.i, &y)
}

/// Grid of `[0,1)^d` with `per_axis` points per coordinate, `t / per_axis`.
fn unit_grid(d: usize, per_axis: usize) -> Vec<Vec<f64>> {
    let total = per_axis.pow(d as u32);
    (0..total)
        .map(|mut n| {
            let mut x = vec![0.0; d];
            for slot in x.iter_mut().rev() {
                *slot = (n % per_axis) as f64 / per_axis as f64;
                n /= per_axis;
            }
            x
        })
        .collect()
}

fn candidates(system: &WaveletSystem, max_depth: u32, c0: f64) -> Vec<Triplet> {
    let d = system.dim();
    let reach = system.radius_above(c0).ceil() as i64;
    let mut out = Vec::new();
    for i in 1..=system.generators() {
        for j in 1..=max_depth {
            // cubes within distance reach * 2^-j of [0,1)^d
            let lo = -reach;
            let hi = (1i64 << j) - 1 + reach;
            let side = (hi - lo + 1) as usize;
            for mut n in 0..side.pow(d as u32) {
                let mut k = vec![0i64; d];
                for slot in k.iter_mut().rev() {
                    *slot = lo + (n % side) as i64;
                    n /= side;
                }
                out.push(Triplet { i, j, k });
            }
        }
    }
    out.sort();
    out
}

/// Greedy set-cover search for a dyadic covering of depth at most
/// `max_depth` on a grid with `grid_per_cube` points per axis in each
/// generation-`max_depth` cube. Ties go to the lexicographically smallest
/// `(i, j, k)`, so the result does not depend on thread scheduling.
pub fn find_dyadic_covering(
    system: &WaveletSystem,
    max_depth: u32,
    c0: f64,
    grid_per_cube: usize,
) -> Result<CoveringSearch> {
    if max_depth < 1 {
        return Err(invalid("max_depth must be at least 1"));
    }
    if !(c0 > 0.0) {
        return Err(invalid(format!("c0 must be positive, got {c0}")));
    }
    if grid_per_cube < 2 {
        return Err(invalid("grid_per_cube must be at least 2"));
    }
    let per_axis = grid_per_cube << max_depth;
    let h = 1.0 / per_axis as f64;
    let grid = unit_grid(system.dim(), per_axis);
    let cands = candidates(system, max_depth, c0);

    let coverage: Vec<Vec<usize>> = cands
        .par_iter()
        .map(|t| {
            let threshold = match system.lipschitz() {
                Some(lip) => c0 + lip * (t.j as f64).exp2() * h,
                None => c0,
            };
            grid.iter()
                .enumerate()
                .filter(|(_, x)| eval_triplet(system, t, x).abs() >= threshold)
                .map(|(n, _)| n)
                .collect()
        })
        .collect();

    let mut covered = vec![false; grid.len()];
    let mut remaining = grid.len();
    let mut chosen = Vec::new();
    while remaining > 0 {
        let (best, gain) = coverage
            .iter()
            .enumerate()
            .map(|(c, pts)| (c, pts.iter().filter(|&&n| !covered[n]).count()))
            .fold((usize::MAX, 0), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
        if gain == 0 {
            let witness = covered.iter().position(|&c| !c).expect("uncovered point");
            return Ok(CoveringSearch::NotFound {
                witness: grid[witness].clone(),
            });
        }
        for &n in &coverage[best] {
            if !covered[n] {
                covered[n] = true;
                remaining -= 1;
            }
        }
        chosen.push(cands[best].clone());
    }
    let certified = if system.lipschitz().is_some() {
        Certification::Lipschitz
    } else {
        Certification::GridOnly
    };
    Ok(CoveringSearch::Found(DyadicCovering::new(chosen, c0, certified)?))
}

/// Check a covering on a grid with `per_axis` points per coordinate; returns
/// the first grid point where no triplet reaches `c0`.
pub fn verify_covering(
    system: &WaveletSystem,
    covering: &DyadicCovering,
    per_axis: usize,
) -> Option<Vec<f64>> {
    unit_grid(system.dim(), per_axis).into_iter().find(|x| {
        !covering
            .triplets
            .iter()
            .any(|t| eval_triplet(system, t, x).abs() >= covering.c0)
    })
}

/// Largest `c0` (to bisection precision) for which a covering of the given
/// depth exists on the grid, together with that covering.
pub fn best_c0(
    system: &WaveletSystem,
    max_depth: u32,
    grid_per_cube: usize,
) -> Result<Option<DyadicCovering>> {
    let mut lo = 0.0;
    let mut hi = system.sup_bound();
    let mut best = None;
    if let CoveringSearch::Found(c) = find_dyadic_covering(system, max_depth, hi, grid_per_cube)? {
        return Ok(Some(c));
    }
    for _ in 0..30 {
        let mid = 0.5 * (lo + hi);
        match find_dyadic_covering(system, max_depth, mid, grid_per_cube)? {
            CoveringSearch::Found(c) => {
                lo = mid;
                best = Some(c);
            }
            CoveringSearch::NotFound { .. } => hi = mid,
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn haar_covering() -> DyadicCovering {
        let haar = WaveletSystem::haar(1).unwrap();
        find_dyadic_covering(&haar, 1, 1.0, 4).unwrap().found().unwrap()
    }

    #[test]
    fn haar_depth_one() {
        let c = haar_covering();
        assert_eq!(c.depth, 1);
        assert_eq!(
            c.triplets,
            vec![
                Triplet { i: 1, j: 1, k: vec![0] },
                Triplet { i: 1, j: 1, k: vec![1] }
            ]
        );
        assert_eq!(c.certified, Certification::GridOnly);
    }

    #[test]
    fn schauder_has_no_covering() {
        let s = WaveletSystem::schauder();
        for depth in 1..=4 {
            for c0 in [1e-6, 0.01, 0.2] {
                match find_dyadic_covering(&s, depth, c0, 4).unwrap() {
                    CoveringSearch::NotFound { witness } => assert_eq!(witness, vec![0.0]),
                    CoveringSearch::Found(_) => panic!("schauder covered at depth {depth}"),
                }
            }
        }
    }

    #[test]
    fn indicator_covering() {
        let ind = WaveletSystem::indicator(1, 1).unwrap();
        let c = find_dyadic_covering(&ind, 1, 1.0, 4).unwrap().found().unwrap();
        assert_eq!(c.triplets.len(), 2);
        assert_eq!(c.triplets[0], Triplet { i: 1, j: 1, k: vec![0] });
        assert_eq!(c.triplets[1], Triplet { i: 1, j: 1, k: vec![1] });
    }

    #[test]
    fn haar_in_two_dimensions() {
        let haar = WaveletSystem::haar(2).unwrap();
        let c = find_dyadic_covering(&haar, 1, 1.0, 2).unwrap().found().unwrap();
        assert_eq!(c.triplets.len(), 4);
        assert_eq!(verify_covering(&haar, &c, 64), None);
    }

    #[test]
    fn invalid_arguments() {
        let haar = WaveletSystem::haar(1).unwrap();
        assert!(find_dyadic_covering(&haar, 1, 0.0, 4).is_err());
        assert!(find_dyadic_covering(&haar, 0, 1.0, 4).is_err());
        assert!(find_dyadic_covering(&haar, 1, 1.0, 1).is_err());
    }

    #[test]
    fn covering_maps() {
        let c = haar_covering();
        let lam = DyadicCube::new(2, vec![3]);
        assert_eq!(covering_map(&c, 1, &lam).unwrap(), DyadicCube::new(3, vec![6]));
        assert_eq!(
            covering_map(&c, 2, &DyadicCube::new(1, vec![1])).unwrap(),
            DyadicCube::new(2, vec![3])
        );
        assert_eq!(covering_map(&c, 2, &DyadicCube::root(1)).unwrap(), DyadicCube::new(1, vec![1]));
        assert!(matches!(
            covering_map(&c, 3, &lam),
            Err(Error::TripletOutOfRange { .. })
        ));
        assert!(covering_map(&c, 0, &lam).is_err());
    }

    #[test]
    fn lower_bound_at_points() {
        let haar = WaveletSystem::haar(1).unwrap();
        let c = haar_covering();
        let w = covering_lower_bound_at(&haar, &c, &[0.3], 0).unwrap();
        assert_eq!((w.l, w.value), (1, 1.0));
        let w = covering_lower_bound_at(&haar, &c, &[0.0], 0).unwrap();
        assert_eq!((w.l, w.value), (1, 1.0));
        let w = covering_lower_bound_at(&haar, &c, &[0.7], 3).unwrap();
        assert!(w.cube.contains(&[0.7]));
        assert_eq!(w.cube.j, 4);

        let ind = WaveletSystem::indicator(1, 1).unwrap();
        let ci = find_dyadic_covering(&ind, 1, 1.0, 4).unwrap().found().unwrap();
        for t in 0..50 {
            let x = t as f64 / 50.0;
            assert_eq!(covering_lower_bound_at(&ind, &ci, &[x], 2).unwrap().value, 1.0);
        }
    }

    #[test]
    fn violation_is_reported() {
        let s = WaveletSystem::schauder();
        let fake = DyadicCovering::new(vec![Triplet { i: 1, j: 1, k: vec![0] }], 0.1, Certification::GridOnly).unwrap();
        assert!(matches!(
            covering_lower_bound_at(&s, &fake, &[0.0], 0),
            Err(Error::CoveringViolation { .. })
        ));
    }

    #[test]
    fn daubechies_lipschitz_covering_survives_refinement() {
        let db2 = WaveletSystem::daubechies(2, 10).unwrap();
        let c = find_dyadic_covering(&db2, 2, 0.05, 256)
            .unwrap()
            .found()
            .expect("db2 covers at depth 2");
        assert_eq!(c.certified, Certification::Lipschitz);
        // twice the search resolution
        assert_eq!(verify_covering(&db2, &c, 2 * (256 << 2)), None);
        // map generations grow by exactly j_l
        let lam = DyadicCube::new(5, vec![11]);
        for l in 1..=c.len() {
            let img = covering_map(&c, l, &lam).unwrap();
            assert_eq!(img.j - lam.j, c.triplets[l - 1].j);
        }
    }

    #[test]
    fn best_c0_for_haar_is_one() {
        let haar = WaveletSystem::haar(1).unwrap();
        let c = best_c0(&haar, 1, 4).unwrap().unwrap();
        assert_eq!(c.c0, 1.0);
        assert_eq!(best_c0(&WaveletSystem::schauder(), 2, 4).unwrap(), None);
    }

    #[test]
    fn json_schema() {
        let c = haar_covering();
        let text = c.to_json_string();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["M"], 1);
        assert_eq!(v["certified"], "grid-only");
        assert_eq!(v["triplets"][1]["k"][0], 1);
        assert_eq!(DyadicCovering::from_json_str(&text).unwrap(), c);
        let bad = text.replace("\"M\": 1", "\"M\": 3");
        assert!(DyadicCovering::from_json_str(&bad).is_err());
    }
}
