//! Dyadic cubes and coefficient addressing.
//!
//! A cube of generation `j` at position `k` is the half-open box
//! `[k_1/2^j, (k_1+1)/2^j) x ... x [k_d/2^j, (k_d+1)/2^j)`. Positions may be
//! negative or exceed `2^j - 1`: coverings and translates address cubes
//! outside the unit cube.

use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DyadicCube {
    pub j: u32,
    pub k: Vec<i64>,
}

impl DyadicCube {
    pub fn new(j: u32, k: Vec<i64>) -> Self {
        Self { j, k }
    }

    /// The unit cube `[0,1)^d`.
    pub fn root(d: usize) -> Self {
        Self { j: 0, k: vec![0; d] }
    }

    pub fn dim(&self) -> usize {
        self.k.len()
    }

    /// Side length `2^-j`.
    pub fn width(&self) -> f64 {
        (-(self.j as f64)).exp2()
    }

    /// Lower corner `k / 2^j`.
    pub fn corner(&self) -> Vec<f64> {
        let w = self.width();
        self.k.iter().map(|&k| k as f64 * w).collect()
    }

    /// Half-open containment test.
    pub fn contains(&self, x: &[f64]) -> bool {
        let scale = (self.j as f64).exp2();
        x.len() == self.k.len()
            && x
                .iter()
                .zip(&self.k)
                .all(|(&xi, &ki)| (xi * scale).floor() as i64 == ki)
    }

    /// Whether the cube lies inside `[0,1)^d`.
    pub fn in_unit_cube(&self) -> bool {
        let n = 1i64 << self.j;
        self.k.iter().all(|&k| (0..n).contains(&k))
    }

    /// Whether `other` is this cube or one of its descendants.
    pub fn is_ancestor_of(&self, other: &DyadicCube) -> bool {
        other.j >= self.j
            && other.dim() == self.dim()
            && other.ancestor_at(self.j).as_ref() == Some(self)
    }

    /// The `2^d` children in lexicographic order of the offset vector.
    pub fn children(&self) -> Vec<DyadicCube> {
        let d = self.dim();
        (0..1u64 << d)
            .map(|m| {
                let k = self
                    .k
                    .iter()
                    .enumerate()
                    .map(|(r, &k)| 2 * k + ((m >> (d - 1 - r)) & 1) as i64)
                    .collect();
                DyadicCube { j: self.j + 1, k }
            })
            .collect()
    }

    /// `None` for generation-0 cubes.
    pub fn parent(&self) -> Option<DyadicCube> {
        self.ancestor_at(self.j.checked_sub(1)?)
    }

    /// The generation-`j0` cube containing this one; `None` if `j0 > j`.
    pub fn ancestor_at(&self, j0: u32) -> Option<DyadicCube> {
        if j0 > self.j {
            return None;
        }
        let shift = self.j - j0;
        let k = self.k.iter().map(|&k| k >> shift).collect();
        Some(DyadicCube { j: j0, k })
    }

    /// Irreducible representation of the corner, see [`irreducible`].
    pub fn irreducible(&self) -> (u32, Vec<i64>) {
        irreducible(self.j, &self.k)
    }
}

impl fmt::Display for DyadicCube {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(j={}, k={:?})", self.j, self.k)
    }
}

/// Reduce `k / 2^j` to `k' / 2^J` with `J` minimal, i.e. the components of
/// `k'` are not all even. The zero vector reduces to `(0, 0)`.
pub fn irreducible(j: u32, k: &[i64]) -> (u32, Vec<i64>) {
    if k.iter().all(|&c| c == 0) {
        return (0, vec![0; k.len()]);
    }
    // trailing zeros shared by all components
    let common = k
        .iter()
        .filter(|&&c| c != 0)
        .map(|&c| c.trailing_zeros())
        .min()
        .unwrap_or(0)
        .min(j);
    (j - common, k.iter().map(|&c| c >> common).collect())
}

/// The generation-`j` cube containing `x` (half-open semantics).
pub fn containing_cube(x: &[f64], j: u32) -> DyadicCube {
    let scale = (j as f64).exp2();
    DyadicCube {
        j,
        k: x.iter().map(|&xi| (xi * scale).floor() as i64).collect(),
    }
}

/// Coefficient address: generator `i` (1-based) and cube `λ`.
///
/// Ordering is by generation, then generator, then position, so that a sorted
/// map enumerates each `Λ_j` lexicographically in `(i, k)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CoeffIndex {
    pub i: u32,
    pub cube: DyadicCube,
}

impl CoeffIndex {
    pub fn new(i: u32, j: u32, k: Vec<i64>) -> Self {
        Self {
            i,
            cube: DyadicCube::new(j, k),
        }
    }

    pub fn j(&self) -> u32 {
        self.cube.j
    }
}

impl Ord for CoeffIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.cube
            .j
            .cmp(&other.cube.j)
            .then(self.i.cmp(&other.i))
            .then_with(|| self.cube.k.cmp(&other.cube.k))
    }
}

impl PartialOrd for CoeffIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// All generation-`j` positions inside `[0,1)^d`, lexicographic.
pub fn unit_positions(d: usize, j: u32) -> impl Iterator<Item = Vec<i64>> {
    let side = 1i64 << j;
    let total = (side as u128).pow(d as u32);
    (0..total).map(move |mut n| {
        let mut k = vec![0i64; d];
        for slot in k.iter_mut().rev() {
            *slot = (n % side as u128) as i64;
            n /= side as u128;
        }
        k
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_irreducible(j: u32, k: &[i64]) -> (u32, Vec<i64>) {
        let mut jj = j;
        let mut kk = k.to_vec();
        while jj > 0 && kk.iter().all(|c| c % 2 == 0) {
            kk.iter_mut().for_each(|c| *c /= 2);
            jj -= 1;
        }
        if kk.iter().all(|&c| c == 0) {
            return (0, kk);
        }
        (jj, kk)
    }

    #[test]
    fn irreducible_examples() {
        assert_eq!(irreducible(3, &[4]), (1, vec![1]));
        assert_eq!(irreducible(5, &[7]), (5, vec![7]));
        assert_eq!(irreducible(3, &[4, 6]), (2, vec![2, 3]));
        assert_eq!(irreducible(4, &[0]), (0, vec![0]));
        assert_eq!(irreducible(0, &[0, 0]), (0, vec![0, 0]));
    }

    #[test]
    fn tree_relations() {
        let c = DyadicCube::new(3, vec![5]);
        assert_eq!(c.parent(), Some(DyadicCube::new(2, vec![2])));
        assert_eq!(
            DyadicCube::new(4, vec![13]).ancestor_at(0),
            Some(DyadicCube::new(0, vec![0]))
        );
        assert_eq!(DyadicCube::new(2, vec![1]).ancestor_at(3), None);
        assert_eq!(DyadicCube::root(1).parent(), None);

        let kids = DyadicCube::root(2).children();
        let expected: Vec<_> = [[0, 0], [0, 1], [1, 0], [1, 1]]
            .iter()
            .map(|k| DyadicCube::new(1, k.to_vec()))
            .collect();
        assert_eq!(kids, expected);
    }

    #[test]
    fn negative_positions_use_floor() {
        let c = DyadicCube::new(2, vec![-3]);
        assert_eq!(c.parent(), Some(DyadicCube::new(1, vec![-2])));
        assert!(c.contains(&[-0.75]));
        assert!(!c.contains(&[-0.5]));
    }

    #[test]
    fn containing_cube_examples() {
        assert_eq!(containing_cube(&[0.3], 2), DyadicCube::new(2, vec![1]));
        assert_eq!(containing_cube(&[0.0], 5), DyadicCube::new(5, vec![0]));
        assert_eq!(
            containing_cube(&[0.5, 0.5], 1),
            DyadicCube::new(1, vec![1, 1])
        );
        // boundary belongs to the right-hand cube
        assert_eq!(containing_cube(&[0.25], 2), DyadicCube::new(2, vec![1]));
    }

    #[test]
    fn coeff_index_order_is_scale_then_generator() {
        let a = CoeffIndex::new(2, 1, vec![0]);
        let b = CoeffIndex::new(1, 2, vec![0]);
        let c = CoeffIndex::new(1, 1, vec![1]);
        let mut v = vec![b.clone(), a.clone(), c.clone()];
        v.sort();
        assert_eq!(v, vec![c, a, b]);
    }

    #[test]
    fn unit_positions_enumerates_lexicographically() {
        let v: Vec<_> = unit_positions(2, 1).collect();
        assert_eq!(v, vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);
        assert_eq!(unit_positions(1, 4).count(), 16);
    }

    proptest! {
        #[test]
        fn irreducible_matches_repeated_halving(j in 0u32..20, seed in any::<u64>(), d in 1usize..4) {
            let side = 1u64 << j;
            let k: Vec<i64> = (0..d)
                .map(|r| ((seed.rotate_left(17 * r as u32)) % side) as i64)
                .collect();
            let (jj, kk) = irreducible(j, &k);
            prop_assert_eq!((jj, kk.clone()), brute_irreducible(j, &k));
            prop_assert!(jj <= j);
            // same rational point
            for (a, b) in k.iter().zip(&kk) {
                prop_assert_eq!(*a as i128 * (1i128 << jj), *b as i128 * (1i128 << j));
            }
        }

        #[test]
        fn children_never_reduce_generation_of_irreducible(j in 0u32..16, k in 0i64..(1 << 16), d in 1usize..3) {
            let k = k % (1i64 << j);
            let cube = DyadicCube::new(j, vec![k; d]);
            let parent_j = cube.irreducible().0;
            for child in cube.children() {
                prop_assert!(child.irreducible().0 >= parent_j);
                prop_assert_eq!(child.parent(), Some(cube.clone()));
            }
        }

        #[test]
        fn containing_cube_is_consistent_across_scales(x in 0.0f64..1.0, y in -3.0f64..3.0, j in 0u32..30) {
            let p = [x, y];
            let fine = containing_cube(&p, j + 1);
            prop_assert!(fine.contains(&p));
            prop_assert_eq!(fine.ancestor_at(j), Some(containing_cube(&p, j)));
        }
    }
}
