//! Pointwise-evaluable wavelet systems `{ψ^(i)}`.
//!
//! Generators are evaluated in local coordinates: `ψ^(i)_{j,k}(x)` is
//! `ψ^(i)(2^j x - k)`. Nothing here assumes orthogonality.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::dyadic::CoeffIndex;
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone)]
enum Kind {
    /// Tensor Haar system: generator `i` picks `ψ` on the coordinates whose
    /// bit is set in `i` and the indicator of `[0,1)` elsewhere.
    Haar,
    /// Tent `min(y, 1 - y)` on `[0, 1]`.
    Schauder,
    /// `N` copies of the indicator of `[0,1)^d`.
    Indicator,
    /// Tabulated compactly supported wavelet from the cascade algorithm.
    Cascade(Arc<CascadeTable>),
    /// Mexican hat `(1 - y^2) exp(-y^2 / 2)`.
    Ricker,
}

/// A finite family of bounded generators with decay metadata.
#[derive(Debug, Clone)]
pub struct WaveletSystem {
    name: String,
    d: usize,
    n: u32,
    kind: Kind,
    /// Per-coordinate interval `[lo, hi]` outside of which every generator
    /// vanishes.
    support: Option<(f64, f64)>,
    /// Pairs `(C, N)` with `|ψ(y)| <= C / (1 + |y|)^N`.
    decay: Vec<(f64, f64)>,
    /// Lipschitz constant with respect to the sup norm, when one is known.
    lipschitz: Option<f64>,
    sup_bound: f64,
    approximate: bool,
}

impl WaveletSystem {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Number of generators `N`.
    pub fn generators(&self) -> u32 {
        self.n
    }

    pub fn support(&self) -> Option<(f64, f64)> {
        self.support
    }

    /// Largest `|y|` in the support (per coordinate), if compact.
    pub fn support_radius(&self) -> Option<f64> {
        self.support.map(|(lo, hi)| lo.abs().max(hi.abs()))
    }

    pub fn decay(&self) -> &[(f64, f64)] {
        &self.decay
    }

    pub fn lipschitz(&self) -> Option<f64> {
        self.lipschitz
    }

    /// `sup |ψ^(i)|` over all generators.
    pub fn sup_bound(&self) -> f64 {
        self.sup_bound
    }

    /// True when evaluation goes through a tabulated approximation.
    pub fn is_approximate(&self) -> bool {
        self.approximate
    }

    /// `ψ^(i)(y)` for a 1-based generator index.
    ///
    /// # Panics
    /// If `i` is out of range or `y` has the wrong length; use
    /// [`eval_wavelet`] for a checked entry point.
    pub fn eval(&self, i: u32, y: &[f64]) -> f64 {
        assert!(i >= 1 && i <= self.n, "generator {i} out of range");
        assert_eq!(y.len(), self.d);
        match &self.kind {
            Kind::Haar => y
                .iter()
                .enumerate()
                .map(|(r, &t)| {
                    let bit = (i >> (self.d - 1 - r)) & 1;
                    if bit == 1 {
                        haar_psi(t)
                    } else {
                        unit_indicator(t)
                    }
                })
                .product(),
            Kind::Schauder => tent(y[0]),
            Kind::Indicator => y.iter().map(|&t| unit_indicator(t)).product(),
            Kind::Cascade(table) => table.psi(y[0]),
            Kind::Ricker => {
                let t2 = y[0] * y[0];
                (1.0 - t2) * (-0.5 * t2).exp()
            }
        }
    }

    fn check_generator(&self, i: u32) -> Result<()> {
        if i == 0 || i > self.n {
            return Err(Error::GeneratorOutOfRange {
                index: i,
                count: self.n,
            });
        }
        Ok(())
    }

    /// Radius `r` such that `|ψ(y)| < level` whenever some coordinate has
    /// `|y_r| > r`. Exact for compactly supported systems.
    pub fn radius_above(&self, level: f64) -> f64 {
        if let Some(r) = self.support_radius() {
            return r;
        }
        self.decay
            .iter()
            .map(|&(c, n)| ((c / level).powf(1.0 / n) - 1.0).max(0.0))
            .fold(f64::INFINITY, f64::min)
    }

    /// Window radius `R` for term enumeration: exact support for compact
    /// systems; otherwise the smallest integer whose neglected tail, per unit
    /// coefficient bound, is at most `2^-40` according to the decay pairs.
    pub fn default_window(&self) -> f64 {
        if let Some(r) = self.support_radius() {
            return r;
        }
        let tol = (-40f64).exp2();
        let d = self.d as f64;
        let mut best = f64::INFINITY;
        for &(c, n) in &self.decay {
            if n <= d {
                continue;
            }
            // sum over lattice points outside the box of half-width R,
            // bounded by 2 d C (2R + 3)^(d-1) R^(1-N) / (N - 1)
            let mut r = 1.0f64;
            while r < 1e6 {
                let tail = 2.0 * d * c * (2.0 * r + 3.0).powf(d - 1.0) * r.powf(1.0 - n) / (n - 1.0);
                if tail <= tol {
                    break;
                }
                r += 1.0;
            }
            best = best.min(r);
        }
        best
    }

    /// Positions `k` along one coordinate with `ψ(2^j x - k)` possibly
    /// nonzero (compact systems) or within `radius` (decaying systems).
    pub fn window_1d(&self, xr: f64, j: u32, radius: f64) -> std::ops::RangeInclusive<i64> {
        let t = xr * (j as f64).exp2();
        match self.support {
            Some((lo, hi)) => (t - hi).ceil() as i64..=(t - lo).floor() as i64,
            None => (t - radius).ceil() as i64..=(t + radius).floor() as i64,
        }
    }

    /// Haar system on `R^d`: `2^d - 1` tensor generators.
    pub fn haar(d: usize) -> Result<Self> {
        if d == 0 || d > 16 {
            return Err(invalid(format!("unsupported Haar dimension {d}")));
        }
        Ok(Self {
            name: "haar".into(),
            d,
            n: (1u32 << d) - 1,
            kind: Kind::Haar,
            support: Some((0.0, 1.0)),
            decay: vec![(2f64.powi(d as i32 + 1), d as f64 + 1.0)],
            lipschitz: None,
            sup_bound: 1.0,
            approximate: false,
        })
    }

    /// Schauder system on `R`: the tent `min(y, 1 - y)` on `[0, 1]`.
    pub fn schauder() -> Self {
        Self {
            name: "schauder".into(),
            d: 1,
            n: 1,
            kind: Kind::Schauder,
            support: Some((0.0, 1.0)),
            decay: vec![(2.0, 2.0)],
            lipschitz: Some(1.0),
            sup_bound: 0.5,
            approximate: false,
        }
    }

    /// `N` copies of the indicator of `[0,1)^d`.
    pub fn indicator(n: u32, d: usize) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(invalid("indicator system needs N >= 1 and d >= 1"));
        }
        Ok(Self {
            name: "indicator".into(),
            d,
            n,
            kind: Kind::Indicator,
            support: Some((0.0, 1.0)),
            decay: vec![(2f64.powi(d as i32 + 1), d as f64 + 1.0)],
            lipschitz: None,
            sup_bound: 1.0,
            approximate: false,
        })
    }

    /// Daubechies wavelet with `vanishing` moments (2 or 3), tabulated by the
    /// cascade algorithm at resolution `2^-resolution` and linearly
    /// interpolated. The reported Lipschitz constant is that of the
    /// interpolant, so coverings certified against it are exact for the
    /// approximation, not for the limit function.
    pub fn daubechies(vanishing: usize, resolution: u32) -> Result<Self> {
        let h = daubechies_filter(vanishing)
            .ok_or_else(|| invalid(format!("no Daubechies filter with {vanishing} moments")))?;
        if !(2..=16).contains(&resolution) {
            return Err(invalid("cascade resolution must lie in 2..=16"));
        }
        let table = CascadeTable::build(h, resolution)?;
        let len = (h.len() - 1) as f64;
        Ok(Self {
            name: format!("db{vanishing}"),
            d: 1,
            n: 1,
            sup_bound: table.sup(),
            lipschitz: Some(table.lipschitz()),
            kind: Kind::Cascade(Arc::new(table)),
            support: Some((0.0, len)),
            decay: vec![],
            approximate: true,
        })
    }

    /// Mexican hat wavelet, a non-compact system with fast decay.
    pub fn ricker() -> Self {
        let f = |y: f64| (1.0 - y * y) * (-0.5 * y * y).exp();
        let df = |y: f64| (y * y * y - 3.0 * y) * (-0.5 * y * y).exp();
        // dense scans; the margins absorb the sampling error of smooth maxima
        let scan = |g: &dyn Fn(f64) -> f64| {
            (0..=200_000)
                .map(|t| g(t as f64 * 2e-4))
                .fold(0.0f64, |m, v| m.max(v.abs()))
        };
        let decay = [4.0, 8.0, 12.0, 16.0, 20.0]
            .iter()
            .map(|&n| (scan(&|y| f(y) * (1.0 + y).powf(n)) * 1.01, n))
            .collect();
        Self {
            name: "ricker".into(),
            d: 1,
            n: 1,
            kind: Kind::Ricker,
            support: None,
            decay,
            lipschitz: Some(scan(&df) * 1.01),
            sup_bound: 1.0,
            approximate: false,
        }
    }

    /// Look a system up by name: `haar`, `schauder`, `indicator`, `db2`,
    /// `db3`, `ricker`.
    pub fn by_name(name: &str, d: usize, generators: u32) -> Result<Self> {
        let one_dim = |sys: WaveletSystem| {
            if d != 1 {
                Err(invalid(format!("system {name} is only defined for d = 1")))
            } else {
                Ok(sys)
            }
        };
        match name {
            "haar" => Self::haar(d),
            "schauder" => one_dim(Self::schauder()),
            "indicator" => Self::indicator(generators.max(1), d),
            "db2" => one_dim(Self::daubechies(2, 12)?),
            "db3" => one_dim(Self::daubechies(3, 12)?),
            "ricker" => one_dim(Self::ricker()),
            other => Err(invalid(format!("unknown wavelet system {other:?}"))),
        }
    }
}

impl fmt::Display for WaveletSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (d={}, N={})", self.name, self.d, self.n)
    }
}

/// `ψ^(i)_{j,k}(x) = ψ^(i)(2^j x - k)`.
pub fn eval_wavelet(system: &WaveletSystem, idx: &CoeffIndex, x: &[f64]) -> Result<f64> {
    system.check_generator(idx.i)?;
    if idx.cube.dim() != system.dim() || x.len() != system.dim() {
        return Err(Error::DimensionMismatch {
            expected: system.dim(),
            found: if x.len() != system.dim() { x.len() } else { idx.cube.dim() },
        });
    }
    let scale = (idx.cube.j as f64).exp2();
    let y: Vec<f64> = x
        .iter()
        .zip(&idx.cube.k)
        .map(|(&xr, &kr)| xr * scale - kr as f64)
        .collect();
    Ok(system.eval(idx.i, &y))
}

fn unit_indicator(t: f64) -> f64 {
    if (0.0..1.0).contains(&t) {
        1.0
    } else {
        0.0
    }
}

fn haar_psi(t: f64) -> f64 {
    if (0.0..0.5).contains(&t) {
        1.0
    } else if (0.5..1.0).contains(&t) {
        -1.0
    } else {
        0.0
    }
}

fn tent(t: f64) -> f64 {
    if (0.0..=1.0).contains(&t) {
        t.min(1.0 - t)
    } else {
        0.0
    }
}

fn daubechies_filter(vanishing: usize) -> Option<&'static [f64]> {
    const DB2: [f64; 4] = [
        0.482_962_913_144_690_25,
        0.836_516_303_737_469,
        0.224_143_868_041_857_35,
        -0.129_409_522_550_921_45,
    ];
    const DB3: [f64; 6] = [
        0.332_670_552_950_956_9,
        0.806_891_509_313_338_8,
        0.459_877_502_119_331_3,
        -0.135_011_020_010_390_84,
        -0.085_441_273_882_241_49,
        0.035_226_291_882_100_656,
    ];
    match vanishing {
        2 => Some(&DB2),
        3 => Some(&DB3),
        _ => None,
    }
}

/// Values of a compactly supported wavelet on the grid `n / 2^R`.
#[derive(Debug)]
struct CascadeTable {
    resolution: u32,
    psi: Vec<f64>,
}

impl CascadeTable {
    fn build(h: &[f64], resolution: u32) -> Result<Self> {
        let taps = h.len();
        let len = taps - 1;
        let s2 = std::f64::consts::SQRT_2;

        // φ at the integers 0..=len: eigenvector of A = [√2 h_{2n-m}] for the
        // eigenvalue 1, normalized to sum 1. Solved as least squares on the
        // stacked system [A - I; 1^T] v = [0; 1].
        let m = len + 1;
        let mut a = DMatrix::<f64>::zeros(m + 1, m);
        for n in 0..m {
            for col in 0..m {
                let idx = 2 * n as i64 - col as i64;
                if (0..taps as i64).contains(&idx) {
                    a[(n, col)] = s2 * h[idx as usize];
                }
            }
            a[(n, n)] -= 1.0;
        }
        for col in 0..m {
            a[(m, col)] = 1.0;
        }
        let mut rhs = DVector::<f64>::zeros(m + 1);
        rhs[m] = 1.0;
        let phi0 = a
            .svd(true, true)
            .solve(&rhs, 1e-12)
            .map_err(|e| invalid(format!("cascade initialization failed: {e}")))?;

        // dyadic refinement φ(x) = √2 Σ h_k φ(2x - k)
        let mut phi: Vec<f64> = phi0.iter().copied().collect();
        for level in 1..=resolution + 1 {
            let size = len * (1usize << level) + 1;
            let half = 1i64 << (level - 1);
            let mut next = vec![0.0; size];
            for (n, slot) in next.iter_mut().enumerate() {
                if n % 2 == 0 {
                    *slot = phi[n / 2];
                } else {
                    *slot = h
                        .iter()
                        .enumerate()
                        .map(|(k, &hk)| {
                            let idx = n as i64 - k as i64 * half;
                            if idx >= 0 && (idx as usize) < phi.len() {
                                s2 * hk * phi[idx as usize]
                            } else {
                                0.0
                            }
                        })
                        .sum();
                }
            }
            phi = next;
        }
        // phi now sits on the grid n / 2^(R+1); ψ(x) = √2 Σ g_k φ(2x - k)
        // with g_k = (-1)^k h_{len-k}, tabulated on n / 2^R
        let fine = 1i64 << (resolution + 1);
        let psi = (0..=len * (1usize << resolution))
            .map(|n| {
                (0..taps)
                    .map(|k| {
                        let g = if k % 2 == 0 { h[len - k] } else { -h[len - k] };
                        let idx = 2 * n as i64 * 2 - k as i64 * fine;
                        if idx >= 0 && (idx as usize) < phi.len() {
                            s2 * g * phi[idx as usize]
                        } else {
                            0.0
                        }
                    })
                    .sum()
            })
            .collect();
        Ok(Self { resolution, psi })
    }

    fn psi(&self, x: f64) -> f64 {
        let t = x * (self.resolution as f64).exp2();
        if !(t >= 0.0) {
            return 0.0;
        }
        let i0 = t.floor() as usize;
        if i0 + 1 >= self.psi.len() {
            return if i0 + 1 == self.psi.len() && t == i0 as f64 {
                self.psi[i0]
            } else {
                0.0
            };
        }
        let frac = t - i0 as f64;
        self.psi[i0] * (1.0 - frac) + self.psi[i0 + 1] * frac
    }

    fn sup(&self) -> f64 {
        self.psi.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    fn lipschitz(&self) -> f64 {
        let step = (self.resolution as f64).exp2();
        self.psi
            .windows(2)
            .fold(0.0, |m, w| m.max((w[1] - w[0]).abs() * step))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn haar_pointwise() {
        let haar = WaveletSystem::haar(1).unwrap();
        let v = eval_wavelet(&haar, &CoeffIndex::new(1, 1, vec![0]), &[0.3]).unwrap();
        assert_eq!(v, -1.0);
        let v = eval_wavelet(&haar, &CoeffIndex::new(1, 0, vec![0]), &[0.25]).unwrap();
        assert_eq!(v, 1.0);
        for t in 0..200 {
            let y = -0.5 + t as f64 / 100.0;
            let expected = if (0.0..0.5).contains(&y) {
                1.0
            } else if (0.5..1.0).contains(&y) {
                -1.0
            } else {
                0.0
            };
            assert_eq!(haar.eval(1, &[y]), expected);
        }
        assert_eq!(haar.generators(), 1);
        assert_eq!(haar.support(), Some((0.0, 1.0)));
    }

    #[test]
    fn haar_tensor_generators() {
        let haar = WaveletSystem::haar(2).unwrap();
        assert_eq!(haar.generators(), 3);
        // i = 1 -> (φ, ψ), i = 2 -> (ψ, φ), i = 3 -> (ψ, ψ)
        assert_eq!(haar.eval(1, &[0.7, 0.7]), -1.0);
        assert_eq!(haar.eval(2, &[0.7, 0.2]), -1.0);
        assert_eq!(haar.eval(3, &[0.7, 0.7]), 1.0);
        assert_eq!(haar.eval(3, &[0.2, 0.7]), -1.0);
    }

    #[test]
    fn schauder_vanishes_at_integers() {
        let s = WaveletSystem::schauder();
        let v = eval_wavelet(&s, &CoeffIndex::new(1, 0, vec![0]), &[0.25]).unwrap();
        assert_eq!(v, 0.25);
        for n in -5..=5 {
            assert_eq!(s.eval(1, &[n as f64]), 0.0);
        }
    }

    #[test]
    fn indicator_is_unit_cube() {
        let ind = WaveletSystem::indicator(1, 1).unwrap();
        assert_eq!(ind.eval(1, &[0.0]), 1.0);
        assert_eq!(ind.eval(1, &[0.999]), 1.0);
        assert_eq!(ind.eval(1, &[1.0]), 0.0);
        assert_eq!(ind.eval(1, &[-0.01]), 0.0);
    }

    #[test]
    fn out_of_range_generator_is_an_error() {
        let haar = WaveletSystem::haar(1).unwrap();
        assert!(matches!(
            eval_wavelet(&haar, &CoeffIndex::new(2, 0, vec![0]), &[0.1]),
            Err(Error::GeneratorOutOfRange { .. })
        ));
    }

    #[test]
    fn daubechies_cascade_is_sane() {
        let db2 = WaveletSystem::daubechies(2, 10).unwrap();
        assert_eq!(db2.support(), Some((0.0, 3.0)));
        assert_eq!(db2.eval(1, &[-0.1]), 0.0);
        assert_eq!(db2.eval(1, &[3.5]), 0.0);
        // zero mean and unit L2 norm, by trapezoid quadrature on the table
        let n = 3 * 4096;
        let h = 3.0 / n as f64;
        let vals: Vec<f64> = (0..=n).map(|t| db2.eval(1, &[t as f64 * h])).collect();
        let mean: f64 = vals.iter().sum::<f64>() * h;
        let energy: f64 = vals.iter().map(|v| v * v).sum::<f64>() * h;
        assert_abs_diff_eq!(mean, 0.0, epsilon = 1e-3);
        assert_abs_diff_eq!(energy, 1.0, epsilon = 1e-2);
        assert!(db2.sup_bound() > 1.0 && db2.sup_bound() < 2.0);
    }

    #[test]
    fn ricker_decay_pairs_bound_the_function() {
        let r = WaveletSystem::ricker();
        for t in 0..4000 {
            let y = t as f64 * 0.01;
            let v = r.eval(1, &[y]).abs();
            for &(c, n) in r.decay() {
                assert!(v <= c / (1.0 + y).powf(n));
            }
        }
        let w = r.default_window();
        assert!(w > 3.0 && w < 64.0, "window {w}");
    }

    #[test]
    fn windows_cover_the_support() {
        let haar = WaveletSystem::haar(1).unwrap();
        let w = haar.window_1d(0.3, 3, 1.0);
        // 2.4 - k in [0, 1] -> k in {2}
        assert_eq!(w, 2..=2);
        let db2 = WaveletSystem::daubechies(2, 8).unwrap();
        assert_eq!(db2.window_1d(0.3, 3, 3.0), 0..=2);
    }

    #[test]
    fn by_name_rejects_unknown_and_bad_dims() {
        assert!(WaveletSystem::by_name("haar", 2, 1).is_ok());
        assert!(WaveletSystem::by_name("schauder", 2, 1).is_err());
        assert!(WaveletSystem::by_name("morlet", 1, 1).is_err());
    }
}
