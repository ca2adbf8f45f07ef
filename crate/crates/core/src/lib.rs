//! Numerical laboratory for the divergence of wavelet series with
//! coefficients in discrete Besov spaces.
//!
//! The crate builds explicit coefficient sequences (hierarchical weights,
//! random saturating fields, lineability combinations, point-divergent and
//! residual witnesses), evaluates partial sums and divergence exponents, and
//! estimates divergence spectra by coefficient counting and box counting.

// `!(x > 0.0)` guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod besov;
pub mod covering;
pub mod divergence;
pub mod dyadic;
pub mod error;
pub mod field;
pub mod generators;
pub mod output;
pub mod params;
pub mod rng;
pub mod spectrum;
pub mod wavelet;

pub use covering::{
    covering_lower_bound_at, covering_map, find_dyadic_covering, Certification, CoveringSearch,
    DyadicCovering, Triplet,
};
pub use divergence::{
    divergence_exponent, partial_sum, profile, scale_term_max, DivergenceProfile,
    EstimatorSettings, FitMode,
};
pub use dyadic::{containing_cube, irreducible, CoeffIndex, DyadicCube};
pub use error::{Error, Result};
pub use field::CoefficientField;
pub use generators::{
    deterministic_e, point_divergent, residual_witness, saturating_random, Combination,
    ResidualWitness, SaturatingConfig,
};
pub use params::BesovParams;
pub use spectrum::{
    alpha_seeds, coefficient_count_spectrum, estimate_spectrum, genericity_experiment,
    theoretical_spectrum, AlphaSeed, SpectrumEstimate,
};
pub use wavelet::{eval_wavelet, WaveletSystem};
