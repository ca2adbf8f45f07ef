use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{invalid, Result};

/// Parameters of a discrete Besov space `b^{s,q}_p` on `R^d`.
///
/// `p` and `q` range over `(0, +inf]`; infinity is stored as `f64::INFINITY`
/// and serialized as the string `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BesovParams {
    pub s: f64,
    #[serde(with = "exponent")]
    pub p: f64,
    #[serde(with = "exponent")]
    pub q: f64,
    pub d: usize,
}

impl BesovParams {
    pub fn new(s: f64, p: f64, q: f64, d: usize) -> Result<Self> {
        let params = Self { s, p, q, d };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.s.is_finite() {
            return Err(invalid(format!("smoothness s must be finite, got {}", self.s)));
        }
        for (name, v) in [("p", self.p), ("q", self.q)] {
            if v.is_nan() || v <= 0.0 {
                return Err(invalid(format!("{name} must lie in (0, inf], got {v}")));
            }
        }
        if self.d == 0 {
            return Err(invalid("dimension d must be at least 1"));
        }
        Ok(())
    }

    /// `d/p`, zero when `p = inf`.
    pub fn d_over_p(&self) -> f64 {
        self.d as f64 / self.p
    }

    /// The critical exponent `d/p - s`: coefficients of a sequence of the
    /// space are at most `C 2^{(d/p - s) j}`.
    pub fn critical(&self) -> f64 {
        self.d_over_p() - self.s
    }

    /// `gamma(alpha) = d/p - s - d/(p alpha)`.
    pub fn gamma_alpha(&self, alpha: f64) -> f64 {
        self.critical() - self.d_over_p() / alpha
    }
}

/// Serde adapter for exponents in `(0, +inf]`.
pub mod exponent {
    use super::*;

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &f64, ser: S) -> std::result::Result<S::Ok, S::Error> {
        if v.is_infinite() && *v > 0.0 {
            ser.serialize_str("inf")
        } else {
            ser.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> std::result::Result<f64, D::Error> {
        match Repr::deserialize(de)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) if matches!(t.as_str(), "inf" | "+inf" | "Infinity") => Ok(f64::INFINITY),
            Repr::Text(t) => Err(serde::de::Error::custom(format!("bad exponent {t:?}"))),
        }
    }
}

/// Parse an exponent given on a command line or in a config (`"inf"` allowed).
pub fn parse_exponent(text: &str) -> Result<f64> {
    match text.trim() {
        "inf" | "+inf" | "Infinity" => Ok(f64::INFINITY),
        t => t
            .parse::<f64>()
            .map_err(|_| invalid(format!("bad exponent {t:?}"))),
    }
}
