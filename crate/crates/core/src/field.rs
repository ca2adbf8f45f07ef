//! Finite sparse coefficient fields `{c^(i)_λ}` and their JSON form.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::ops::Bound;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::dyadic::{CoeffIndex, DyadicCube};
use crate::error::{invalid, Error, Result};
use crate::params::{exponent, BesovParams};

/// A finite family of wavelet coefficients up to scale `jmax`.
///
/// Absent entries are zero. Stored zeros are dropped on insertion, so two
/// fields with the same nonzero coefficients compare equal.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientField {
    pub params: BesovParams,
    pub jmax: u32,
    entries: BTreeMap<CoeffIndex, f64>,
    /// Free-form provenance written alongside the coefficients.
    pub meta: BTreeMap<String, Value>,
}

impl CoefficientField {
    pub fn new(params: BesovParams, jmax: u32) -> Self {
        Self {
            params,
            jmax,
            entries: BTreeMap::new(),
            meta: BTreeMap::new(),
        }
    }

    pub fn d(&self) -> usize {
        self.params.d
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Set a coefficient; a zero value clears the entry.
    pub fn set(&mut self, idx: CoeffIndex, v: f64) -> Result<()> {
        self.check_index(&idx)?;
        if !v.is_finite() {
            return Err(invalid(format!("non-finite coefficient at {idx:?}")));
        }
        if v == 0.0 {
            self.entries.remove(&idx);
        } else {
            self.entries.insert(idx, v);
        }
        Ok(())
    }

    fn check_index(&self, idx: &CoeffIndex) -> Result<()> {
        if idx.i == 0 {
            return Err(invalid("generator indices are 1-based"));
        }
        if idx.cube.dim() != self.d() {
            return Err(Error::DimensionMismatch {
                expected: self.d(),
                found: idx.cube.dim(),
            });
        }
        if idx.cube.j > self.jmax {
            return Err(invalid(format!(
                "scale {} exceeds Jmax = {}",
                idx.cube.j, self.jmax
            )));
        }
        Ok(())
    }

    pub fn get(&self, idx: &CoeffIndex) -> f64 {
        self.entries.get(idx).copied().unwrap_or(0.0)
    }

    pub fn get_at(&self, i: u32, cube: &DyadicCube) -> f64 {
        // The map is keyed by owned indices; building one is cheap for small d.
        self.get(&CoeffIndex {
            i,
            cube: cube.clone(),
        })
    }

    /// All nonzero entries in `(j, i, k)` order.
    pub fn iter(&self) -> impl Iterator<Item = (&CoeffIndex, f64)> {
        self.entries.iter().map(|(k, v)| (k, *v))
    }

    /// Nonzero entries of `Λ_j`, lexicographic in `(i, k)`.
    pub fn scale(&self, j: u32) -> impl Iterator<Item = (&CoeffIndex, f64)> {
        let lo = CoeffIndex::new(0, j, Vec::new());
        let range = match j.checked_add(1) {
            Some(next) => self.entries.range((
                Bound::Included(lo),
                Bound::Excluded(CoeffIndex::new(0, next, Vec::new())),
            )),
            None => self.entries.range((Bound::Included(lo), Bound::Unbounded)),
        };
        range.map(|(k, v)| (k, *v))
    }

    /// Largest generator index present (0 for an empty field).
    pub fn max_generator(&self) -> u32 {
        self.entries.keys().map(|k| k.i).max().unwrap_or(0)
    }

    /// Whether every nonzero coefficient sits on a cube inside `[0,1)^d`.
    pub fn supported_in_unit_cube(&self) -> bool {
        self.entries.keys().all(|k| k.cube.in_unit_cube())
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.values().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Entrywise `t * self`.
    pub fn scaled(&self, t: f64) -> CoefficientField {
        let mut out = CoefficientField::new(self.params, self.jmax);
        if t != 0.0 {
            out.entries = self
                .entries
                .iter()
                .map(|(k, v)| (k.clone(), v * t))
                .filter(|(_, v)| *v != 0.0)
                .collect();
        }
        out
    }

    /// Entrywise sum; `Jmax` is the larger of the two and parameters are
    /// taken from `self`.
    pub fn added(&self, other: &CoefficientField) -> Result<CoefficientField> {
        if self.d() != other.d() {
            return Err(Error::DimensionMismatch {
                expected: self.d(),
                found: other.d(),
            });
        }
        let mut out = self.clone();
        out.meta.clear();
        out.jmax = self.jmax.max(other.jmax);
        for (k, v) in other.iter() {
            let sum = out.get(k) + v;
            out.set(k.clone(), sum)?;
        }
        Ok(out)
    }

    pub fn to_json_value(&self) -> Value {
        serde_json::to_value(FieldFile::from(self)).expect("field serializes")
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&FieldFile::from(self)).expect("field serializes") + "\n"
    }

    pub fn write_json<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(self.to_json_string().as_bytes())?;
        Ok(())
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: FieldFile = serde_json::from_str(text)?;
        file.try_into()
    }

    pub fn read_json<R: Read>(mut r: R) -> Result<Self> {
        let mut text = String::new();
        r.read_to_string(&mut text)?;
        Self::from_json_str(&text)
    }
}

#[derive(Serialize, Deserialize)]
struct EntryRecord {
    i: u32,
    j: u32,
    k: Vec<i64>,
    v: f64,
}

#[derive(Serialize, Deserialize)]
struct FieldFile {
    d: usize,
    #[serde(rename = "Jmax")]
    jmax: u32,
    s: f64,
    #[serde(with = "exponent")]
    p: f64,
    #[serde(with = "exponent")]
    q: f64,
    entries: Vec<EntryRecord>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    meta: BTreeMap<String, Value>,
}

impl From<&CoefficientField> for FieldFile {
    fn from(f: &CoefficientField) -> Self {
        FieldFile {
            d: f.d(),
            jmax: f.jmax,
            s: f.params.s,
            p: f.params.p,
            q: f.params.q,
            entries: f
                .iter()
                .map(|(idx, v)| EntryRecord {
                    i: idx.i,
                    j: idx.cube.j,
                    k: idx.cube.k.clone(),
                    v,
                })
                .collect(),
            meta: f.meta.clone(),
        }
    }
}

impl TryFrom<FieldFile> for CoefficientField {
    type Error = Error;

    fn try_from(file: FieldFile) -> Result<Self> {
        let params = BesovParams::new(file.s, file.p, file.q, file.d)?;
        let mut field = CoefficientField::new(params, file.jmax);
        field.meta = file.meta;
        for e in file.entries {
            let idx = CoeffIndex::new(e.i, e.j, e.k);
            field.check_index(&idx)?;
            if field.entries.contains_key(&idx) {
                return Err(Error::DuplicateIndex {
                    i: idx.i,
                    j: idx.cube.j,
                    k: idx.cube.k,
                });
            }
            if e.v != 0.0 {
                field.set(idx, e.v)?;
            }
        }
        Ok(field)
    }
}
