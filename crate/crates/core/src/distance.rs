//! Trace distances computed from entropy fingerprints.

use std::collections::BTreeMap;
use std::f64::consts::LN_2;

use crate::entropy::EntropyKind;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::lexicon::Distribution;
use crate::trace::{Alphabet, CharType, Trace};

/// Entropy values of one trace, aligned to a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FingerprintVector {
    pub grid_hash: u64,
    pub trace_id: String,
    pub values: Vec<f64>,
}

impl FingerprintVector {
    /// Evaluates every spec of `grid` on `trace`. Each `(l, c)` distribution
    /// is counted once and shared by all entropies that use it.
    pub fn compute(trace: &Trace, grid: &Grid) -> Result<Self> {
        if trace.len() < grid.max_l() {
            return Err(Error::TraceTooShort {
                records: trace.len(),
                l: grid.max_l(),
            });
        }
        let mut by_c: BTreeMap<CharType, Vec<u32>> = BTreeMap::new();
        let mut dists: BTreeMap<(CharType, usize), Distribution> = BTreeMap::new();
        let mut values = Vec::with_capacity(grid.len());
        for spec in grid.specs() {
            let key = (spec.c, spec.l);
            if !dists.contains_key(&key) {
                let symbols = by_c
                    .entry(spec.c)
                    .or_insert_with(|| Alphabet::new().encode_ids(trace, spec.c));
                dists.insert(key, Distribution::from_symbols(symbols, spec.l, spec.c)?);
            }
            values.push(spec.evaluate(dists[&key].probs()));
        }
        Ok(Self {
            grid_hash: grid.hash(),
            trace_id: trace.id.clone(),
            values,
        })
    }

    pub fn is_saturated(&self) -> bool {
        self.values.iter().any(|v| !v.is_finite())
    }
}

/// Per-spec maxima over a trace set, the normalizers of the multi-spec
/// distance.
#[derive(Debug, Clone, PartialEq)]
pub struct NormMaxima {
    pub grid_hash: u64,
    pub maxima: Vec<f64>,
}

impl NormMaxima {
    pub fn zeros(grid: &Grid) -> Self {
        Self {
            grid_hash: grid.hash(),
            maxima: vec![0.0; grid.len()],
        }
    }

    pub fn from_vectors<'a>(grid: &Grid, vectors: impl IntoIterator<Item = &'a FingerprintVector>) -> Self {
        let mut m = Self::zeros(grid);
        for v in vectors {
            m.include(&v.values);
        }
        m
    }

    /// Raises each maximum to cover `values`.
    pub fn include(&mut self, values: &[f64]) {
        for (m, v) in self.maxima.iter_mut().zip(values) {
            if *v > *m {
                *m = *v;
            }
        }
    }

    /// Copy raised to also cover `values`.
    pub fn with(&self, values: &[f64]) -> Self {
        let mut m = self.clone();
        m.include(values);
        m
    }
}

/// `|z_i - z_j|` for one spec.
pub fn distance_single(z_i: f64, z_j: f64) -> Result<f64> {
    if !z_i.is_finite() {
        return Err(Error::NonFinite(0));
    }
    if !z_j.is_finite() {
        return Err(Error::NonFinite(0));
    }
    Ok((z_i - z_j).abs())
}

/// Normalized `w`-norm over aligned value slices. Components whose maximum
/// is zero contribute nothing.
pub fn normalized_distance(a: &[f64], b: &[f64], maxima: &[f64], w: f64) -> Result<f64> {
    if a.len() != b.len() || a.len() != maxima.len() {
        return Err(Error::GridMismatch(format!(
            "vector lengths {}, {} and {} maxima",
            a.len(),
            b.len(),
            maxima.len()
        )));
    }
    if !(w >= 1.0) {
        return Err(Error::InvalidConfig(format!("norm exponent w={w} must be >= 1")));
    }
    let mut acc = 0.0;
    for (k, ((x, y), m)) in a.iter().zip(b).zip(maxima).enumerate() {
        if *m == 0.0 {
            continue;
        }
        if !x.is_finite() || !y.is_finite() {
            return Err(Error::NonFinite(k));
        }
        let r = ((x - y) / m).abs();
        acc += if w == 1.0 { r } else { r.powf(w) };
    }
    Ok(if w == 1.0 { acc } else { acc.powf(1.0 / w) })
}

/// Multi-spec distance between two fingerprint vectors of the same grid.
pub fn distance_multi(
    v_i: &FingerprintVector,
    v_j: &FingerprintVector,
    norms: &NormMaxima,
    w: f64,
) -> Result<f64> {
    if v_i.grid_hash != v_j.grid_hash || v_i.grid_hash != norms.grid_hash {
        return Err(Error::GridMismatch(format!(
            "fingerprints of `{}` and `{}` or the maxima come from different grids",
            v_i.trace_id, v_j.trace_id
        )));
    }
    normalized_distance(&v_i.values, &v_j.values, &norms.maxima, w)
}

/// `A = sum_k ln p_k` over the dictionary.
pub fn log_surprise_sum(probs: &[f64]) -> f64 {
    probs.iter().map(|p| p.ln()).sum()
}

/// Small-`q` first-order approximation of the single-spec distance for two
/// traces whose dictionaries have (about) the same size `n`.
pub fn approx_distance_small_q(a_i: f64, a_j: f64, n: usize, kind: EntropyKind, q: f64) -> f64 {
    let diff = (a_i - a_j).abs();
    let n = n as f64;
    match kind {
        EntropyKind::L => q / (n * n) * diff,
        EntropyKind::R => q / (LN_2 * n) * diff,
        EntropyKind::T | EntropyKind::S => q * diff,
    }
}
