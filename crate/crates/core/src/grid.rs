//! The parameter set of fingerprint specs and its canonical 504-spec form.

use std::cmp::Ordering;

use sha2::{Digest, Sha256};

use crate::entropy::{EntropyKind, EntropySpec};
use crate::error::{Error, Result};
use crate::trace::CharType;

/// Default entropy indices. `q = 1` is part of the set but collapses into
/// the single Shannon spec per `(l, c)`.
pub const DEFAULT_Q: [f64; 9] = [0.0, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2];

#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    pub kinds: Vec<EntropyKind>,
    pub q_set: Vec<f64>,
    pub l_set: Vec<usize>,
    pub c_set: Vec<CharType>,
    /// `(E, q)` pairs removed for every `l` and `c`.
    pub exclusions: Vec<(EntropyKind, f64)>,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            kinds: EntropyKind::ALL.to_vec(),
            q_set: DEFAULT_Q.to_vec(),
            l_set: (1..=7).collect(),
            c_set: CharType::ALL.to_vec(),
            // 1/Q overflows for these.
            exclusions: vec![(EntropyKind::L, 1e2)],
        }
    }
}

/// Ordered, duplicate-free list of specs that fingerprint vectors align to.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub name: String,
    specs: Vec<EntropySpec>,
}

fn spec_order(a: &EntropySpec, b: &EntropySpec) -> Ordering {
    a.kind
        .cmp(&b.kind)
        .then(a.q.total_cmp(&b.q))
        .then(a.l.cmp(&b.l))
        .then(a.c.cmp(&b.c))
}

impl Grid {
    /// Builds a grid from an explicit list, sorting and deduplicating it.
    pub fn from_specs(name: impl Into<String>, mut specs: Vec<EntropySpec>) -> Result<Self> {
        if specs.is_empty() {
            return Err(Error::InvalidConfig("grid has no specs".into()));
        }
        for s in &specs {
            if !s.q.is_finite() || s.q < 0.0 || s.l == 0 {
                return Err(Error::InvalidConfig(format!("invalid spec {s}")));
            }
        }
        specs.sort_by(spec_order);
        specs.dedup_by(|a, b| spec_order(a, b) == Ordering::Equal);
        Ok(Self {
            name: name.into(),
            specs,
        })
    }

    pub fn single(spec: EntropySpec) -> Self {
        Self {
            name: format!("single:{spec}"),
            specs: vec![spec],
        }
    }

    pub fn default_lambda() -> Self {
        build_lambda(&GridConfig::default()).expect("default grid config is valid")
    }

    pub fn specs(&self) -> &[EntropySpec] {
        &self.specs
    }

    pub fn len(&self) -> usize {
        self.specs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.specs.is_empty()
    }

    pub fn max_l(&self) -> usize {
        self.specs.iter().map(|s| s.l).max().unwrap_or(0)
    }

    pub fn position(&self, spec: &EntropySpec) -> Option<usize> {
        self.specs
            .iter()
            .position(|s| spec_order(s, spec) == Ordering::Equal)
    }

    /// Binary form used in index headers: per spec `E:u8 c:u8 l:u16 q:f64`,
    /// little-endian.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.specs.len() * 12);
        for s in &self.specs {
            out.push(s.kind.code());
            out.push(s.c.code());
            out.extend_from_slice(&(s.l as u16).to_le_bytes());
            out.extend_from_slice(&s.q.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(name: impl Into<String>, bytes: &[u8]) -> Result<Self> {
        if bytes.len() % 12 != 0 {
            return Err(Error::CorruptIndex("grid block length is not a multiple of 12".into()));
        }
        let specs = bytes
            .chunks_exact(12)
            .map(|b| {
                let kind = EntropyKind::from_code(b[0])
                    .ok_or_else(|| Error::CorruptIndex(format!("bad entropy code {}", b[0])))?;
                let c = CharType::from_code(b[1])
                    .ok_or_else(|| Error::CorruptIndex(format!("bad char type code {}", b[1])))?;
                let l = u16::from_le_bytes([b[2], b[3]]) as usize;
                let q = f64::from_le_bytes(b[4..12].try_into().unwrap());
                EntropySpec::new(kind, q, l, c)
                    .map_err(|e| Error::CorruptIndex(format!("bad grid spec: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let grid = Grid {
            name: name.into(),
            specs,
        };
        if grid.specs.windows(2).any(|w| spec_order(&w[0], &w[1]) != Ordering::Less) {
            return Err(Error::CorruptIndex("grid specs are not in canonical order".into()));
        }
        Ok(grid)
    }

    /// Stable identity of the spec list.
    pub fn hash(&self) -> u64 {
        let digest = Sha256::digest(self.to_bytes());
        u64::from_le_bytes(digest[..8].try_into().unwrap())
    }
}

/// Cartesian product of the configured sets with `q = 1` extended specs
/// folded into Shannon and the exclusions removed.
pub fn build_lambda(config: &GridConfig) -> Result<Grid> {
    if config.kinds.is_empty()
        || config.q_set.is_empty()
        || config.l_set.is_empty()
        || config.c_set.is_empty()
    {
        return Err(Error::InvalidConfig("grid parameter sets must be non-empty".into()));
    }
    if let Some(q) = config.q_set.iter().find(|q| !q.is_finite() || **q < 0.0) {
        return Err(Error::InvalidConfig(format!("q={q} must be finite and >= 0")));
    }
    if config.l_set.contains(&0) {
        return Err(Error::InvalidConfig("word length must be positive".into()));
    }

    let mut specs = Vec::new();
    for &kind in &config.kinds {
        for &l in &config.l_set {
            for &c in &config.c_set {
                if kind == EntropyKind::S {
                    specs.push(EntropySpec::shannon(l, c));
                    continue;
                }
                for &q in &config.q_set {
                    if q == 1.0 {
                        continue;
                    }
                    if config.exclusions.iter().any(|&(k, xq)| k == kind && xq == q) {
                        continue;
                    }
                    specs.push(EntropySpec { kind, q, l, c });
                }
            }
        }
    }
    if specs.is_empty() {
        return Err(Error::InvalidConfig("configuration yields no specs".into()));
    }
    Grid::from_specs("lambda", specs)
}
