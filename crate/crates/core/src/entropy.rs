//! Shannon and extended (Landsberg-Vedral, Renyi, Tsallis) entropies of a
//! word distribution, all in bits.
//!
//! The power sum `Q(P; q) = sum p_i^q` is evaluated as a log-sum-exp over
//! `q ln p_i`; for large `q` the direct powers underflow long before the
//! sum does.

use std::f64::consts::LN_2;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::lexicon::distribution;
use crate::trace::{CharType, Trace};

/// `|q - 1|` at or below which the extended entropies dispatch to Shannon.
pub const SHANNON_DISPATCH: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EntropyKind {
    /// Shannon.
    S,
    /// Landsberg-Vedral.
    L,
    /// Renyi.
    R,
    /// Tsallis.
    T,
}

impl EntropyKind {
    pub const ALL: [EntropyKind; 4] = [EntropyKind::S, EntropyKind::L, EntropyKind::R, EntropyKind::T];
    pub const EXTENDED: [EntropyKind; 3] = [EntropyKind::L, EntropyKind::R, EntropyKind::T];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        EntropyKind::ALL.get(code as usize).copied()
    }
}

impl fmt::Display for EntropyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EntropyKind::S => "S",
            EntropyKind::L => "L",
            EntropyKind::R => "R",
            EntropyKind::T => "T",
        })
    }
}

impl FromStr for EntropyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "S" => Ok(EntropyKind::S),
            "L" => Ok(EntropyKind::L),
            "R" => Ok(EntropyKind::R),
            "T" => Ok(EntropyKind::T),
            other => Err(Error::InvalidConfig(format!("unknown entropy `{other}`"))),
        }
    }
}

/// One `[E, q, l, c]` fingerprint parameterization. Shannon specs always
/// carry `q = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropySpec {
    pub kind: EntropyKind,
    pub q: f64,
    pub l: usize,
    pub c: CharType,
}

impl EntropySpec {
    pub fn new(kind: EntropyKind, q: f64, l: usize, c: CharType) -> Result<Self> {
        if !q.is_finite() || q < 0.0 {
            return Err(Error::InvalidConfig(format!("entropy index q={q} must be finite and >= 0")));
        }
        if l == 0 {
            return Err(Error::InvalidConfig("word length must be positive".into()));
        }
        let q = if kind == EntropyKind::S { 1.0 } else { q };
        Ok(Self { kind, q, l, c })
    }

    pub fn shannon(l: usize, c: CharType) -> Self {
        Self {
            kind: EntropyKind::S,
            q: 1.0,
            l,
            c,
        }
    }

    /// Entropy of an already-computed distribution under this spec.
    pub fn evaluate(&self, probs: &[f64]) -> f64 {
        match self.kind {
            EntropyKind::S => shannon(probs),
            kind => extended(probs, kind, self.q),
        }
    }
}

impl fmt::Display for EntropySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{},{}", self.kind, self.q, self.l, self.c)
    }
}

impl FromStr for EntropySpec {
    type Err = Error;

    /// Parses `E,q,l,c`, e.g. `L,1e-5,3,FTD` or `S,1,1,F`. For Shannon the
    /// `q` field may be `-`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 4 {
            return Err(Error::InvalidConfig(format!("spec `{s}` is not of the form E,q,l,c")));
        }
        let kind: EntropyKind = parts[0].parse()?;
        let q = if kind == EntropyKind::S && (parts[1] == "-" || parts[1].is_empty()) {
            1.0
        } else {
            parts[1]
                .parse::<f64>()
                .map_err(|_| Error::InvalidConfig(format!("bad q `{}`", parts[1])))?
        };
        let l = parts[2]
            .parse::<usize>()
            .map_err(|_| Error::InvalidConfig(format!("bad l `{}`", parts[2])))?;
        let c: CharType = parts[3].parse()?;
        EntropySpec::new(kind, q, l, c)
    }
}

/// `ln Q(P; q)` via log-sum-exp.
pub fn log_q_moment(probs: &[f64], q: f64) -> f64 {
    if probs.is_empty() {
        return f64::NEG_INFINITY;
    }
    if q == 0.0 {
        return (probs.len() as f64).ln();
    }
    let max = probs
        .iter()
        .map(|p| q * p.ln())
        .fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = probs.iter().map(|p| (q * p.ln() - max).exp()).sum();
    max + sum.ln()
}

/// `Q(P; q) = sum p_i^q`.
pub fn q_moment(probs: &[f64], q: f64) -> f64 {
    log_q_moment(probs, q).exp()
}

/// Shannon entropy in bits.
pub fn shannon(probs: &[f64]) -> f64 {
    let h: f64 = probs
        .iter()
        .filter(|p| **p > 0.0)
        .map(|p| -p * p.log2())
        .sum();
    h.max(0.0)
}

/// Extended entropy of kind `L`, `R` or `T`. Within [`SHANNON_DISPATCH`] of
/// `q = 1` all three return Shannon in bits. Landsberg-Vedral saturates to
/// `+inf` when `1/Q` overflows.
pub fn extended(probs: &[f64], kind: EntropyKind, q: f64) -> f64 {
    if (q - 1.0).abs() <= SHANNON_DISPATCH || kind == EntropyKind::S {
        return shannon(probs);
    }
    let ln_q = log_q_moment(probs, q);
    let denom = 1.0 - q;
    let h = match kind {
        EntropyKind::L => -(-ln_q).exp_m1() / denom,
        EntropyKind::R => ln_q / LN_2 / denom,
        EntropyKind::T => ln_q.exp_m1() / denom,
        EntropyKind::S => unreachable!(),
    };
    if h.is_nan() {
        return f64::INFINITY;
    }
    h.max(0.0)
}

/// `Z = H_E[alpha(t; l, c); q]`.
pub fn fingerprint(trace: &Trace, spec: &EntropySpec) -> Result<f64> {
    let d = distribution(trace, spec.l, spec.c)?;
    Ok(spec.evaluate(d.probs()))
}
