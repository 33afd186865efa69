//! Classify execution traces by the entropy of their l-word distributions.
//!
//! A trace is encoded as a symbol string, cut into overlapping words, and
//! summarized by Shannon and extended (Landsberg-Vedral, Renyi, Tsallis)
//! entropies over a grid of parameters. Traces of known defects form a
//! corpus; a new trace is matched to the classes of its nearest neighbours.

pub mod baseline;
pub mod cli;
pub mod corpus;
pub mod distance;
pub mod entropy;
pub mod error;
pub mod eval;
pub mod grid;
pub mod lexicon;
pub mod ranking;
pub mod trace;

pub use corpus::{CorpusEntry, CorpusIndex, Prefilter};
pub use distance::{FingerprintVector, NormMaxima};
pub use entropy::{EntropyKind, EntropySpec};
pub use error::{Error, Result};
pub use grid::{build_lambda, Grid, GridConfig};
pub use lexicon::Distribution;
pub use ranking::{DistanceConfig, RankedClass};
pub use trace::{parse_trace, CharType, ParseMode, RecordKind, Trace, TraceRecord};
