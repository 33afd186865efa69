//! Ranking corpus classes by distance to a query trace.
//!
//! Pipeline: distance to every candidate trace, ascending sort (ties by
//! trace id), map traces to classes, keep each class's first occurrence,
//! assign modified competition ranks, cut at `X`.

use rayon::prelude::*;

use crate::corpus::{CorpusEntry, CorpusIndex, Prefilter};
use crate::distance::{distance_single, normalized_distance, FingerprintVector};
use crate::entropy::EntropySpec;
use crate::error::{Error, Result};
use crate::trace::Trace;

#[derive(Debug, Clone, PartialEq)]
pub struct RankedClass {
    pub class_id: String,
    pub rank: usize,
    pub nearest_trace_id: String,
    pub distance: f64,
}

/// One scored corpus trace.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub trace_id: String,
    pub class_id: String,
    pub distance: f64,
}

/// How two traces are compared.
#[derive(Debug, Clone, PartialEq)]
pub enum DistanceConfig {
    /// Absolute difference of one fingerprint; the spec must be in the grid.
    Single(EntropySpec),
    /// Normalized `w`-norm over the whole grid.
    Multi { w: f64 },
}

impl Default for DistanceConfig {
    fn default() -> Self {
        DistanceConfig::Multi { w: 1.0 }
    }
}

/// Ranks for items already sorted ascending by distance: every member of a
/// tie block gets the 1-based position of the block's last member.
pub fn modified_competition_ranks(distances: &[f64]) -> Result<Vec<usize>> {
    if let Some(i) = distances.windows(2).position(|w| !(w[0] <= w[1])) {
        return Err(Error::UnsortedInput(i + 1));
    }
    let mut ranks = vec![0; distances.len()];
    let mut start = 0;
    while start < distances.len() {
        let mut end = start;
        while end + 1 < distances.len() && distances[end + 1] == distances[start] {
            end += 1;
        }
        for r in &mut ranks[start..=end] {
            *r = end + 1;
        }
        start = end + 1;
    }
    Ok(ranks)
}

/// Full ranked class list (every class, true ranks) from scored candidates.
pub fn rank_candidates(mut candidates: Vec<Candidate>) -> Result<Vec<RankedClass>> {
    if candidates.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    candidates.sort_by(|a, b| {
        a.distance
            .total_cmp(&b.distance)
            .then_with(|| a.trace_id.cmp(&b.trace_id))
    });
    let mut seen = std::collections::HashSet::new();
    let firsts: Vec<Candidate> = candidates
        .into_iter()
        .filter(|c| seen.insert(c.class_id.clone()))
        .collect();
    let distances: Vec<f64> = firsts.iter().map(|c| c.distance).collect();
    let ranks = modified_competition_ranks(&distances)?;
    Ok(firsts
        .into_iter()
        .zip(ranks)
        .map(|(c, rank)| RankedClass {
            class_id: c.class_id,
            rank,
            nearest_trace_id: c.trace_id,
            distance: c.distance,
        })
        .collect())
}

/// Classes with rank at most `x`.
pub fn top_x(ranked: &[RankedClass], x: usize) -> Vec<RankedClass> {
    ranked.iter().filter(|r| r.rank <= x).cloned().collect()
}

/// Scores every prefiltered corpus trace against `query` and returns the
/// full ranked class list.
pub fn rank_all_classes(
    query: &Trace,
    corpus: &CorpusIndex,
    config: &DistanceConfig,
    prefilter: Prefilter,
) -> Result<Vec<RankedClass>> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let query_vec = FingerprintVector::compute(query, corpus.grid())?;
    let candidates = corpus.prefilter(query, prefilter);
    score_candidates(&query_vec, corpus, &candidates, config).and_then(rank_candidates)
}

/// Scores the named candidate entries against a precomputed query
/// fingerprint. Query maxima fold the query into the corpus maxima.
pub fn score_candidates(
    query_vec: &FingerprintVector,
    corpus: &CorpusIndex,
    candidates: &[usize],
    config: &DistanceConfig,
) -> Result<Vec<Candidate>> {
    if query_vec.grid_hash != corpus.grid().hash() {
        return Err(Error::GridMismatch("query fingerprint was computed on another grid".into()));
    }
    let entries = corpus.entries();
    match config {
        DistanceConfig::Single(spec) => {
            let k = corpus
                .grid()
                .position(spec)
                .ok_or_else(|| Error::SpecNotInGrid(spec.to_string()))?;
            let z = query_vec.values[k];
            candidates
                .par_iter()
                .map(|&i| {
                    let e = &entries[i];
                    Ok(Candidate {
                        trace_id: e.trace_id.clone(),
                        class_id: e.class_id.clone(),
                        distance: distance_single(z, e.values[k]).map_err(|_| Error::NonFinite(k))?,
                    })
                })
                .collect()
        }
        DistanceConfig::Multi { w } => {
            let norms = corpus.norms().with(&query_vec.values);
            candidates
                .par_iter()
                .map(|&i| {
                    let e = &entries[i];
                    Ok(Candidate {
                        trace_id: e.trace_id.clone(),
                        class_id: e.class_id.clone(),
                        distance: normalized_distance(&query_vec.values, &e.values, &norms.maxima, *w)?,
                    })
                })
                .collect()
        }
    }
}

/// Full ranked class list over all corpus entries with a caller-supplied
/// distance per entry (position, entry).
pub fn rank_entries_by<F>(corpus: &CorpusIndex, distance: F) -> Result<Vec<RankedClass>>
where
    F: Fn(usize, &CorpusEntry) -> Result<f64> + Sync,
{
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let candidates = corpus
        .entries()
        .par_iter()
        .enumerate()
        .map(|(i, e)| {
            Ok(Candidate {
                trace_id: e.trace_id.clone(),
                class_id: e.class_id.clone(),
                distance: distance(i, e)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rank_candidates(candidates)
}

/// Classes of the corpus ranked `<= x` for `query`.
pub fn rank_classes(
    query: &Trace,
    corpus: &CorpusIndex,
    config: &DistanceConfig,
    prefilter: Prefilter,
    x: usize,
) -> Result<Vec<RankedClass>> {
    let all = rank_all_classes(query, corpus, config, prefilter)?;
    Ok(top_x(&all, x))
}
