//! k-fold cross-validation of class ranking over a corpus index.

use std::collections::HashMap;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::corpus::CorpusIndex;
use crate::distance::normalized_distance;
use crate::error::{Error, Result};
use crate::ranking::{modified_competition_ranks, DistanceConfig};

use super::{ci95_half_width, mean_std};

/// Seeded shuffle dealt round-robin into `k` bins (sizes differ by at most
/// one).
pub fn kfold_partition<T: Clone>(ids: &[T], k: usize, seed: u64) -> Result<Vec<Vec<T>>> {
    if k < 2 || ids.len() < k {
        return Err(Error::TooFewTraces {
            traces: ids.len(),
            folds: k,
        });
    }
    let mut shuffled = ids.to_vec();
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut bins = vec![Vec::with_capacity(ids.len() / k + 1); k];
    for (i, id) in shuffled.into_iter().enumerate() {
        bins[i % k].push(id);
    }
    Ok(bins)
}

/// Rank of `truth` among the classes of the scored training traces, or
/// `None` when no training trace carries it. `scored` holds
/// `(distance, trace position, class)`; ties sort by trace position.
pub fn true_class_rank(scored: &mut [(f64, usize, usize)], truth: usize) -> Result<Option<usize>> {
    scored.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut seen = std::collections::HashSet::new();
    let firsts: Vec<(f64, usize)> = scored
        .iter()
        .filter(|(_, _, class)| seen.insert(*class))
        .map(|(d, _, class)| (*d, *class))
        .collect();
    let distances: Vec<f64> = firsts.iter().map(|f| f.0).collect();
    let ranks = modified_competition_ranks(&distances)?;
    Ok(firsts
        .iter()
        .zip(ranks)
        .find(|((_, class), _)| *class == truth)
        .map(|(_, r)| r))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TopXRow {
    pub x: usize,
    pub mean: f64,
    pub ci95: f64,
}

/// Fraction of validation traces whose class ranks in the top `X`, averaged
/// over folds, for `X = 1..=num_classes`.
#[derive(Debug, Clone, PartialEq)]
pub struct TopXTable {
    pub rows: Vec<TopXRow>,
    pub folds: usize,
    pub config: String,
    /// `per_fold[f][x - 1]`.
    pub per_fold: Vec<Vec<f64>>,
}

impl TopXTable {
    pub fn top(&self, x: usize) -> f64 {
        self.rows[x.clamp(1, self.rows.len()) - 1].mean
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,mean,ci95\n");
        for r in &self.rows {
            let _ = writeln!(s, "{},{},{}", r.x, r.mean, r.ci95);
        }
        s
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{} ({} folds)\n{:>5} {:>8} {:>8}\n", self.config, self.folds, "top", "avg", "95% CI");
        for r in &self.rows {
            let _ = writeln!(s, "{:>5} {:>8.4} {:>8.4}", r.x, r.mean, r.ci95);
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossvalReport {
    pub table: TopXTable,
    /// Validation traces whose class had no training trace in their fold.
    pub class_missing: Vec<String>,
}

/// Cross-validates ranking on `corpus` with `k` seeded folds. Multi-spec
/// normalization uses the training traces of the fold plus the query.
pub fn crossval(corpus: &CorpusIndex, config: &DistanceConfig, k: usize, seed: u64) -> Result<CrossvalReport> {
    let entries = corpus.entries();
    let mut class_ids: Vec<&str> = entries.iter().map(|e| e.class_id.as_str()).collect();
    class_ids.sort_unstable();
    class_ids.dedup();
    let class_of: HashMap<&str, usize> = class_ids.iter().enumerate().map(|(i, c)| (*c, i)).collect();
    let classes: Vec<usize> = entries.iter().map(|e| class_of[e.class_id.as_str()]).collect();
    let num_classes = class_ids.len();

    let single = match config {
        DistanceConfig::Single(spec) => Some(
            corpus
                .grid()
                .position(spec)
                .ok_or_else(|| Error::SpecNotInGrid(spec.to_string()))?,
        ),
        DistanceConfig::Multi { w } => {
            if !(*w >= 1.0) {
                return Err(Error::InvalidConfig(format!("norm exponent w={w} must be >= 1")));
            }
            None
        }
    };
    let w = match config {
        DistanceConfig::Multi { w } => *w,
        DistanceConfig::Single(_) => 1.0,
    };

    let positions: Vec<usize> = (0..entries.len()).collect();
    let bins = kfold_partition(&positions, k, seed)?;

    let mut per_fold = Vec::with_capacity(k);
    let mut class_missing = Vec::new();
    for (f, validation) in bins.iter().enumerate() {
        let training: Vec<usize> = bins
            .iter()
            .enumerate()
            .filter(|(g, _)| *g != f)
            .flat_map(|(_, b)| b.iter().copied())
            .collect();
        let mut train_max = vec![0.0f64; corpus.grid().len()];
        for &t in &training {
            for (m, v) in train_max.iter_mut().zip(&entries[t].values) {
                if *v > *m {
                    *m = *v;
                }
            }
        }

        let ranks: Vec<Option<usize>> = validation
            .par_iter()
            .map(|&v| {
                let query = &entries[v].values;
                let mut scored = Vec::with_capacity(training.len());
                match single {
                    Some(col) => {
                        for &t in &training {
                            let d = (query[col] - entries[t].values[col]).abs();
                            if !d.is_finite() {
                                return Err(Error::NonFinite(col));
                            }
                            scored.push((d, t, classes[t]));
                        }
                    }
                    None => {
                        let maxima: Vec<f64> = train_max.iter().zip(query).map(|(m, q)| m.max(*q)).collect();
                        for &t in &training {
                            let d = normalized_distance(query, &entries[t].values, &maxima, w)?;
                            scored.push((d, t, classes[t]));
                        }
                    }
                }
                true_class_rank(&mut scored, classes[v])
            })
            .collect::<Result<Vec<_>>>()?;

        for (&v, r) in validation.iter().zip(&ranks) {
            if r.is_none() {
                log::warn!("class {} of {} missing from training fold {f}", entries[v].class_id, entries[v].trace_id);
                class_missing.push(entries[v].trace_id.clone());
            }
        }
        let n = validation.len() as f64;
        let fractions: Vec<f64> = (1..=num_classes)
            .map(|x| ranks.iter().filter(|r| r.is_some_and(|r| r <= x)).count() as f64 / n)
            .collect();
        per_fold.push(fractions);
    }

    let rows = (1..=num_classes)
        .map(|x| {
            let col: Vec<f64> = per_fold.iter().map(|f| f[x - 1]).collect();
            TopXRow {
                x,
                mean: mean_std(&col).0,
                ci95: ci95_half_width(&col),
            }
        })
        .collect();
    let desc = match config {
        DistanceConfig::Single(spec) => format!("spec {spec}"),
        DistanceConfig::Multi { w } => format!("grid {} ({} specs), w={w}", corpus.grid().name, corpus.grid().len()),
    };
    Ok(CrossvalReport {
        table: TopXTable {
            rows,
            folds: k,
            config: desc,
            per_fold,
        },
        class_missing,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WSweepRow {
    pub w: f64,
    pub top1: f64,
    pub top5: f64,
}

/// Full-grid cross-validation for each norm exponent.
pub fn w_sweep(corpus: &CorpusIndex, w_values: &[f64], k: usize, seed: u64) -> Result<Vec<WSweepRow>> {
    w_values
        .iter()
        .map(|&w| {
            let r = crossval(corpus, &DistanceConfig::Multi { w }, k, seed)?;
            Ok(WSweepRow {
                w,
                top1: r.table.top(1),
                top5: r.table.top(5),
            })
        })
        .collect()
}
