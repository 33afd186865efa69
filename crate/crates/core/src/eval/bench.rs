//! Wall-clock comparison of reference traces against a whole corpus:
//! edit-distance baseline versus entropy fingerprints.

use std::fmt::Write as _;
use std::hint::black_box;
use std::time::{Duration, Instant};

use crate::baseline::EncodedCorpus;
use crate::corpus::CorpusIndex;
use crate::distance::{distance_single, normalized_distance, FingerprintVector};
use crate::entropy::{fingerprint, EntropyKind, EntropySpec};
use crate::error::{Error, Result};
use crate::ranking::rank_entries_by;
use crate::trace::{CharType, Trace};

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    /// Repetitions per cell; the median is reported. At least 5.
    pub reps: usize,
    /// Each repetition runs the workload until this much time has passed
    /// and reports the per-call average.
    pub min_batch: Duration,
    /// Encoding used by the edit-distance baseline.
    pub diff_char_type: CharType,
    /// Spec of the single-fingerprint row. Must be in the corpus grid.
    pub single: EntropySpec,
    pub w: f64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            reps: 5,
            min_batch: Duration::from_millis(50),
            diff_char_type: CharType::FTD,
            single: EntropySpec {
                kind: EntropyKind::L,
                q: 1e-5,
                l: 3,
                c: CharType::FTD,
            },
            w: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub algorithm: &'static str,
    pub reference: String,
    pub records: usize,
    /// Median seconds per comparison of the reference against the corpus.
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BenchTable {
    pub corpus_size: usize,
    pub rows: Vec<BenchRow>,
}

pub const ALG_DIFF: &str = "diff";
pub const ALG_SINGLE: &str = "entropy-single";
pub const ALG_GRID: &str = "entropy-grid";
/// Time to fingerprint the query itself (single spec); excluded from the
/// entropy query rows.
pub const ALG_FINGERPRINT: &str = "fingerprint-query";

impl BenchTable {
    pub fn seconds(&self, algorithm: &str, reference: &str) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.algorithm == algorithm && r.reference == reference)
            .map(|r| r.seconds)
    }

    /// All cells of one algorithm, in reference order.
    pub fn row(&self, algorithm: &str) -> Vec<f64> {
        self.rows.iter().filter(|r| r.algorithm == algorithm).map(|r| r.seconds).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("algorithm,reference,records,seconds\n");
        for r in &self.rows {
            let _ = writeln!(s, "{},{},{},{:e}", r.algorithm, r.reference, r.records, r.seconds);
        }
        s
    }

    pub fn to_text(&self) -> String {
        let mut refs: Vec<(&str, usize)> = Vec::new();
        for r in &self.rows {
            if !refs.iter().any(|(name, _)| *name == r.reference) {
                refs.push((&r.reference, r.records));
            }
        }
        let mut s = format!("corpus of {} traces, median seconds per query\n{:<18}", self.corpus_size, "");
        for (name, n) in &refs {
            let _ = write!(s, " {:>14}", format!("{name} ({n})"));
        }
        s.push('\n');
        for alg in [ALG_DIFF, ALG_SINGLE, ALG_GRID, ALG_FINGERPRINT] {
            if self.row(alg).is_empty() {
                continue;
            }
            let _ = write!(s, "{alg:<18}");
            for (name, _) in &refs {
                match self.seconds(alg, name) {
                    Some(v) => {
                        let _ = write!(s, " {v:>14.3e}");
                    }
                    None => {
                        let _ = write!(s, " {:>14}", "-");
                    }
                }
            }
            s.push('\n');
        }
        s
    }
}

/// Median over `reps` of the per-call time of `f`, each repetition batching
/// calls until `min_batch` has elapsed. One untimed call warms up first.
pub fn time_median<F: FnMut()>(reps: usize, min_batch: Duration, mut f: F) -> f64 {
    let mut samples = Vec::with_capacity(reps);
    f();
    for _ in 0..reps.max(1) {
        let start = Instant::now();
        let mut calls = 0u32;
        loop {
            f();
            calls += 1;
            if start.elapsed() >= min_batch {
                break;
            }
        }
        samples.push(start.elapsed().as_secs_f64() / calls as f64);
    }
    samples.sort_by(f64::total_cmp);
    let mid = samples.len() / 2;
    if samples.len() % 2 == 1 {
        samples[mid]
    } else {
        (samples[mid - 1] + samples[mid]) / 2.0
    }
}

/// Times each `(label, reference)` against the full corpus. The diff row is
/// skipped (with an error) when the corpus has no raw traces.
pub fn timing_bench(corpus: &CorpusIndex, references: &[(String, Trace)], cfg: &BenchConfig) -> Result<BenchTable> {
    if cfg.reps < 5 {
        return Err(Error::InvalidConfig(format!("{} repetitions, at least 5 required", cfg.reps)));
    }
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let col = corpus
        .grid()
        .position(&cfg.single)
        .ok_or_else(|| Error::SpecNotInGrid(cfg.single.to_string()))?;
    let encoded = EncodedCorpus::new(corpus, cfg.diff_char_type)?;

    let mut table = BenchTable {
        corpus_size: corpus.len(),
        rows: Vec::new(),
    };
    let mut push = |algorithm, reference: &str, records, seconds| {
        table.rows.push(BenchRow {
            algorithm,
            reference: reference.to_string(),
            records,
            seconds,
        })
    };

    // Entropy rows first: the diff runs churn caches and the allocator.
    let mut diff_queries = Vec::with_capacity(references.len());
    for (label, reference) in references {
        let n = reference.len();
        let fp = FingerprintVector::compute(reference, corpus.grid())?;
        let z = fp.values[col];
        let single = time_median(cfg.reps, cfg.min_batch, || {
            let ranked = rank_entries_by(corpus, |_, e| distance_single(black_box(z), e.values[col]));
            black_box(ranked.expect("finite fingerprints"));
        });
        push(ALG_SINGLE, label, n, single);

        let maxima = corpus.norms().with(&fp.values).maxima;
        let grid = time_median(cfg.reps, cfg.min_batch, || {
            let ranked = rank_entries_by(corpus, |_, e| {
                normalized_distance(black_box(&fp.values), &e.values, &maxima, cfg.w)
            });
            black_box(ranked.expect("finite fingerprints"));
        });
        push(ALG_GRID, label, n, grid);

        let fpt = time_median(cfg.reps, cfg.min_batch, || {
            black_box(fingerprint(black_box(reference), &cfg.single).expect("reference is long enough"));
        });
        push(ALG_FINGERPRINT, label, n, fpt);
        diff_queries.push(encoded.encode_query(reference));
    }
    for ((label, reference), query_seq) in references.iter().zip(&diff_queries) {
        let diff = time_median(cfg.reps, cfg.min_batch, || {
            black_box(encoded.rank_all(corpus, black_box(query_seq)).expect("corpus is non-empty"));
        });
        push(ALG_DIFF, label, reference.len(), diff);
    }
    Ok(table)
}
