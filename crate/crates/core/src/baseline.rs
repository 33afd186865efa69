//! Edit-distance baseline: insert/delete shortest edit script length between
//! encoded traces, and class ranking with it.

use crate::corpus::CorpusIndex;
use crate::error::{Error, Result};
use crate::ranking::{rank_entries_by, top_x, RankedClass};
use crate::trace::{Alphabet, CharType, SymbolSequence, Trace};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EditDistanceResult {
    /// Insertions plus deletions; a substitution costs two.
    pub distance: usize,
    /// Combined length of both inputs.
    pub combined_length: usize,
}

/// Edit distance of two slices via the O(NP) form of the greedy diagonal
/// algorithm (`D = delta + 2P`, `P` the deletions from the shorter input).
pub fn edit_distance<T: PartialEq>(a: &[T], b: &[T]) -> EditDistanceResult {
    let (short, long) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let m = short.len() as isize;
    let n = long.len() as isize;
    let delta = n - m;
    let offset = m + 1;
    // fp[k] = furthest y (index into `long`) reached on diagonal k = y - x.
    let mut fp = vec![-1isize; (m + n + 3) as usize];

    let snake = |k: isize, y: isize| -> isize {
        let mut y = y;
        let mut x = y - k;
        while x < m && y < n && short[x as usize] == long[y as usize] {
            x += 1;
            y += 1;
        }
        y
    };

    let mut p: isize = -1;
    loop {
        p += 1;
        for k in -p..delta {
            let i = (k + offset) as usize;
            fp[i] = snake(k, (fp[i - 1] + 1).max(fp[i + 1]));
        }
        for k in ((delta + 1)..=(delta + p)).rev() {
            let i = (k + offset) as usize;
            fp[i] = snake(k, (fp[i - 1] + 1).max(fp[i + 1]));
        }
        let i = (delta + offset) as usize;
        fp[i] = snake(delta, (fp[i - 1] + 1).max(fp[i + 1]));
        if fp[i] >= n {
            break;
        }
    }
    EditDistanceResult {
        distance: (delta + 2 * p) as usize,
        combined_length: a.len() + b.len(),
    }
}

/// Classic forward greedy search over furthest-reaching D-paths, linear
/// space, distance only.
pub fn greedy_edit_distance<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let n = a.len() as isize;
    let m = b.len() as isize;
    let max = n + m;
    let offset = max + 1;
    // v[k] = furthest x on diagonal k = x - y; -1 marks unreached.
    let mut v = vec![-1isize; (2 * max + 3) as usize];
    v[(offset + 1) as usize] = 0;
    for d in 0..=max {
        // Diagonals outside [-m, n] leave the edit graph.
        let mut k = -(d.min(m));
        if (k + d) % 2 != 0 {
            k += 1;
        }
        let hi = d.min(n);
        while k <= hi {
            let i = (k + offset) as usize;
            let left = v[i - 1];
            let up = v[i + 1];
            let right_move = if left >= 0 && left < n { left + 1 } else { -1 };
            let down_move = if up >= 0 && up - (k + 1) < m { up } else { -1 };
            let mut x = right_move.max(down_move);
            if x >= 0 {
                let mut y = x - k;
                while x < n && y < m && a[x as usize] == b[y as usize] {
                    x += 1;
                    y += 1;
                }
                if x >= n && y >= m {
                    return d as usize;
                }
            }
            v[i] = x;
            k += 2;
        }
    }
    unreachable!("a path of length n + m always exists")
}

/// Edit distance of two encoded traces. Sequences from different alphabets
/// are compared by symbol text.
pub fn myers_edit_distance(a: &SymbolSequence, b: &SymbolSequence) -> EditDistanceResult {
    if a.alphabet == b.alphabet {
        return edit_distance(&a.symbols, &b.symbols);
    }
    let mut shared = a.alphabet.clone();
    let remapped: Vec<u32> = b.symbol_strings().map(|s| shared.intern(s.to_string())).collect();
    edit_distance(&a.symbols, &remapped)
}

/// Raw corpus traces encoded once over a shared alphabet.
#[derive(Debug, Clone)]
pub struct EncodedCorpus {
    pub c: CharType,
    alphabet: Alphabet,
    sequences: Vec<Vec<u32>>,
}

impl EncodedCorpus {
    pub fn new(corpus: &CorpusIndex, c: CharType) -> Result<Self> {
        if !corpus.retains_raw() {
            return Err(Error::RawTracesUnavailable);
        }
        let mut alphabet = Alphabet::new();
        let sequences = corpus
            .entries()
            .iter()
            .map(|e| {
                e.raw
                    .as_ref()
                    .map(|t| alphabet.encode_ids(t, c))
                    .ok_or(Error::RawTracesUnavailable)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            c,
            alphabet,
            sequences,
        })
    }

    /// Encodes a query against the corpus alphabet (unseen symbols get
    /// fresh ids, which match nothing).
    pub fn encode_query(&self, query: &Trace) -> Vec<u32> {
        let mut alphabet = self.alphabet.clone();
        alphabet.encode_ids(query, self.c)
    }

    /// Full ranked class list for an encoded query.
    pub fn rank_all(&self, corpus: &CorpusIndex, query: &[u32]) -> Result<Vec<RankedClass>> {
        rank_entries_by(corpus, |i, _| Ok(edit_distance(query, &self.sequences[i]).distance as f64))
    }
}

/// Classes ranked `<= x` for `query` by edit distance.
pub fn baseline_rank(query: &Trace, corpus: &CorpusIndex, c: CharType, x: usize) -> Result<Vec<RankedClass>> {
    let encoded = EncodedCorpus::new(corpus, c)?;
    let q = encoded.encode_query(query);
    Ok(top_x(&encoded.rank_all(corpus, &q)?, x))
}
