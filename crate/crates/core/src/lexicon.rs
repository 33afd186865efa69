//! Overlapping l-words and the empirical distribution over them.

use std::collections::HashMap;
use std::io::Write;

use crate::error::{Error, Result};
use crate::trace::{encode, CharType, SymbolSequence, Trace};

/// All `N - l + 1` overlapping windows of length `l`, in order.
pub fn extract_lwords(symbols: &[u32], l: usize) -> impl Iterator<Item = &[u32]> + '_ {
    assert!(l >= 1, "word length must be positive");
    symbols.windows(l)
}

/// Empirical distribution of the distinct l-words observed in one trace.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    words: Vec<Vec<u32>>,
    counts: Vec<u64>,
    probs: Vec<f64>,
    total: u64,
    l: usize,
    c: CharType,
    sequence: Option<SymbolSequence>,
}

impl Distribution {
    /// Counts l-words of an encoded trace.
    pub fn from_sequence(seq: &SymbolSequence, l: usize, c: CharType) -> Result<Self> {
        let mut d = Self::from_symbols(&seq.symbols, l, c)?;
        d.sequence = Some(seq.clone());
        Ok(d)
    }

    /// Same as [`Distribution::from_sequence`] without keeping the alphabet
    /// for display.
    pub fn from_symbols(symbols: &[u32], l: usize, c: CharType) -> Result<Self> {
        if l == 0 {
            return Err(Error::InvalidConfig("word length must be positive".into()));
        }
        if symbols.len() < l {
            return Err(Error::TraceTooShort {
                records: symbols.len(),
                l,
            });
        }
        let mut tally: HashMap<&[u32], u64> = HashMap::new();
        for w in extract_lwords(symbols, l) {
            *tally.entry(w).or_insert(0) += 1;
        }
        let mut entries: Vec<(&[u32], u64)> = tally.into_iter().collect();
        entries.sort_unstable_by(|a, b| a.0.cmp(b.0));

        let total = (symbols.len() - l + 1) as u64;
        let mut words = Vec::with_capacity(entries.len());
        let mut counts = Vec::with_capacity(entries.len());
        let mut probs = Vec::with_capacity(entries.len());
        for (w, n) in entries {
            words.push(w.to_vec());
            counts.push(n);
            probs.push(n as f64 / total as f64);
        }
        Ok(Self {
            words,
            counts,
            probs,
            total,
            l,
            c,
            sequence: None,
        })
    }

    /// Builds a distribution directly from probabilities (words are synthetic
    /// single-symbol ids). Zero entries are dropped; the rest must be positive
    /// and sum to one within `1e-9`, and are renormalized.
    pub fn from_probabilities(probs: &[f64]) -> Result<Self> {
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidConfig("probabilities must be finite and non-negative".into()));
        }
        let kept: Vec<f64> = probs.iter().copied().filter(|p| *p > 0.0).collect();
        let sum: f64 = kept.iter().sum();
        if kept.is_empty() || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!("probabilities sum to {sum}, not 1")));
        }
        let probs: Vec<f64> = kept.iter().map(|p| p / sum).collect();
        Ok(Self {
            words: (0..probs.len() as u32).map(|i| vec![i]).collect(),
            counts: Vec::new(),
            total: 0,
            probs,
            l: 1,
            c: CharType::F,
            sequence: None,
        })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Occurrence counts parallel to [`Distribution::words`]; empty for
    /// distributions built from bare probabilities.
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn words(&self) -> &[Vec<u32>] {
        &self.words
    }

    /// Dictionary size.
    pub fn n(&self) -> usize {
        self.words.len()
    }

    /// Number of word occurrences, `N - l + 1`.
    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn char_type(&self) -> CharType {
        self.c
    }

    /// Word `i` rendered with `-` between symbols.
    pub fn word_string(&self, i: usize) -> String {
        let w = &self.words[i];
        match &self.sequence {
            Some(seq) => w
                .iter()
                .map(|&id| seq.alphabet.symbol(id).unwrap_or("?"))
                .collect::<Vec<_>>()
                .join("-"),
            None => w.iter().map(|id| id.to_string()).collect::<Vec<_>>().join("-"),
        }
    }

    /// `word,probability` rows in the deterministic word order.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["word", "probability"])?;
        for (i, p) in self.probs.iter().enumerate() {
            w.write_record([self.word_string(i), format!("{p:e}")])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `P = alpha(t; l, c)`.
pub fn distribution(trace: &Trace, l: usize, c: CharType) -> Result<Distribution> {
    if trace.len() < l {
        return Err(Error::TraceTooShort {
            records: trace.len(),
            l,
        });
    }
    let seq = encode(trace, c)?;
    Distribution::from_sequence(&seq, l, c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::{parse_trace, ParseMode};

    fn nested() -> Trace {
        parse_trace(
            "f1 entry\nf2 entry\nf2 entry\nf2 exit\nf2 exit\nf1 exit\n",
            ParseMode::Strict,
        )
        .unwrap()
    }

    fn table(d: &Distribution) -> Vec<(String, u64)> {
        (0..d.n()).map(|i| (d.word_string(i), d.counts()[i])).collect()
    }

    #[test]
    fn abca_words() {
        // A=0 B=1 C=2
        let s = [0u32, 1, 2, 0];
        let two: Vec<&[u32]> = extract_lwords(&s, 2).collect();
        assert_eq!(two, vec![&[0, 1][..], &[1, 2], &[2, 0]]);
        assert_eq!(extract_lwords(&s, 1).count(), 4);
        assert_eq!(extract_lwords(&s[..2], 3).count(), 0);
    }

    #[test]
    fn nested_trace_bigrams() {
        let d = distribution(&nested(), 2, CharType::F).unwrap();
        assert_eq!(d.n(), 3);
        assert_eq!(d.total(), 5);
        let mut rows = table(&d);
        rows.sort();
        assert_eq!(
            rows,
            vec![
                ("f1-f2".to_string(), 1),
                ("f2-f1".to_string(), 1),
                ("f2-f2".to_string(), 3)
            ]
        );
    }

    #[test]
    fn nested_trace_trigrams_and_ftd() {
        let d = distribution(&nested(), 3, CharType::F).unwrap();
        assert_eq!(d.total(), 4);
        let mut c = d.counts().to_vec();
        c.sort();
        assert_eq!(c, vec![1, 1, 2]);

        let d = distribution(&nested(), 1, CharType::FTD).unwrap();
        assert_eq!(d.n(), 6);
        assert!(d.probs().iter().all(|p| (*p - 1.0 / 6.0).abs() < 1e-15));
    }

    #[test]
    fn too_short() {
        let err = distribution(&nested(), 7, CharType::F).unwrap_err();
        assert!(matches!(err, Error::TraceTooShort { records: 6, l: 7 }));
    }

    #[test]
    fn full_length_word() {
        let d = distribution(&nested(), 6, CharType::FT).unwrap();
        assert_eq!(d.n(), 1);
        assert_eq!(d.probs(), &[1.0]);
    }

    #[test]
    fn csv_dump_is_ordered() {
        let d = distribution(&nested(), 1, CharType::FT).unwrap();
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "word,probability");
        assert!(lines[1].starts_with("f1-entry,"));
        assert_eq!(lines.len(), 5);
    }

    #[test]
    fn from_probabilities_validates() {
        assert!(Distribution::from_probabilities(&[0.5, 0.4]).is_err());
        assert!(Distribution::from_probabilities(&[-0.5, 1.5]).is_err());
        let d = Distribution::from_probabilities(&[0.25, 0.0, 0.75]).unwrap();
        assert_eq!(d.n(), 2);
    }
}
