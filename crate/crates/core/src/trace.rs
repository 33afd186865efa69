//! Execution traces: parsing the line format, canonical rendering, and
//! encoding records into interned symbol sequences.
//!
//! A trace file holds one record per line, `<function> <entry|exit>`.
//! Decorations such as leading line numbers and `|` nesting guides are
//! tolerated, so
//!
//! ```text
//! 1 f1 entry
//! 2 | f2 entry
//! 3 | | f2 entry
//! ```
//!
//! parses the same as the undecorated form. Call depth is reconstructed
//! from the entry/exit nesting, never from indentation.

use std::fmt;
use std::str::FromStr;

use indexmap::IndexSet;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RecordKind {
    Entry,
    Exit,
}

impl RecordKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RecordKind::Entry => "entry",
            RecordKind::Exit => "exit",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TraceRecord {
    pub function: String,
    pub kind: RecordKind,
    /// Call-tree depth, 1 for the outermost frame.
    pub depth: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub id: String,
    pub records: Vec<TraceRecord>,
}

/// Granularity at which a record becomes a symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CharType {
    /// Function name only.
    F,
    /// Function name and record kind.
    FT,
    /// Function name, record kind and call depth.
    FTD,
}

impl CharType {
    pub const ALL: [CharType; 3] = [CharType::F, CharType::FT, CharType::FTD];

    pub fn code(self) -> u8 {
        match self {
            CharType::F => 0,
            CharType::FT => 1,
            CharType::FTD => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        CharType::ALL.get(code as usize).copied()
    }

    /// Symbol text of `record` at this granularity.
    pub fn symbol(self, record: &TraceRecord) -> String {
        match self {
            CharType::F => record.function.clone(),
            CharType::FT => format!("{}-{}", record.function, record.kind.as_str()),
            CharType::FTD => format!(
                "{}-{}-depth{}",
                record.function,
                record.kind.as_str(),
                record.depth
            ),
        }
    }
}

impl fmt::Display for CharType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CharType::F => "F",
            CharType::FT => "FT",
            CharType::FTD => "FTD",
        })
    }
}

impl FromStr for CharType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "F" => Ok(CharType::F),
            "FT" => Ok(CharType::FT),
            "FTD" => Ok(CharType::FTD),
            other => Err(Error::InvalidConfig(format!("unknown character type `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ParseMode {
    #[default]
    Strict,
    Lenient,
}

fn is_decoration(token: &str) -> bool {
    token.chars().all(|ch| ch == '|')
}

fn is_line_number(token: &str) -> bool {
    token.chars().all(|ch| ch.is_ascii_digit())
}

/// Parses trace text into records, reconstructing depth from a call stack.
pub fn parse_trace(text: &str, mode: ParseMode) -> Result<Trace> {
    let mut stack: Vec<String> = Vec::new();
    let mut records = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let mut tokens: Vec<&str> = raw.split_whitespace().collect();
        // Leading line numbers and nesting guides are cosmetic.
        let skip = tokens
            .iter()
            .take_while(|t| is_decoration(t) || is_line_number(t))
            .count();
        tokens.drain(..skip.min(tokens.len().saturating_sub(2)));
        tokens.retain(|t| !is_decoration(t));
        if tokens.len() < 2 {
            return Err(Error::MalformedLine {
                line: line_no,
                reason: "expected `<function> <entry|exit>`".into(),
            });
        }
        let kind_tok = tokens[tokens.len() - 1];
        let function = tokens[tokens.len() - 2].to_string();
        let kind = match kind_tok.to_ascii_lowercase().as_str() {
            "entry" => RecordKind::Entry,
            "exit" => RecordKind::Exit,
            _ => {
                return Err(Error::MalformedLine {
                    line: line_no,
                    reason: format!("missing entry/exit keyword, found `{kind_tok}`"),
                })
            }
        };

        match kind {
            RecordKind::Entry => {
                let depth = stack.len() as u32 + 1;
                stack.push(function.clone());
                records.push(TraceRecord {
                    function,
                    kind,
                    depth,
                });
            }
            RecordKind::Exit => {
                let top_matches = stack.last().is_some_and(|top| *top == function);
                if top_matches {
                    let depth = stack.len() as u32;
                    stack.pop();
                    records.push(TraceRecord {
                        function,
                        kind,
                        depth,
                    });
                } else if mode == ParseMode::Lenient {
                    let depth = stack.len().max(1) as u32;
                    records.push(TraceRecord {
                        function,
                        kind,
                        depth,
                    });
                } else {
                    let detail = match stack.last() {
                        Some(top) => format!("does not match open call `{top}`"),
                        None => "with no open call".to_string(),
                    };
                    return Err(Error::UnbalancedExit {
                        line: line_no,
                        function,
                        detail,
                    });
                }
            }
        }
    }

    if records.is_empty() {
        return Err(Error::EmptyTrace);
    }
    Ok(Trace {
        id: String::new(),
        records,
    })
}

impl Trace {
    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Canonical text form: one `<function> <kind>` line per record.
    pub fn render(&self) -> String {
        let mut out = String::with_capacity(self.records.len() * 12);
        for r in &self.records {
            out.push_str(&r.function);
            out.push(' ');
            out.push_str(r.kind.as_str());
            out.push('\n');
        }
        out
    }

    /// Distinct function names, sorted.
    pub fn function_names(&self) -> Vec<String> {
        let mut names: Vec<String> = self
            .records
            .iter()
            .map(|r| r.function.clone())
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect();
        names.shrink_to_fit();
        names
    }
}

/// Interner mapping symbol strings to dense ids in first-seen order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Alphabet {
    symbols: IndexSet<String>,
}

impl Alphabet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, symbol: String) -> u32 {
        let (id, _) = self.symbols.insert_full(symbol);
        id as u32
    }

    pub fn id_of(&self, symbol: &str) -> Option<u32> {
        self.symbols.get_index_of(symbol).map(|i| i as u32)
    }

    pub fn symbol(&self, id: u32) -> Option<&str> {
        self.symbols.get_index(id as usize).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// Encodes `trace` into ids of this (possibly shared) alphabet.
    pub fn encode_ids(&mut self, trace: &Trace, c: CharType) -> Vec<u32> {
        trace
            .records
            .iter()
            .map(|r| self.intern(c.symbol(r)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolSequence {
    pub symbols: Vec<u32>,
    pub alphabet: Alphabet,
}

impl SymbolSequence {
    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbol_strings(&self) -> impl Iterator<Item = &str> + '_ {
        self.symbols
            .iter()
            .map(move |&id| self.alphabet.symbol(id).expect("interned id"))
    }
}

/// Encodes every record of `trace` as a symbol under `c`.
pub fn encode(trace: &Trace, c: CharType) -> Result<SymbolSequence> {
    if trace.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let mut alphabet = Alphabet::new();
    let symbols = alphabet.encode_ids(trace, c);
    Ok(SymbolSequence { symbols, alphabet })
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const NESTED: &str = "1 f1 entry\n2 | f2 entry\n3 | | f2 entry\n4 | | f2 exit\n5 | f2 exit\n6 f1 exit\n";

    fn rec(f: &str, kind: RecordKind, depth: u32) -> TraceRecord {
        TraceRecord {
            function: f.into(),
            kind,
            depth,
        }
    }

    #[test]
    fn nested_trace_depths() {
        let t = parse_trace(NESTED, ParseMode::Strict).unwrap();
        use RecordKind::*;
        assert_eq!(
            t.records,
            vec![
                rec("f1", Entry, 1),
                rec("f2", Entry, 2),
                rec("f2", Entry, 3),
                rec("f2", Exit, 3),
                rec("f2", Exit, 2),
                rec("f1", Exit, 1),
            ]
        );
    }

    #[test]
    fn single_entry() {
        let t = parse_trace("a entry", ParseMode::Strict).unwrap();
        assert_eq!(t.records, vec![rec("a", RecordKind::Entry, 1)]);
    }

    #[test]
    fn mismatched_exit_is_rejected_in_strict_mode() {
        let err = parse_trace("a entry\nb exit", ParseMode::Strict).unwrap_err();
        assert!(matches!(err, Error::UnbalancedExit { line: 2, .. }));
        let err = parse_trace("b exit", ParseMode::Strict).unwrap_err();
        assert!(matches!(err, Error::UnbalancedExit { line: 1, .. }));
    }

    #[test]
    fn lenient_mode_keeps_stack() {
        let t = parse_trace("a entry\nb exit\nb exit\na exit\nz exit", ParseMode::Lenient).unwrap();
        let depths: Vec<u32> = t.records.iter().map(|r| r.depth).collect();
        assert_eq!(depths, vec![1, 1, 1, 1, 1]);
        assert_eq!(t.records[3].kind, RecordKind::Exit);
    }

    #[test]
    fn malformed_lines() {
        assert!(matches!(
            parse_trace("a entry\nfoo bar\n", ParseMode::Strict),
            Err(Error::MalformedLine { line: 2, .. })
        ));
        assert!(matches!(
            parse_trace("entry", ParseMode::Strict),
            Err(Error::MalformedLine { line: 1, .. })
        ));
        assert!(matches!(
            parse_trace("\n  \n", ParseMode::Strict),
            Err(Error::EmptyTrace)
        ));
    }

    #[test]
    fn keyword_is_case_insensitive_and_truncation_is_legal() {
        let t = parse_trace("main ENTRY\nwork Entry\n", ParseMode::Strict).unwrap();
        assert_eq!(t.records[1], rec("work", RecordKind::Entry, 2));
    }

    #[test]
    fn numeric_function_name_survives() {
        // Only leading decorations are dropped; the name slot is always kept.
        let t = parse_trace("7 42 entry", ParseMode::Strict).unwrap();
        assert_eq!(t.records[0].function, "42");
    }

    #[test]
    fn encode_alphabet_sizes() {
        let t = parse_trace(NESTED, ParseMode::Strict).unwrap();
        let f = encode(&t, CharType::F).unwrap();
        assert_eq!(
            f.symbol_strings().collect::<Vec<_>>(),
            vec!["f1", "f2", "f2", "f2", "f2", "f1"]
        );
        assert_eq!(f.alphabet.len(), 2);
        assert_eq!(encode(&t, CharType::FT).unwrap().alphabet.len(), 4);
        let ftd = encode(&t, CharType::FTD).unwrap();
        assert_eq!(ftd.alphabet.len(), 6);
        assert_eq!(ftd.alphabet.symbol(2), Some("f2-entry-depth3"));
    }

    #[test]
    fn render_round_trip() {
        let t = parse_trace(NESTED, ParseMode::Strict).unwrap();
        let again = parse_trace(&t.render(), ParseMode::Strict).unwrap();
        assert_eq!(t, again);
    }
}
