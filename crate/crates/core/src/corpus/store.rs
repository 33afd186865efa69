//! On-disk index layout (all integers and floats little-endian):
//!
//! ```text
//! magic        8 bytes  "TRCENTIX"
//! version      u32
//! flags        u32      bit 0: raw traces retained
//! grid_len     u32      m
//! grid_hash    u64
//! entry_count  u64      T
//! grid         m x 12 bytes  (E:u8 c:u8 l:u16 q:f64)
//! maxima       m x f64
//! rows         T x m x f64   fingerprint vectors in entry order
//! strings      grid name, then per entry: trace id, class id,
//!              name count (u32) + names, [raw records]; then
//!              manifest count (u32) + (class, metadata) pairs
//! ```
//!
//! Strings are `u32` byte length followed by UTF-8. A raw record is
//! `name index:u32, kind:u8, depth:u32` where the index points into the
//! entry's name list.

use crate::corpus::{CorpusEntry, CorpusIndex};
use crate::distance::NormMaxima;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::trace::{RecordKind, Trace, TraceRecord};

pub const MAGIC: &[u8; 8] = b"TRCENTIX";
pub const FORMAT_VERSION: u32 = 1;

const FLAG_RAW: u32 = 1;
const HEADER_LEN: usize = 8 + 4 + 4 + 4 + 8 + 8;
const MAXIMA_TOLERANCE: f64 = 1e-12;

fn put_str(out: &mut Vec<u8>, s: &str) {
    out.extend_from_slice(&(s.len() as u32).to_le_bytes());
    out.extend_from_slice(s.as_bytes());
}

pub(crate) fn encode(index: &CorpusIndex) -> Vec<u8> {
    let grid = index.grid();
    let m = grid.len();
    let t = index.len();
    let mut out = Vec::with_capacity(HEADER_LEN + m * 12 + (t + 1) * m * 8 + t * 64);

    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    let flags = if index.retains_raw() { FLAG_RAW } else { 0 };
    out.extend_from_slice(&flags.to_le_bytes());
    out.extend_from_slice(&(m as u32).to_le_bytes());
    out.extend_from_slice(&grid.hash().to_le_bytes());
    out.extend_from_slice(&(t as u64).to_le_bytes());
    out.extend_from_slice(&grid.to_bytes());
    for v in &index.norms().maxima {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for e in index.entries() {
        for v in &e.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }

    put_str(&mut out, &grid.name);
    for e in index.entries() {
        put_str(&mut out, &e.trace_id);
        put_str(&mut out, &e.class_id);
        out.extend_from_slice(&(e.function_names.len() as u32).to_le_bytes());
        for n in &e.function_names {
            put_str(&mut out, n);
        }
        if index.retains_raw() {
            let raw = e.raw.as_ref().expect("raw retention implies raw traces");
            out.extend_from_slice(&(raw.records.len() as u32).to_le_bytes());
            for r in &raw.records {
                let idx = e
                    .function_names
                    .binary_search(&r.function)
                    .expect("record names are in the entry name list");
                out.extend_from_slice(&(idx as u32).to_le_bytes());
                out.push(match r.kind {
                    RecordKind::Entry => 0,
                    RecordKind::Exit => 1,
                });
                out.extend_from_slice(&r.depth.to_le_bytes());
            }
        }
    }
    out.extend_from_slice(&(index.manifest().len() as u32).to_le_bytes());
    for (class, meta) in index.manifest() {
        put_str(&mut out, class);
        put_str(&mut out, meta);
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|end| *end <= self.buf.len())
            .ok_or_else(|| Error::CorruptIndex(format!("truncated at byte {}", self.pos)))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn string(&mut self) -> Result<String> {
        let n = self.u32()? as usize;
        let bytes = self.take(n)?;
        String::from_utf8(bytes.to_vec()).map_err(|_| Error::CorruptIndex("invalid UTF-8 string".into()))
    }
}

pub(crate) fn decode(bytes: &[u8]) -> Result<CorpusIndex> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(8).ok() != Some(&MAGIC[..]) {
        return Err(Error::CorruptIndex("not an index file (bad magic)".into()));
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::FormatVersionMismatch {
            expected: FORMAT_VERSION,
            found: version,
        });
    }
    let flags = r.u32()?;
    let m = r.u32()? as usize;
    if m == 0 {
        return Err(Error::CorruptIndex("grid has no specs".into()));
    }
    let stored_hash = r.u64()?;
    let t = r.u64()? as usize;
    let grid_bytes = r.take(m.checked_mul(12).ok_or_else(|| Error::CorruptIndex("grid size".into()))?)?;
    let maxima = (0..m).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
    let row_bytes = t
        .checked_mul(m)
        .and_then(|x| x.checked_mul(8))
        .ok_or_else(|| Error::CorruptIndex("entry count overflow".into()))?;
    let rows = r.take(row_bytes)?;

    let name = r.string()?;
    let grid = Grid::from_bytes(name, grid_bytes)?;
    if grid.hash() != stored_hash {
        return Err(Error::CorruptIndex("grid hash does not match grid block".into()));
    }

    let retain_raw = flags & FLAG_RAW != 0;
    let mut index = CorpusIndex::new(grid).with_raw_traces(retain_raw);
    let mut entries = Vec::with_capacity(t);
    for (i, row) in rows.chunks_exact(m * 8).take(t).enumerate() {
        let values: Vec<f64> = row
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
            .collect();
        let trace_id = r.string()?;
        let class_id = r.string()?;
        let n_names = r.u32()? as usize;
        let function_names = (0..n_names).map(|_| r.string()).collect::<Result<Vec<_>>>()?;
        let raw = if retain_raw {
            let n = r.u32()? as usize;
            let mut records = Vec::with_capacity(n.min(1 << 20));
            for _ in 0..n {
                let idx = r.u32()? as usize;
                let function = function_names
                    .get(idx)
                    .ok_or_else(|| Error::CorruptIndex(format!("entry {i}: name index {idx} out of range")))?
                    .clone();
                let kind = match r.u8()? {
                    0 => RecordKind::Entry,
                    1 => RecordKind::Exit,
                    k => return Err(Error::CorruptIndex(format!("entry {i}: bad record kind {k}"))),
                };
                let depth = r.u32()?;
                records.push(TraceRecord { function, kind, depth });
            }
            Some(Trace {
                id: trace_id.clone(),
                records,
            })
        } else {
            None
        };
        entries.push(CorpusEntry {
            trace_id,
            class_id,
            values,
            function_names,
            raw,
        });
    }
    let n_manifest = r.u32()? as usize;
    for _ in 0..n_manifest {
        let class = r.string()?;
        let meta = r.string()?;
        index.set_class_metadata(class, meta);
    }
    if r.pos != bytes.len() {
        return Err(Error::CorruptIndex(format!("{} trailing bytes", bytes.len() - r.pos)));
    }

    for e in entries {
        let key = e.trace_id.clone();
        if index.positions.insert(key.clone(), index.entries.len()).is_some() {
            return Err(Error::CorruptIndex(format!("duplicate trace id `{key}`")));
        }
        index.entries.push(e);
    }
    let recomputed = index.recompute_norms();
    for (k, (stored, fresh)) in maxima.iter().zip(&recomputed.maxima).enumerate() {
        let agree = stored == fresh || (stored - fresh).abs() <= MAXIMA_TOLERANCE;
        if !agree {
            return Err(Error::CorruptIndex(format!(
                "maximum of spec {k} is {stored}, stored vectors give {fresh}"
            )));
        }
    }
    index.norms = NormMaxima {
        grid_hash: recomputed.grid_hash,
        maxima,
    };
    Ok(index)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::EntropySpec;
    use crate::trace::{parse_trace, CharType, ParseMode};

    fn sample(raw: bool) -> CorpusIndex {
        let mut idx = CorpusIndex::new(Grid::default_lambda()).with_raw_traces(raw);
        let texts = [
            "main entry\na entry\nb entry\nb exit\na exit\nc entry\nc exit\nmain exit\n",
            "main entry\na entry\na exit\na entry\na exit\nc entry\nc exit\nmain exit\n",
            "main entry\nb entry\nb exit\nb entry\nb exit\nb entry\nb exit\nmain exit\n",
        ];
        for (i, text) in texts.iter().enumerate() {
            let t = parse_trace(text, ParseMode::Strict).unwrap().with_id(format!("tr{i}"));
            idx.ingest(&t, format!("d{}", i % 2)).unwrap();
        }
        idx.set_class_metadata("d0", "crash in parser");
        idx
    }

    #[test]
    fn round_trip() {
        for raw in [false, true] {
            let idx = sample(raw);
            let back = decode(&encode(&idx)).unwrap();
            assert_eq!(back, idx);
        }
    }

    #[test]
    fn lenient_raw_traces_survive() {
        let mut idx = CorpusIndex::new(Grid::single(EntropySpec::shannon(1, CharType::FTD))).with_raw_traces(true);
        let t = parse_trace("a entry\nb exit\nc entry", ParseMode::Lenient).unwrap();
        idx.ingest(&t, "x").unwrap();
        assert_eq!(decode(&encode(&idx)).unwrap(), idx);
    }

    #[test]
    fn empty_index() {
        let idx = CorpusIndex::new(Grid::default_lambda());
        let back = decode(&encode(&idx)).unwrap();
        assert!(back.is_empty());
        assert_eq!(back.grid().len(), 504);
    }

    #[test]
    fn tampered_maxima() {
        let idx = sample(false);
        let mut bytes = encode(&idx);
        let at = HEADER_LEN + idx.grid().len() * 12 + 5 * 8;
        let v = f64::from_le_bytes(bytes[at..at + 8].try_into().unwrap());
        bytes[at..at + 8].copy_from_slice(&(v + 0.5).to_le_bytes());
        assert!(matches!(decode(&bytes), Err(Error::CorruptIndex(_))));
    }

    #[test]
    fn version_and_magic() {
        let idx = sample(false);
        let mut bytes = encode(&idx);
        bytes[8..12].copy_from_slice(&2u32.to_le_bytes());
        assert!(matches!(
            decode(&bytes),
            Err(Error::FormatVersionMismatch { expected: 1, found: 2 })
        ));
        assert!(matches!(decode(b"nonsense"), Err(Error::CorruptIndex(_))));
        assert!(matches!(decode(&[]), Err(Error::CorruptIndex(_))));
        let good = encode(&idx);
        assert!(matches!(decode(&good[..good.len() - 3]), Err(Error::CorruptIndex(_))));
    }
}
