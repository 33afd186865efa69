//! C ABI over the tracent library.
//!
//! Objects are opaque handles created by `*_new`/`*_parse`/`*_load` calls and
//! released with the matching `*_free`. Every fallible call returns a
//! [`TracentStatus`]; on failure `tracent_last_error()` describes the error
//! for the calling thread until the next failing call on that thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use tracent::corpus::{CorpusIndex, Prefilter};
use tracent::entropy::{self, EntropyKind, EntropySpec};
use tracent::grid::Grid;
use tracent::ranking::{rank_classes, DistanceConfig, RankedClass};
use tracent::trace::{parse_trace, ParseMode, Trace};
use tracent::Error;

/// Result codes. `Ok` is zero; every library error has its own code.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TracentStatus {
    Ok = 0,
    NullPointer,
    InvalidUtf8,
    MalformedLine,
    UnbalancedExit,
    EmptyTrace,
    TraceTooShort,
    InvalidConfig,
    NonFinite,
    GridMismatch,
    UnsortedInput,
    EmptyCorpus,
    DuplicateTraceId,
    FormatVersionMismatch,
    CorruptIndex,
    RawTracesUnavailable,
    TooFewTraces,
    SpecNotInGrid,
    Io,
    Csv,
    Panic,
}

impl From<&Error> for TracentStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::MalformedLine { .. } => Self::MalformedLine,
            Error::UnbalancedExit { .. } => Self::UnbalancedExit,
            Error::EmptyTrace => Self::EmptyTrace,
            Error::TraceTooShort { .. } => Self::TraceTooShort,
            Error::InvalidConfig(_) => Self::InvalidConfig,
            Error::NonFinite(_) => Self::NonFinite,
            Error::GridMismatch(_) => Self::GridMismatch,
            Error::UnsortedInput(_) => Self::UnsortedInput,
            Error::EmptyCorpus => Self::EmptyCorpus,
            Error::DuplicateTraceId(_) => Self::DuplicateTraceId,
            Error::FormatVersionMismatch { .. } => Self::FormatVersionMismatch,
            Error::CorruptIndex(_) => Self::CorruptIndex,
            Error::RawTracesUnavailable => Self::RawTracesUnavailable,
            Error::TooFewTraces { .. } => Self::TooFewTraces,
            Error::SpecNotInGrid(_) => Self::SpecNotInGrid,
            Error::Io(_) => Self::Io,
            Error::Csv(_) => Self::Csv,
        }
    }
}

/// Entropy kinds for [`tracent_entropy`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TracentEntropyKind {
    Shannon = 0,
    LandsbergVedral,
    Renyi,
    Tsallis,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TracentPrefilter {
    Off = 0,
    Intersect,
    Superset,
}

/// A parsed trace.
pub struct TracentTrace(Trace);

/// A corpus index.
pub struct TracentIndex(CorpusIndex);

/// Ranked classes returned by [`tracent_index_query`].
pub struct TracentRanking {
    rows: Vec<RankedClass>,
    class_ids: Vec<CString>,
    trace_ids: Vec<CString>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Failure(TracentStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure((&e).into(), e.to_string())
    }
}

type FfiResult<T> = std::result::Result<T, Failure>;

fn guard(f: impl FnOnce() -> FfiResult<()>) -> TracentStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TracentStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("Panic: internal error".into());
            TracentStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(TracentStatus::NullPointer, format!("NullPointer: `{what}` is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> FfiResult<&'a str> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(TracentStatus::InvalidUtf8, format!("InvalidUtf8: `{what}` is not UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> FfiResult<&'a T> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> FfiResult<&'a mut T> {
    p.as_mut().ok_or_else(|| null(what))
}

/// Message of the last failed call on this thread (empty if none). Valid
/// until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn tracent_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version, static string.
#[no_mangle]
pub extern "C" fn tracent_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses trace text (one `<function> <entry|exit>` record per line).
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tracent_trace_parse(
    text: *const c_char,
    lenient: bool,
    out: *mut *mut TracentTrace,
) -> TracentStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let text = str_arg(text, "text")?;
        let mode = if lenient { ParseMode::Lenient } else { ParseMode::Strict };
        let trace = parse_trace(text, mode)?;
        *out = Box::into_raw(Box::new(TracentTrace(trace)));
        Ok(())
    })
}

/// Sets the id under which the trace is stored by [`tracent_index_ingest`].
///
/// # Safety
/// `trace` must come from [`tracent_trace_parse`]; `id` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn tracent_trace_set_id(trace: *mut TracentTrace, id: *const c_char) -> TracentStatus {
    guard(|| {
        let trace = out_arg(trace, "trace")?;
        trace.0.id = str_arg(id, "id")?.to_string();
        Ok(())
    })
}

/// Number of records, 0 for a null handle.
///
/// # Safety
/// `trace` must be null or come from [`tracent_trace_parse`].
#[no_mangle]
pub unsafe extern "C" fn tracent_trace_len(trace: *const TracentTrace) -> usize {
    trace.as_ref().map_or(0, |t| t.0.len())
}

/// # Safety
/// `trace` must be null or come from [`tracent_trace_parse`], and not be
/// used afterwards.
#[no_mangle]
pub unsafe extern "C" fn tracent_trace_free(trace: *mut TracentTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}

/// Fingerprint of `trace` for a spec written `E,q,l,c` (e.g. `L,1e-5,3,FTD`).
///
/// # Safety
/// Pointers must be valid; `spec` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn tracent_fingerprint(
    trace: *const TracentTrace,
    spec: *const c_char,
    out: *mut f64,
) -> TracentStatus {
    guard(|| {
        let trace = ref_arg(trace, "trace")?;
        let spec: EntropySpec = str_arg(spec, "spec")?.parse()?;
        let out = out_arg(out, "out")?;
        *out = entropy::fingerprint(&trace.0, &spec)?;
        Ok(())
    })
}

/// Entropy (bits) of a probability vector of length `n`. `q` is ignored for
/// Shannon.
///
/// # Safety
/// `probs` must point to `n` doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn tracent_entropy(
    probs: *const f64,
    n: usize,
    kind: TracentEntropyKind,
    q: f64,
    out: *mut f64,
) -> TracentStatus {
    guard(|| {
        if probs.is_null() && n > 0 {
            return Err(null("probs"));
        }
        let out = out_arg(out, "out")?;
        let slice = if n == 0 { &[][..] } else { std::slice::from_raw_parts(probs, n) };
        let dist = tracent::Distribution::from_probabilities(slice)?;
        let kind = match kind {
            TracentEntropyKind::Shannon => EntropyKind::S,
            TracentEntropyKind::LandsbergVedral => EntropyKind::L,
            TracentEntropyKind::Renyi => EntropyKind::R,
            TracentEntropyKind::Tsallis => EntropyKind::T,
        };
        if !(q >= 0.0 && q.is_finite()) {
            return Err(Error::InvalidConfig(format!("q={q} must be finite and >= 0")).into());
        }
        *out = entropy::extended(dist.probs(), kind, q);
        Ok(())
    })
}

/// Empty index over the default 504-spec grid, or over the single spec
/// `spec` when it is not null.
///
/// # Safety
/// `spec` must be null or NUL-terminated; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn tracent_index_new(
    spec: *const c_char,
    retain_raw: bool,
    out: *mut *mut TracentIndex,
) -> TracentStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let grid = if spec.is_null() {
            Grid::default_lambda()
        } else {
            Grid::single(str_arg(spec, "spec")?.parse()?)
        };
        *out = Box::into_raw(Box::new(TracentIndex(CorpusIndex::new(grid).with_raw_traces(retain_raw))));
        Ok(())
    })
}

/// # Safety
/// `path` NUL-terminated; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn tracent_index_load(path: *const c_char, out: *mut *mut TracentIndex) -> TracentStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let idx = CorpusIndex::load(str_arg(path, "path")?)?;
        *out = Box::into_raw(Box::new(TracentIndex(idx)));
        Ok(())
    })
}

/// # Safety
/// `index` from this library; `path` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn tracent_index_save(index: *const TracentIndex, path: *const c_char) -> TracentStatus {
    guard(|| {
        let index = ref_arg(index, "index")?;
        index.0.save(str_arg(path, "path")?)?;
        Ok(())
    })
}

/// Fingerprints `trace` into `index` under `class_id`. The trace keeps its
/// id if one was set, otherwise the index assigns one.
///
/// # Safety
/// Handles from this library; `class_id` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn tracent_index_ingest(
    index: *mut TracentIndex,
    trace: *const TracentTrace,
    class_id: *const c_char,
) -> TracentStatus {
    guard(|| {
        let index = out_arg(index, "index")?;
        let trace = ref_arg(trace, "trace")?;
        index.0.ingest(&trace.0, str_arg(class_id, "class_id")?)?;
        Ok(())
    })
}

/// Number of stored traces, 0 for a null handle.
///
/// # Safety
/// `index` null or from this library.
#[no_mangle]
pub unsafe extern "C" fn tracent_index_len(index: *const TracentIndex) -> usize {
    index.as_ref().map_or(0, |i| i.0.len())
}

/// # Safety
/// `index` null or from this library, not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn tracent_index_free(index: *mut TracentIndex) {
    if !index.is_null() {
        drop(Box::from_raw(index));
    }
}

/// Classes ranked at most `top` for `trace`. With `spec` null the whole
/// grid is compared under the `w`-norm; otherwise only that spec.
///
/// # Safety
/// Handles from this library; `spec` null or NUL-terminated; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn tracent_index_query(
    index: *const TracentIndex,
    trace: *const TracentTrace,
    spec: *const c_char,
    w: f64,
    prefilter: TracentPrefilter,
    top: usize,
    out: *mut *mut TracentRanking,
) -> TracentStatus {
    guard(|| {
        let index = ref_arg(index, "index")?;
        let trace = ref_arg(trace, "trace")?;
        let out = out_arg(out, "out")?;
        if top == 0 {
            return Err(Error::InvalidConfig("top must be >= 1".into()).into());
        }
        let config = if spec.is_null() {
            DistanceConfig::Multi { w }
        } else {
            DistanceConfig::Single(str_arg(spec, "spec")?.parse()?)
        };
        let policy = match prefilter {
            TracentPrefilter::Off => Prefilter::Off,
            TracentPrefilter::Intersect => Prefilter::Intersect,
            TracentPrefilter::Superset => Prefilter::Superset,
        };
        let rows = rank_classes(&trace.0, &index.0, &config, policy, top)?;
        let cstr = |s: &str| CString::new(s.replace('\0', " ")).unwrap_or_default();
        let ranking = TracentRanking {
            class_ids: rows.iter().map(|r| cstr(&r.class_id)).collect(),
            trace_ids: rows.iter().map(|r| cstr(&r.nearest_trace_id)).collect(),
            rows,
        };
        *out = Box::into_raw(Box::new(ranking));
        Ok(())
    })
}

/// # Safety
/// `ranking` null or from [`tracent_index_query`].
#[no_mangle]
pub unsafe extern "C" fn tracent_ranking_len(ranking: *const TracentRanking) -> usize {
    ranking.as_ref().map_or(0, |r| r.rows.len())
}

/// Row `i` of a ranking. The string pointers live as long as the ranking.
///
/// # Safety
/// `ranking` from [`tracent_index_query`]; out pointers valid or null
/// (null outputs are skipped).
#[no_mangle]
pub unsafe extern "C" fn tracent_ranking_get(
    ranking: *const TracentRanking,
    i: usize,
    class_id: *mut *const c_char,
    rank: *mut usize,
    nearest_trace_id: *mut *const c_char,
    distance: *mut f64,
) -> TracentStatus {
    guard(|| {
        let r = ref_arg(ranking, "ranking")?;
        let row = r.rows.get(i).ok_or_else(|| {
            Failure(
                TracentStatus::InvalidConfig,
                format!("InvalidConfig: row {i} out of range ({} rows)", r.rows.len()),
            )
        })?;
        if let Some(p) = class_id.as_mut() {
            *p = r.class_ids[i].as_ptr();
        }
        if let Some(p) = rank.as_mut() {
            *p = row.rank;
        }
        if let Some(p) = nearest_trace_id.as_mut() {
            *p = r.trace_ids[i].as_ptr();
        }
        if let Some(p) = distance.as_mut() {
            *p = row.distance;
        }
        Ok(())
    })
}

/// # Safety
/// `ranking` null or from [`tracent_index_query`], not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn tracent_ranking_free(ranking: *mut TracentRanking) {
    if !ranking.is_null() {
        drop(Box::from_raw(ranking));
    }
}
