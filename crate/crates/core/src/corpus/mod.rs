//! Library of labeled traces kept as fingerprint vectors.

mod store;

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;

use crate::distance::{FingerprintVector, NormMaxima};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::trace::{parse_trace, ParseMode, Trace};

pub use store::{FORMAT_VERSION, MAGIC};

/// Candidate selection by shared function names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Prefilter {
    Off,
    /// Keep entries sharing at least one function name with the query.
    #[default]
    Intersect,
    /// Keep entries whose names include every query name.
    Superset,
}

impl FromStr for Prefilter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "off" => Ok(Prefilter::Off),
            "intersect" => Ok(Prefilter::Intersect),
            "superset" => Ok(Prefilter::Superset),
            other => Err(Error::InvalidConfig(format!("unknown prefilter `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusEntry {
    pub trace_id: String,
    pub class_id: String,
    pub values: Vec<f64>,
    /// Sorted distinct function names.
    pub function_names: Vec<String>,
    pub raw: Option<Trace>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusIndex {
    grid: Grid,
    entries: Vec<CorpusEntry>,
    positions: HashMap<String, usize>,
    norms: NormMaxima,
    manifest: BTreeMap<String, String>,
    retain_raw: bool,
}

impl CorpusIndex {
    pub fn new(grid: Grid) -> Self {
        Self {
            norms: NormMaxima::zeros(&grid),
            grid,
            entries: Vec::new(),
            positions: HashMap::new(),
            manifest: BTreeMap::new(),
            retain_raw: false,
        }
    }

    /// Keep the parsed traces alongside their fingerprints (needed by the
    /// edit-distance baseline).
    pub fn with_raw_traces(mut self, retain: bool) -> Self {
        self.retain_raw = retain;
        self
    }

    pub fn retains_raw(&self) -> bool {
        self.retain_raw
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn norms(&self) -> &NormMaxima {
        &self.norms
    }

    pub fn manifest(&self) -> &BTreeMap<String, String> {
        &self.manifest
    }

    pub fn set_class_metadata(&mut self, class_id: impl Into<String>, meta: impl Into<String>) {
        self.manifest.insert(class_id.into(), meta.into());
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries in ingestion order.
    pub fn entries(&self) -> &[CorpusEntry] {
        &self.entries
    }

    pub fn get(&self, trace_id: &str) -> Option<&CorpusEntry> {
        self.positions.get(trace_id).map(|&i| &self.entries[i])
    }

    /// Fingerprints `trace` and stores it under `class_id`. The trace's own id
    /// is used when set, otherwise one is assigned.
    pub fn ingest(&mut self, trace: &Trace, class_id: impl Into<String>) -> Result<String> {
        let vector = FingerprintVector::compute(trace, &self.grid)?;
        self.insert_vector(trace, class_id.into(), vector)
    }

    /// Ingests many traces, computing fingerprints in parallel. Insertion
    /// order follows the input order.
    pub fn ingest_many(&mut self, traces: &[(Trace, String)]) -> Result<Vec<String>> {
        let grid = &self.grid;
        let vectors: Vec<Result<FingerprintVector>> = traces
            .par_iter()
            .map(|(t, _)| FingerprintVector::compute(t, grid))
            .collect();
        let mut ids = Vec::with_capacity(traces.len());
        for ((trace, class), vector) in traces.iter().zip(vectors) {
            ids.push(self.insert_vector(trace, class.clone(), vector?)?);
        }
        Ok(ids)
    }

    fn insert_vector(&mut self, trace: &Trace, class_id: String, vector: FingerprintVector) -> Result<String> {
        let trace_id = if trace.id.is_empty() {
            format!("t{}", self.entries.len() + 1)
        } else {
            trace.id.clone()
        };
        if self.positions.contains_key(&trace_id) {
            return Err(Error::DuplicateTraceId(trace_id));
        }
        self.norms.include(&vector.values);
        let raw = self.retain_raw.then(|| trace.clone().with_id(trace_id.clone()));
        self.positions.insert(trace_id.clone(), self.entries.len());
        self.entries.push(CorpusEntry {
            trace_id: trace_id.clone(),
            class_id,
            values: vector.values,
            function_names: trace.function_names(),
            raw,
        });
        Ok(trace_id)
    }

    /// Entry positions passing `policy` for `query`.
    pub fn prefilter(&self, query: &Trace, policy: Prefilter) -> Vec<usize> {
        let names = query.function_names();
        self.prefilter_names(&names, policy)
    }

    /// Same as [`CorpusIndex::prefilter`] for a sorted name set.
    pub fn prefilter_names(&self, names: &[String], policy: Prefilter) -> Vec<usize> {
        let keep = |e: &CorpusEntry| match policy {
            Prefilter::Off => true,
            Prefilter::Intersect => names.iter().any(|n| e.function_names.binary_search(n).is_ok()),
            Prefilter::Superset => names.iter().all(|n| e.function_names.binary_search(n).is_ok()),
        };
        self.entries
            .iter()
            .enumerate()
            .filter(|(_, e)| keep(e))
            .map(|(i, _)| i)
            .collect()
    }

    /// Recomputes maxima from the stored vectors.
    pub fn recompute_norms(&self) -> NormMaxima {
        let mut m = NormMaxima::zeros(&self.grid);
        for e in &self.entries {
            m.include(&e.values);
        }
        m
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let bytes = store::encode(self);
        std::fs::write(path, bytes)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        store::decode(&bytes)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        store::encode(self)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        store::decode(bytes)
    }
}

/// One row of a `trace_file,class_id[,metadata]` manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifestRow {
    pub trace_file: PathBuf,
    pub class_id: String,
    pub metadata: Option<String>,
}

/// Reads a manifest; relative trace paths resolve against the manifest's
/// directory. A `trace_file,class_id` header row is optional.
pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<ManifestRow>> {
    let path = path.as_ref();
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        if rec.len() < 2 {
            return Err(Error::InvalidConfig(format!(
                "manifest row {} needs `trace_file,class_id`",
                i + 1
            )));
        }
        if i == 0 && &rec[0] == "trace_file" && &rec[1] == "class_id" {
            continue;
        }
        let file = PathBuf::from(&rec[0]);
        rows.push(ManifestRow {
            trace_file: if file.is_absolute() { file } else { base.join(file) },
            class_id: rec[1].to_string(),
            metadata: rec.get(2).map(str::to_string).filter(|m| !m.is_empty()),
        });
    }
    Ok(rows)
}

/// Outcome of a manifest ingest.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IngestReport {
    pub ingested: Vec<String>,
    /// `(trace file, reason)` for traces left out.
    pub skipped: Vec<(String, String)>,
}

/// Parses and ingests every trace in a manifest. Traces too short for the
/// grid are skipped with a warning; every other error aborts.
pub fn ingest_manifest(
    index: &mut CorpusIndex,
    manifest: impl AsRef<Path>,
    mode: ParseMode,
) -> Result<IngestReport> {
    let rows = read_manifest(manifest.as_ref())?;
    let manifest_dir = manifest.as_ref().parent().map(Path::to_path_buf).unwrap_or_default();
    let mut report = IngestReport::default();
    let mut batch = Vec::with_capacity(rows.len());
    for row in &rows {
        let text = std::fs::read_to_string(&row.trace_file)?;
        let id = row
            .trace_file
            .strip_prefix(&manifest_dir)
            .unwrap_or(&row.trace_file)
            .to_string_lossy()
            .into_owned();
        let trace = parse_trace(&text, mode)?.with_id(id.clone());
        if trace.len() < index.grid().max_l() {
            log::warn!("skipping {id}: {} records, grid needs {}", trace.len(), index.grid().max_l());
            report.skipped.push((
                id,
                Error::TraceTooShort {
                    records: trace.len(),
                    l: index.grid().max_l(),
                }
                .to_string(),
            ));
            continue;
        }
        if let Some(meta) = &row.metadata {
            index.set_class_metadata(row.class_id.clone(), meta.clone());
        }
        batch.push((trace, row.class_id.clone()));
    }
    report.ingested = index.ingest_many(&batch)?;
    Ok(report)
}
