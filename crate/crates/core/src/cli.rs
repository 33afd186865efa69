//! `tracent` command line.

use std::ffi::OsString;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::corpus::{ingest_manifest, CorpusIndex, Prefilter};
use crate::distance::FingerprintVector;
use crate::entropy::EntropySpec;
use crate::error::{Error, Result};
use crate::eval::{self, BenchConfig, SynthConfig};
use crate::grid::Grid;
use crate::ranking::{rank_classes, DistanceConfig};
use crate::trace::{parse_trace, CharType, ParseMode, Trace};

/// Environment variable naming the index used when `--index` is omitted.
pub const INDEX_ENV: &str = "TRACENT_INDEX";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum Format {
    #[default]
    Table,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "tracent", version, about = "Classify execution traces by word-entropy fingerprints")]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, value_enum, global = true, default_value_t = Format::Table)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    /// One fingerprint spec `E,q,l,c` (repeatable). Overrides --grid.
    #[arg(long = "spec", value_parser = parse_spec)]
    pub specs: Vec<EntropySpec>,
    /// Named grid; only `default` (504 specs) exists.
    #[arg(long)]
    pub grid: Option<String>,
}

impl GridArgs {
    fn explicit(&self) -> Result<Option<Grid>> {
        if !self.specs.is_empty() {
            return Grid::from_specs("custom", self.specs.clone()).map(Some);
        }
        match self.grid.as_deref() {
            None => Ok(None),
            Some("default") => Ok(Some(Grid::default_lambda())),
            Some(other) => Err(Error::InvalidConfig(format!("unknown grid `{other}`"))),
        }
    }

    fn resolve(&self) -> Result<Grid> {
        Ok(self.explicit()?.unwrap_or_else(Grid::default_lambda))
    }
}

#[derive(Debug, Args)]
pub struct IndexArg {
    /// Index file.
    #[arg(long, env = INDEX_ENV)]
    pub index: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fingerprint the traces of a `trace_file,class_id` manifest into an
    /// index. Appends when the index exists.
    Ingest {
        manifest: PathBuf,
        #[command(flatten)]
        index: IndexArg,
        #[command(flatten)]
        grid: GridArgs,
        /// Keep raw traces (needed by `bench`).
        #[arg(long)]
        raw: bool,
        /// Tolerate unbalanced exits.
        #[arg(long)]
        lenient: bool,
    },
    /// Print fingerprints of one trace.
    Fingerprint {
        trace: PathBuf,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        lenient: bool,
    },
    /// Rank the index's classes for a trace.
    Query {
        trace: PathBuf,
        #[command(flatten)]
        index: IndexArg,
        /// Report classes ranked at most X.
        #[arg(long = "top", default_value_t = 5, value_parser = clap::value_parser!(u64).range(1..))]
        top: u64,
        #[arg(long, default_value = "intersect", value_parser = parse_prefilter)]
        prefilter: Prefilter,
        /// Norm exponent for the full grid.
        #[arg(long, default_value_t = 1.0)]
        w: f64,
        /// Compare a single fingerprint instead of the whole grid.
        #[arg(long, value_parser = parse_spec)]
        spec: Option<EntropySpec>,
        #[arg(long)]
        lenient: bool,
    },
    /// k-fold cross-validation of class ranking over the index.
    Crossval {
        #[command(flatten)]
        index: IndexArg,
        #[arg(long, default_value_t = 10)]
        folds: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Single-spec distance instead of the full grid.
        #[arg(long, value_parser = parse_spec)]
        spec: Option<EntropySpec>,
        /// Norm exponent(s); several values run a sweep.
        #[arg(long, value_delimiter = ',', default_value = "1")]
        w: Vec<f64>,
    },
    /// Time reference traces against the index (index must keep raw traces).
    Bench {
        #[command(flatten)]
        index: IndexArg,
        /// Reference trace files, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        refs: Vec<PathBuf>,
        #[arg(long, default_value_t = 5)]
        reps: usize,
        #[arg(long, value_parser = parse_spec)]
        spec: Option<EntropySpec>,
        /// Character type of the edit-distance baseline.
        #[arg(long, default_value = "FTD", value_parser = parse_char_type)]
        diff_char_type: CharType,
    },
    /// Write a seeded synthetic corpus with manifest.
    Synth {
        #[arg(long, default_value_t = 20)]
        classes: usize,
        #[arg(long = "per-class", default_value_t = 50)]
        per_class: usize,
        #[arg(long, default_value_t = 0.05)]
        rate: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_spec(s: &str) -> std::result::Result<EntropySpec, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_prefilter(s: &str) -> std::result::Result<Prefilter, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_char_type(s: &str) -> std::result::Result<CharType, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn read_trace(path: &Path, lenient: bool) -> Result<Trace> {
    let text = std::fs::read_to_string(path)?;
    let mode = if lenient { ParseMode::Lenient } else { ParseMode::Strict };
    Ok(parse_trace(&text, mode)?.with_id(path.display().to_string()))
}

fn csv_writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().from_writer(out)
}

/// Runs one command line; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = io::stdout();
    run_with(argv, &mut stdout.lock())
}

/// [`run`] writing results to `out`. Diagnostics go to stderr.
pub fn run_with<I, T>(argv: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.threads.unwrap_or(0)).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: InvalidConfig: thread pool: {e}");
            return 1;
        }
    };
    let mut buf = Vec::new();
    let result = pool.install(|| execute(&cli, &mut buf));
    if out.write_all(&buf).and_then(|_| out.flush()).is_err() {
        return 1;
    }
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn execute(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Ingest {
            manifest,
            index,
            grid,
            raw,
            lenient,
        } => {
            let mut idx = if index.index.exists() {
                let idx = CorpusIndex::load(&index.index)?;
                if let Some(g) = grid.explicit()? {
                    if g.hash() != idx.grid().hash() {
                        return Err(Error::GridMismatch(format!(
                            "{} was built on grid `{}`",
                            index.index.display(),
                            idx.grid().name
                        )));
                    }
                }
                if *raw && !idx.retains_raw() {
                    return Err(Error::InvalidConfig(format!(
                        "{} does not keep raw traces; rebuild it with --raw",
                        index.index.display()
                    )));
                }
                idx
            } else {
                CorpusIndex::new(grid.resolve()?).with_raw_traces(*raw)
            };
            let mode = if *lenient { ParseMode::Lenient } else { ParseMode::Strict };
            let report = ingest_manifest(&mut idx, manifest, mode)?;
            idx.save(&index.index)?;
            writeln!(
                out,
                "ingested {} traces ({} skipped) into {} [{} traces, grid {} with {} specs]",
                report.ingested.len(),
                report.skipped.len(),
                index.index.display(),
                idx.len(),
                idx.grid().name,
                idx.grid().len()
            )?;
            for (id, why) in &report.skipped {
                writeln!(out, "skipped {id}: {why}")?;
            }
        }
        Command::Fingerprint { trace, grid, lenient } => {
            let trace = read_trace(trace, *lenient)?;
            let grid = grid.resolve()?;
            let fp = FingerprintVector::compute(&trace, &grid)?;
            match cli.format {
                Format::Csv => {
                    let mut w = csv_writer(out);
                    w.write_record(["entropy", "q", "l", "c", "value"])?;
                    for (s, v) in grid.specs().iter().zip(&fp.values) {
                        w.write_record([
                            s.kind.to_string(),
                            s.q.to_string(),
                            s.l.to_string(),
                            s.c.to_string(),
                            v.to_string(),
                        ])?;
                    }
                    w.flush()?;
                }
                Format::Table if grid.len() == 1 => writeln!(out, "{:.6}", fp.values[0])?,
                Format::Table => {
                    for (s, v) in grid.specs().iter().zip(&fp.values) {
                        writeln!(out, "{:<22} {v:.6}", s.to_string())?;
                    }
                }
            }
        }
        Command::Query {
            trace,
            index,
            top,
            prefilter,
            w,
            spec,
            lenient,
        } => {
            let idx = CorpusIndex::load(&index.index)?;
            let trace = read_trace(trace, *lenient)?;
            let config = match spec {
                Some(s) => DistanceConfig::Single(*s),
                None => DistanceConfig::Multi { w: *w },
            };
            let ranked = rank_classes(&trace, &idx, &config, *prefilter, *top as usize)?;
            match cli.format {
                Format::Csv => {
                    let mut wr = csv_writer(out);
                    wr.write_record(["rank", "class", "trace", "distance"])?;
                    for r in &ranked {
                        wr.write_record([
                            r.rank.to_string(),
                            r.class_id.clone(),
                            r.nearest_trace_id.clone(),
                            r.distance.to_string(),
                        ])?;
                    }
                    wr.flush()?;
                }
                Format::Table => {
                    writeln!(out, "{:>4}  {:<12} {:<32} {:>12}", "rank", "class", "nearest trace", "distance")?;
                    for r in &ranked {
                        write!(out, "{:>4}  {:<12} {:<32} {:>12.6}", r.rank, r.class_id, r.nearest_trace_id, r.distance)?;
                        if let Some(meta) = idx.manifest().get(&r.class_id) {
                            write!(out, "  {meta}")?;
                        }
                        writeln!(out)?;
                    }
                }
            }
        }
        Command::Crossval {
            index,
            folds,
            seed,
            spec,
            w,
        } => {
            let idx = CorpusIndex::load(&index.index)?;
            if let (None, [_, _, ..]) = (spec, w.as_slice()) {
                let rows = eval::w_sweep(&idx, w, *folds, *seed)?;
                match cli.format {
                    Format::Csv => {
                        let mut wr = csv_writer(out);
                        wr.write_record(["w", "top1", "top5"])?;
                        for r in &rows {
                            wr.write_record([r.w.to_string(), r.top1.to_string(), r.top5.to_string()])?;
                        }
                        wr.flush()?;
                    }
                    Format::Table => {
                        writeln!(out, "{:>6} {:>8} {:>8}", "w", "top1", "top5")?;
                        for r in &rows {
                            writeln!(out, "{:>6} {:>8.4} {:>8.4}", r.w, r.top1, r.top5)?;
                        }
                    }
                }
                return Ok(());
            }
            let config = match spec {
                Some(s) => DistanceConfig::Single(*s),
                None => DistanceConfig::Multi { w: w.first().copied().unwrap_or(1.0) },
            };
            let report = eval::crossval(&idx, &config, *folds, *seed)?;
            match cli.format {
                Format::Csv => write!(out, "{}", report.table.to_csv())?,
                Format::Table => {
                    write!(out, "{}", report.table.to_text())?;
                    if !report.class_missing.is_empty() {
                        writeln!(
                            out,
                            "{} validation traces had no training trace of their class",
                            report.class_missing.len()
                        )?;
                    }
                }
            }
        }
        Command::Bench {
            index,
            refs,
            reps,
            spec,
            diff_char_type,
        } => {
            let idx = CorpusIndex::load(&index.index)?;
            let mut cfg = BenchConfig {
                reps: *reps,
                diff_char_type: *diff_char_type,
                ..Default::default()
            };
            if let Some(s) = spec {
                cfg.single = *s;
            }
            let references = refs
                .iter()
                .map(|p| {
                    let label = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                    Ok((label, read_trace(p, false)?))
                })
                .collect::<Result<Vec<_>>>()?;
            let table = eval::timing_bench(&idx, &references, &cfg)?;
            match cli.format {
                Format::Csv => write!(out, "{}", table.to_csv())?,
                Format::Table => write!(out, "{}", table.to_text())?,
            }
        }
        Command::Synth {
            classes,
            per_class,
            rate,
            seed,
            out: dir,
        } => {
            let cfg = SynthConfig {
                num_classes: *classes,
                traces_per_class: *per_class,
                mutation_rate: *rate,
                seed: *seed,
                ..Default::default()
            };
            let n = eval::synth_generate(&cfg, dir)?;
            writeln!(out, "wrote {n} traces and manifest.csv to {}", dir.display())?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String) {
        let mut out = Vec::new();
        let code = run_with(std::iter::once("tracent").chain(args.iter().copied()), &mut out);
        (code, String::from_utf8(out).unwrap())
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(run_capture(&[]).0, 2);
        assert_eq!(run_capture(&["frobnicate"]).0, 2);
        assert_eq!(run_capture(&["query", "x.trace", "--index", "i", "--top", "0"]).0, 2);
        assert_eq!(run_capture(&["fingerprint", "x.trace", "--spec", "Z,1,1,F"]).0, 2);
    }

    #[test]
    fn module_errors_exit_one() {
        let dir = tempfile::tempdir().unwrap();
        let missing = dir.path().join("nope.trace");
        assert_eq!(run_capture(&["fingerprint", missing.to_str().unwrap()]).0, 1);
        let bad = dir.path().join("bad.trace");
        std::fs::write(&bad, "a exit\n").unwrap();
        assert_eq!(run_capture(&["fingerprint", bad.to_str().unwrap()]).0, 1);
    }

    #[test]
    fn fingerprint_table_and_csv_agree() {
        let dir = tempfile::tempdir().unwrap();
        let t = dir.path().join("t.trace");
        std::fs::write(&t, "a entry\nb entry\nb exit\nb entry\nb exit\na exit\n").unwrap();
        let p = t.to_str().unwrap();
        let (code, table) = run_capture(&["fingerprint", p, "--spec", "R,2,2,FT", "--spec", "S,1,1,F"]);
        assert_eq!(code, 0);
        let (_, csv) = run_capture(&["--format", "csv", "fingerprint", p, "--spec", "R,2,2,FT", "--spec", "S,1,1,F"]);
        let from_csv: Vec<f64> = csv.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse().unwrap()).collect();
        let from_table: Vec<f64> = table.lines().map(|l| l.split_whitespace().last().unwrap().parse().unwrap()).collect();
        assert_eq!(from_csv.len(), 2);
        for (a, b) in from_csv.iter().zip(&from_table) {
            assert!((a - b).abs() <= 5e-7);
        }
    }
}
