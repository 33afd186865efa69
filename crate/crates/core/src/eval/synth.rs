//! Seeded synthetic trace corpora: one random call tree per class, each
//! trace a mutated linearization of its class tree.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::trace::{RecordKind, Trace, TraceRecord};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub num_classes: usize,
    pub traces_per_class: usize,
    /// Maximum call depth of an archetype tree.
    pub archetype_depth: usize,
    /// Maximum distinct callees per call.
    pub branching: usize,
    /// Number of distinct function names shared by all classes.
    pub function_pool: usize,
    /// Probability that a call is perturbed (renamed, removed, or gains a
    /// new sibling). Must lie in `[0, 1)`.
    pub mutation_rate: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            num_classes: 20,
            traces_per_class: 50,
            archetype_depth: 5,
            branching: 4,
            function_pool: 40,
            mutation_rate: 0.05,
            seed: 42,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_classes == 0 || self.traces_per_class == 0 {
            return Err(Error::InvalidConfig("need at least one class and one trace per class".into()));
        }
        if self.function_pool < 2 || self.archetype_depth == 0 {
            return Err(Error::InvalidConfig("function pool >= 2 and depth >= 1 required".into()));
        }
        if !(0.0..1.0).contains(&self.mutation_rate) {
            return Err(Error::InvalidConfig(format!(
                "mutation rate {} outside [0, 1)",
                self.mutation_rate
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct Call {
    name: usize,
    children: Vec<Call>,
}

impl Call {
    fn size(&self) -> usize {
        1 + self.children.iter().map(Call::size).sum::<usize>()
    }
}

const MIN_CALLS: usize = 40;
const MAX_CALLS: usize = 400;

fn grow(rng: &mut ChaCha8Rng, cfg: &SynthConfig, depth: usize) -> Call {
    let name = rng.gen_range(0..cfg.function_pool);
    let mut children = Vec::new();
    if depth < cfg.archetype_depth {
        let fanout = rng.gen_range(0..=cfg.branching);
        for _ in 0..fanout {
            let child = grow(rng, cfg, depth + 1);
            // Loops call the same subtree several times.
            let repeats = if rng.gen_bool(0.3) { rng.gen_range(2..=4) } else { 1 };
            for _ in 0..repeats {
                children.push(child.clone());
            }
        }
    }
    Call { name, children }
}

fn archetype(rng: &mut ChaCha8Rng, cfg: &SynthConfig) -> Call {
    // Shallow or narrow configs may never reach MIN_CALLS; take what grows.
    for _ in 0..1000 {
        let root = grow(rng, cfg, 1);
        if (MIN_CALLS..=MAX_CALLS).contains(&root.size()) {
            return root;
        }
    }
    grow(rng, cfg, 1)
}

fn mutate(rng: &mut ChaCha8Rng, call: &Call, rate: f64, pool: usize) -> Call {
    let mut children = Vec::with_capacity(call.children.len() + 1);
    for child in &call.children {
        let mut kept = mutate(rng, child, rate, pool);
        if rate > 0.0 && rng.gen_bool(rate) {
            match rng.gen_range(0..3) {
                0 => {
                    kept.name = rng.gen_range(0..pool);
                    children.push(kept);
                }
                1 => children.extend(kept.children),
                _ => {
                    children.push(Call {
                        name: rng.gen_range(0..pool),
                        children: Vec::new(),
                    });
                    children.push(kept);
                }
            }
        } else {
            children.push(kept);
        }
    }
    Call {
        name: call.name,
        children,
    }
}

fn linearize(call: &Call, depth: u32, out: &mut Vec<TraceRecord>) {
    let function = format!("fn{:03}", call.name);
    out.push(TraceRecord {
        function: function.clone(),
        kind: RecordKind::Entry,
        depth,
    });
    for c in &call.children {
        linearize(c, depth + 1, out);
    }
    out.push(TraceRecord {
        function,
        kind: RecordKind::Exit,
        depth,
    });
}

fn to_trace(call: &Call, id: String) -> Trace {
    let mut records = Vec::with_capacity(call.size() * 2);
    linearize(call, 1, &mut records);
    Trace { id, records }
}

pub fn class_id(class: usize) -> String {
    format!("d{:02}", class + 1)
}

/// Trace file path (relative to the corpus root) of trace `i` of `class`.
pub fn trace_file(class: usize, i: usize) -> String {
    format!("traces/{}_{:03}.trace", class_id(class), i + 1)
}

/// In-memory labeled corpus, class-major order. Trace ids equal their file
/// paths as written by [`synth_generate`].
pub fn synth_traces(cfg: &SynthConfig) -> Result<Vec<(Trace, String)>> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let archetypes: Vec<Call> = (0..cfg.num_classes).map(|_| archetype(&mut rng, cfg)).collect();
    let mut out = Vec::with_capacity(cfg.num_classes * cfg.traces_per_class);
    for (c, arch) in archetypes.iter().enumerate() {
        for i in 0..cfg.traces_per_class {
            let call = mutate(&mut rng, arch, cfg.mutation_rate, cfg.function_pool);
            out.push((to_trace(&call, trace_file(c, i)), class_id(c)));
        }
    }
    Ok(out)
}

/// A trace of at least `records` records built from `cfg`'s call-tree
/// generator: a root calling freshly grown subtrees until long enough.
pub fn synth_reference(cfg: &SynthConfig, records: usize, seed: u64) -> Trace {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut root = Call {
        name: rng.gen_range(0..cfg.function_pool),
        children: Vec::new(),
    };
    let mut calls = 1;
    while 2 * calls < records {
        let sub = grow(&mut rng, cfg, 2);
        calls += sub.size();
        root.children.push(sub);
    }
    root.children.shuffle(&mut rng);
    to_trace(&root, format!("ref{records}"))
}

/// Writes `traces/*.trace` and `manifest.csv` (`trace_file,class_id`) under
/// `out`. Returns the number of traces written.
pub fn synth_generate(cfg: &SynthConfig, out: &Path) -> Result<usize> {
    let traces = synth_traces(cfg)?;
    fs::create_dir_all(out.join("traces"))?;
    let mut manifest = csv::Writer::from_path(out.join("manifest.csv"))?;
    manifest.write_record(["trace_file", "class_id"])?;
    for (trace, class) in &traces {
        fs::write(out.join(&trace.id), trace.render())?;
        manifest.write_record([trace.id.as_str(), class.as_str()])?;
    }
    manifest.flush()?;
    Ok(traces.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::{parse_trace, ParseMode};

    fn small() -> SynthConfig {
        SynthConfig {
            num_classes: 3,
            traces_per_class: 4,
            ..Default::default()
        }
    }

    #[test]
    fn zero_rate_gives_identical_class_members() {
        let cfg = SynthConfig {
            mutation_rate: 0.0,
            ..small()
        };
        let t = synth_traces(&cfg).unwrap();
        for class in t.chunks(cfg.traces_per_class) {
            assert!(class.iter().all(|(tr, _)| tr.records == class[0].0.records));
        }
        assert_ne!(t[0].0.records, t[4].0.records);
    }

    #[test]
    fn deterministic_and_parseable() {
        let a = synth_traces(&small()).unwrap();
        let b = synth_traces(&small()).unwrap();
        assert_eq!(a, b);
        for (t, _) in &a {
            let back = parse_trace(&t.render(), ParseMode::Strict).unwrap();
            assert_eq!(back.records, t.records);
            assert!(t.len() >= 7);
        }
    }

    #[test]
    fn reference_sizes() {
        let cfg = SynthConfig::default();
        for n in [500, 2500, 20000] {
            let t = synth_reference(&cfg, n, 9);
            assert!(t.len() >= n && t.len() < 2 * n + 10_000, "{} for {n}", t.len());
        }
    }

    #[test]
    fn invalid_rate() {
        let cfg = SynthConfig {
            mutation_rate: 1.0,
            ..small()
        };
        assert!(matches!(synth_traces(&cfg), Err(Error::InvalidConfig(_))));
    }
}
