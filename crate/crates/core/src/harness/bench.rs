//! Benchmark sweeps: many run configs, one row each, normalized against the
//! NK-means row on the same dataset.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::io::{read_dataset, read_json, TruthFile};
use super::pipeline::{best_of_seeds, Algo, CoresetChoice, OptGuess, PipelineConfig, RunStatus, SeedRun};
use crate::datagen::{generate, SyntheticSpec};
use crate::deadline::Deadline;
use crate::error::{Error, Result};
use crate::eval::{precision, recall};
use crate::geometry::Dataset;
use crate::objective::Instance;

pub const DEFAULT_SEEDS: [u64; 3] = [0, 1, 2];
/// Four hours.
pub const DEFAULT_TIMEOUT_SECONDS: f64 = 14_400.0;

fn default_seeds() -> Vec<u64> {
    DEFAULT_SEEDS.to_vec()
}

fn default_timeout() -> f64 {
    DEFAULT_TIMEOUT_SECONDS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Source {
    Synthetic(SyntheticSpec),
    Csv {
        path: PathBuf,
        #[serde(default)]
        truth: Option<PathBuf>,
    },
}

impl Source {
    fn label(&self) -> String {
        match self {
            Source::Synthetic(s) => format!("synthetic:{}", s.seed),
            Source::Csv { path, .. } => path.display().to_string(),
        }
    }
}

/// One benchmark cell: a dataset, an algorithm and its seeds.
///
/// `k` and `z` default to the synthetic spec's values and are required for
/// CSV sources.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub source: Source,
    pub algo: Algo,
    #[serde(default)]
    pub coreset: CoresetChoice,
    #[serde(default)]
    pub refine_coreset: bool,
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default)]
    pub z: Option<usize>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_timeout")]
    pub timeout_seconds: f64,
    #[serde(default)]
    pub opt_guess: OptGuess,
}

impl RunConfig {
    pub fn synthetic(spec: SyntheticSpec, algo: Algo) -> Self {
        RunConfig {
            source: Source::Synthetic(spec),
            algo,
            coreset: CoresetChoice::default(),
            refine_coreset: false,
            k: None,
            z: None,
            seeds: default_seeds(),
            timeout_seconds: DEFAULT_TIMEOUT_SECONDS,
            opt_guess: OptGuess::Auto,
        }
    }

    pub fn k(&self) -> Result<usize> {
        match (&self.source, self.k) {
            (_, Some(k)) => Ok(k),
            (Source::Synthetic(s), None) => Ok(s.k),
            (Source::Csv { .. }, None) => Err(Error::InvalidParameter("k is required for CSV sources".into())),
        }
    }

    pub fn z(&self) -> Result<usize> {
        match (&self.source, self.z) {
            (_, Some(z)) => Ok(z),
            (Source::Synthetic(s), None) => Ok(s.z),
            (Source::Csv { .. }, None) => Err(Error::InvalidParameter("z is required for CSV sources".into())),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::InvalidParameter("seeds must be non-empty".into()));
        }
        if !(self.timeout_seconds > 0.0 && self.timeout_seconds.is_finite()) {
            return Err(Error::InvalidParameter("timeout must be positive".into()));
        }
        if let Source::Synthetic(s) = &self.source {
            s.validate()?;
        }
        self.k()?;
        self.z()?;
        Ok(())
    }

    pub fn pipeline(&self) -> PipelineConfig {
        PipelineConfig {
            opt_guess: self.opt_guess,
            refine_coreset: self.refine_coreset,
            ..PipelineConfig::new(self.algo, self.coreset)
        }
    }

    pub fn deadline(&self) -> Deadline {
        Deadline::after(Duration::from_secs_f64(self.timeout_seconds))
    }
}

/// The 16 synthetic configurations: `d, k` in {10, 20}, `z` in {1%, 5%} of
/// `n`, noise half-width in {1/2, 5/2}; one config per algorithm each.
pub fn synthetic_grid(n: usize, algos: &[Algo], coreset: CoresetChoice, seeds: &[u64], timeout_seconds: f64) -> Vec<RunConfig> {
    let mut out = Vec::new();
    for d in [10, 20] {
        for k in [10, 20] {
            for z in [n / 100, n / 20] {
                for noise_range in [0.5, 2.5] {
                    let spec = SyntheticSpec {
                        n,
                        d,
                        k,
                        z,
                        noise_range,
                        seed: 0,
                    };
                    for &algo in algos {
                        out.push(RunConfig {
                            coreset,
                            seeds: seeds.to_vec(),
                            timeout_seconds,
                            ..RunConfig::synthetic(spec, algo)
                        });
                    }
                }
            }
        }
    }
    out
}

/// One table row. Field order is the CSV column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub source: String,
    pub n: Option<usize>,
    pub d: Option<usize>,
    pub k: Option<usize>,
    pub z: Option<usize>,
    pub delta: Option<f64>,
    pub algo: Algo,
    pub coreset: CoresetChoice,
    pub status: RunStatus,
    pub seeds_ok: usize,
    pub seeds_total: usize,
    pub best_seed: Option<u64>,
    pub objective: Option<f64>,
    pub normalized_objective: Option<f64>,
    pub objective_2z: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub total_wall_ms: f64,
    pub error: Option<String>,
}

/// Per-run record for the JSON-lines output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawRun {
    pub source: String,
    pub algo: Algo,
    pub coreset: CoresetChoice,
    pub k: Option<usize>,
    pub z: Option<usize>,
    #[serde(flatten)]
    pub run: SeedRun,
}

#[derive(Debug, Clone, Default)]
pub struct BenchTable {
    pub rows: Vec<BenchRow>,
    pub raw: Vec<RawRun>,
}

struct Loaded {
    data: Dataset,
    truth: Option<Vec<usize>>,
}

fn load(source: &Source) -> Result<Loaded> {
    match source {
        Source::Synthetic(spec) => {
            let (data, truth) = generate(spec)?;
            Ok(Loaded {
                data,
                truth: Some(truth.outlier_indices),
            })
        }
        Source::Csv { path, truth } => {
            let data = read_dataset(path)?;
            let truth = match truth {
                Some(p) => Some(read_json::<TruthFile>(p)?.outlier_indices),
                None => None,
            };
            Ok(Loaded { data, truth })
        }
    }
}

fn row_shell(cfg: &RunConfig) -> BenchRow {
    let (n, d, delta) = match &cfg.source {
        Source::Synthetic(s) => (Some(s.n), Some(s.d), Some(s.noise_range)),
        Source::Csv { .. } => (None, None, None),
    };
    BenchRow {
        source: cfg.source.label(),
        n,
        d,
        k: cfg.k().ok(),
        z: cfg.z().ok(),
        delta,
        algo: cfg.algo,
        coreset: cfg.coreset,
        status: RunStatus::Error,
        seeds_ok: 0,
        seeds_total: cfg.seeds.len(),
        best_seed: None,
        objective: None,
        normalized_objective: None,
        objective_2z: None,
        precision: None,
        recall: None,
        total_wall_ms: 0.0,
        error: None,
    }
}

fn run_one(cfg: &RunConfig, loaded: &std::result::Result<Loaded, String>) -> (BenchRow, Vec<RawRun>) {
    let mut row = row_shell(cfg);
    let fail = |mut row: BenchRow, e: String| {
        row.error = Some(e);
        (row, Vec::new())
    };
    if let Err(e) = cfg.validate() {
        return fail(row, e.to_string());
    }
    let loaded = match loaded {
        Ok(l) => l,
        Err(e) => return fail(row, e.clone()),
    };
    let (k, z) = (cfg.k().unwrap_or(1), cfg.z().unwrap_or(0));
    let inst = match Instance::new(&loaded.data, k, z) {
        Ok(i) => i,
        Err(e) => return fail(row, e.to_string()),
    };
    row.n = Some(inst.n());
    row.d = Some(loaded.data.dim());
    let best = best_of_seeds(&inst, &cfg.pipeline(), &cfg.seeds, &cfg.deadline());
    row.total_wall_ms = best.total_wall_ms;
    row.seeds_ok = best.runs.iter().filter(|r| r.status == RunStatus::Ok).count();
    row.error = best.first_error.as_ref().map(ToString::to_string);
    let raw = best
        .runs
        .iter()
        .map(|r| RawRun {
            source: row.source.clone(),
            algo: cfg.algo,
            coreset: cfg.coreset,
            k: row.k,
            z: row.z,
            run: r.clone(),
        })
        .collect();
    match &best.best {
        None => row.status = best.first_error.as_ref().map_or(RunStatus::Error, RunStatus::of),
        Some((seed, o)) => {
            row.status = RunStatus::Ok;
            row.best_seed = Some(*seed);
            row.objective = Some(o.result.objective);
            row.objective_2z = o.objective_2z;
            if let Some(truth) = &loaded.truth {
                row.precision = precision(&o.result.discarded, truth).ok();
                row.recall = recall(&o.result.discarded, truth).ok();
            }
        }
    }
    (row, raw)
}

type RowKey = (String, Option<usize>, Option<usize>, Option<usize>, Option<usize>, u64);

fn dataset_key(r: &BenchRow) -> RowKey {
    (r.source.clone(), r.n, r.d, r.k, r.z, r.delta.unwrap_or(0.0).to_bits())
}

/// Divide every objective by the NK-means objective on the same dataset,
/// preferring the NK-means row with the same coreset setting. NK-means rows
/// get exactly 1.
pub fn normalize(rows: &mut [BenchRow]) {
    let mut nk: BTreeMap<RowKey, Vec<(CoresetChoice, f64)>> = BTreeMap::new();
    for r in rows.iter() {
        if let (Algo::Nk, Some(obj)) = (r.algo, r.objective) {
            nk.entry(dataset_key(r)).or_default().push((r.coreset, obj));
        }
    }
    for r in rows.iter_mut() {
        let Some(obj) = r.objective else { continue };
        if r.algo == Algo::Nk {
            r.normalized_objective = Some(1.0);
            continue;
        }
        let Some(refs) = nk.get(&dataset_key(r)) else { continue };
        let base = refs
            .iter()
            .find(|(c, _)| *c == r.coreset)
            .or_else(|| refs.first())
            .map(|&(_, b)| b);
        r.normalized_objective = base.map(|b| if b == 0.0 && obj == 0.0 { 1.0 } else { obj / b });
    }
}

/// Run a sweep. Configs run in parallel; rows come back sorted by
/// `(d, k, z, delta, source, algo, coreset)` whatever the schedule was.
pub fn bench(configs: &[RunConfig]) -> BenchTable {
    let mut sources: Vec<&Source> = Vec::new();
    for c in configs {
        if !sources.contains(&&c.source) {
            sources.push(&c.source);
        }
    }
    let loaded: Vec<std::result::Result<Loaded, String>> = sources
        .par_iter()
        .map(|s| load(s).map_err(|e| e.to_string()))
        .collect();
    let mut results: Vec<(BenchRow, Vec<RawRun>)> = configs
        .par_iter()
        .map(|c| {
            let i = sources.iter().position(|s| **s == c.source).unwrap_or_default();
            run_one(c, &loaded[i])
        })
        .collect();
    results.sort_by(|(a, _), (b, _)| {
        (a.d, a.k, a.z, a.delta.map(f64::to_bits), &a.source, a.algo, a.coreset).cmp(&(
            b.d,
            b.k,
            b.z,
            b.delta.map(f64::to_bits),
            &b.source,
            b.algo,
            b.coreset,
        ))
    });
    let mut table = BenchTable::default();
    for (row, raw) in results {
        table.rows.push(row);
        table.raw.extend(raw);
    }
    normalize(&mut table.rows);
    table
}

impl BenchTable {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        if self.rows.is_empty() {
            wtr.write_record(CSV_COLUMNS)?;
        }
        for r in &self.rows {
            wtr.serialize(r)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        for r in &self.raw {
            serde_json::to_writer(&mut w, r)?;
            writeln!(w)?;
        }
        Ok(())
    }

    /// Per `(algo, coreset)`: rows, failed rows (no finished seed) and rows
    /// with precision below 0.8.
    pub fn failure_summary(&self) -> Vec<FailureSummary> {
        let mut by: BTreeMap<(Algo, CoresetChoice), FailureSummary> = BTreeMap::new();
        for r in &self.rows {
            let s = by.entry((r.algo, r.coreset)).or_insert_with(|| FailureSummary {
                algo: r.algo,
                coreset: r.coreset,
                configs: 0,
                failed: 0,
                low_precision: 0,
            });
            s.configs += 1;
            if r.status != RunStatus::Ok {
                s.failed += 1;
            }
            if r.precision.is_some_and(|p| p < 0.8) {
                s.low_precision += 1;
            }
        }
        by.into_values().collect()
    }

    pub fn write_summary<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        for s in self.failure_summary() {
            wtr.serialize(s)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

pub const CSV_COLUMNS: [&str; 19] = [
    "source",
    "n",
    "d",
    "k",
    "z",
    "delta",
    "algo",
    "coreset",
    "status",
    "seeds_ok",
    "seeds_total",
    "best_seed",
    "objective",
    "normalized_objective",
    "objective_2z",
    "precision",
    "recall",
    "total_wall_ms",
    "error",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FailureSummary {
    pub algo: Algo,
    pub coreset: CoresetChoice,
    pub configs: usize,
    pub failed: usize,
    pub low_precision: usize,
}
