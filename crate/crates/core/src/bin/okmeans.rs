use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use okmeans::coreset::sample_coreset_refined;
use okmeans::datagen::{generate, SyntheticSpec};
use okmeans::eval::{brute_force_opt, exact_continuous_opt, lemma8_statcheck, precision, recall, Lemma8Report};
use okmeans::harness::bench::{bench, synthetic_grid, RunConfig, DEFAULT_TIMEOUT_SECONDS};
use okmeans::harness::io::{read_dataset, read_json, write_dataset, write_json, TruthFile};
use okmeans::harness::pipeline::{best_of_seeds, Algo, CoresetChoice, OptGuess, PipelineConfig};
use okmeans::harness::report::Report;
use okmeans::{z_cost, CenterSet, Deadline, Error, Instance, Result};

#[derive(Parser)]
#[command(name = "okmeans", version, about = "k-means clustering with outliers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic dataset CSV and its ground-truth JSON.
    Generate(GenerateArgs),
    /// Cluster a CSV dataset and write a report.
    Cluster(ClusterArgs),
    /// Run a sweep of configurations and write a results table.
    Bench(BenchArgs),
    /// Recheck a report against its dataset, or run the sampling check.
    Eval(EvalArgs),
    /// Exact optimum of a tiny instance by enumeration.
    Oracle(OracleArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    d: usize,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    z: usize,
    /// Noise half-width.
    #[arg(long, default_value_t = 2.5)]
    delta: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Ground-truth path; defaults to `<out>.truth.json`.
    #[arg(long)]
    truth: Option<PathBuf>,
}

fn parse_timeout(s: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(t) if t > 0.0 && t.is_finite() => Ok(t),
        _ => Err(format!("timeout `{s}` must be a positive number of seconds")),
    }
}

#[derive(Args)]
struct ClusterArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    z: usize,
    #[arg(long, default_value = "nk")]
    algo: Algo,
    #[arg(long, default_value = "practical")]
    coreset: CoresetChoice,
    /// Run Lloyd's on the coreset centers before weighting them.
    #[arg(long)]
    refine_coreset: bool,
    /// Comma-separated seeds; the best final objective wins.
    #[arg(long, value_delimiter = ',', default_value = "0,1,2")]
    seeds: Vec<u64>,
    /// Seconds for all seeds together.
    #[arg(long, default_value_t = DEFAULT_TIMEOUT_SECONDS, value_parser = parse_timeout)]
    timeout: f64,
    /// `auto` or a positive number.
    #[arg(long, default_value = "auto")]
    opt_guess: OptGuess,
    /// Ground-truth JSON for precision and recall.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Record wall time in the report (makes it non-reproducible).
    #[arg(long)]
    timing: bool,
    /// Report path; stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the winning seed's coreset as a weighted CSV.
    #[arg(long)]
    export_coreset: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// JSON array of run configs.
    #[arg(long, conflicts_with = "grid", required_unless_present = "grid")]
    config: Option<PathBuf>,
    /// Sweep the 16 synthetic configurations instead.
    #[arg(long)]
    grid: bool,
    #[arg(long, default_value_t = 100_000)]
    n: usize,
    #[arg(long, value_delimiter = ',', default_value = "nk,kmpp,kmm,ls,uniform")]
    algos: Vec<Algo>,
    #[arg(long, default_value = "practical")]
    coreset: CoresetChoice,
    #[arg(long, value_delimiter = ',', default_value = "0,1,2")]
    seeds: Vec<u64>,
    #[arg(long, default_value_t = DEFAULT_TIMEOUT_SECONDS, value_parser = parse_timeout)]
    timeout: f64,
    /// Table CSV path; stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-run JSON lines.
    #[arg(long)]
    raw: Option<PathBuf>,
    /// Failure summary CSV; always echoed to stderr.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    input: PathBuf,
    /// Report written by `cluster`.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Overrides the report's k.
    #[arg(long)]
    k: Option<usize>,
    /// Overrides the report's z.
    #[arg(long)]
    z: Option<usize>,
    /// Run the sampling concentration check with this many draws against
    /// the truth file's centers.
    #[arg(long)]
    lemma8_trials: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    z: usize,
    /// Candidate centers; the input points if absent.
    #[arg(long)]
    pool: Option<PathBuf>,
    /// Also compute the unrestricted optimum by enumerating partitions.
    #[arg(long)]
    continuous: bool,
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => File::create(p)?.write_all(text.as_bytes())?,
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn emit_json<T: Serialize>(value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    emit(&s, None)
}

fn run_generate(a: GenerateArgs) -> Result<()> {
    let spec = SyntheticSpec {
        n: a.n,
        d: a.d,
        k: a.k,
        z: a.z,
        noise_range: a.delta,
        seed: a.seed,
    };
    let (data, truth) = generate(&spec)?;
    write_dataset(&data, &a.out)?;
    let truth_path = a.truth.unwrap_or_else(|| {
        let mut p = a.out.clone().into_os_string();
        p.push(".truth.json");
        p.into()
    });
    write_json(&TruthFile::new(&truth, Some(spec)), &truth_path)
}

fn read_truth(path: Option<&Path>) -> Result<Option<TruthFile>> {
    path.map(read_json::<TruthFile>).transpose()
}

fn run_cluster(a: ClusterArgs) -> Result<()> {
    let data = read_dataset(&a.input)?;
    let truth = read_truth(a.truth.as_deref())?;
    let inst = Instance::new(&data, a.k, a.z)?;
    let cfg = PipelineConfig {
        opt_guess: a.opt_guess,
        refine_coreset: a.refine_coreset,
        ..PipelineConfig::new(a.algo, a.coreset)
    };
    let deadline = Deadline::after(Duration::from_secs_f64(a.timeout));
    let runs = best_of_seeds(&inst, &cfg, &a.seeds, &deadline);
    let truth_idx = truth.as_ref().map(|t| t.outlier_indices.as_slice());
    let report = Report::build(&inst, &cfg, &a.seeds, a.timeout, &runs, truth_idx, a.timing)?;
    if a.timing {
        eprintln!("wall_ms: {:.3}", runs.total_wall_ms);
    }
    emit(&report.to_json()?, a.out.as_deref())?;
    if let (Some(path), Some((seed, _)), Some(mode)) = (&a.export_coreset, &runs.best, a.coreset.mode()) {
        let co = sample_coreset_refined(&inst, *seed, mode, a.refine_coreset, &Deadline::NONE)?;
        write_dataset(&co.data, path)?;
    }
    match runs.best {
        Some(_) => Ok(()),
        None => Err(runs.first_error.unwrap_or(Error::Timeout)),
    }
}

fn run_bench(a: BenchArgs) -> Result<()> {
    let configs: Vec<RunConfig> = match &a.config {
        Some(p) => read_json(p)?,
        None => synthetic_grid(a.n, &a.algos, a.coreset, &a.seeds, a.timeout),
    };
    let table = bench(&configs);
    match &a.out {
        Some(p) => table.write_csv(File::create(p)?)?,
        None => table.write_csv(io::stdout().lock())?,
    }
    if let Some(p) = &a.raw {
        table.write_jsonl(io::BufWriter::new(File::create(p)?))?;
    }
    if let Some(p) = &a.summary {
        table.write_summary(File::create(p)?)?;
    }
    table.write_summary(io::stderr().lock())
}

#[derive(Serialize)]
struct EvalOutput {
    k: usize,
    z: usize,
    objective: Option<f64>,
    reported_objective: Option<f64>,
    objective_matches: Option<bool>,
    discarded_matches: Option<bool>,
    precision: Option<f64>,
    recall: Option<f64>,
    lemma8: Option<Lemma8Report>,
}

fn run_eval(a: EvalArgs) -> Result<()> {
    let data = read_dataset(&a.input)?;
    let report: Option<Report> = a.report.as_deref().map(read_json).transpose()?;
    let truth = read_truth(a.truth.as_deref())?;
    let missing = |what: &str| Error::InvalidParameter(format!("{what} needs --{what} or --report"));
    let k = a.k.or(report.as_ref().map(|r| r.params.k)).ok_or_else(|| missing("k"))?;
    let z = a.z.or(report.as_ref().map(|r| r.params.z)).ok_or_else(|| missing("z"))?;
    let inst = Instance::new(&data, k, z)?;
    let mut out = EvalOutput {
        k,
        z,
        objective: None,
        reported_objective: None,
        objective_matches: None,
        discarded_matches: None,
        precision: None,
        recall: None,
        lemma8: None,
    };
    if let Some(r) = report.as_ref().filter(|r| !r.centers.is_empty()) {
        let (obj, discarded) = z_cost(&data, &r.centers()?, z)?;
        out.objective = Some(obj);
        out.reported_objective = r.objective;
        out.objective_matches = Some(r.objective == Some(obj));
        out.discarded_matches = Some(r.discarded == discarded);
        if let Some(t) = &truth {
            out.precision = Some(precision(&discarded, &t.outlier_indices)?);
            out.recall = Some(recall(&discarded, &t.outlier_indices)?);
        }
    }
    if let Some(trials) = a.lemma8_trials {
        let t = truth
            .as_ref()
            .ok_or_else(|| Error::InvalidParameter("--lemma8-trials needs --truth".into()))?;
        let planted = CenterSet::from_rows(&t.true_centers)?;
        out.lemma8 = Some(lemma8_statcheck(&inst, &planted, trials, a.seed)?);
    }
    emit_json(&out)
}

#[derive(Serialize)]
struct OracleOutput {
    k: usize,
    z: usize,
    pool_size: usize,
    objective: f64,
    centers: Vec<Vec<f64>>,
    outliers: Vec<usize>,
    continuous_objective: Option<f64>,
}

fn run_oracle(a: OracleArgs) -> Result<()> {
    let data = read_dataset(&a.input)?;
    let pool = match &a.pool {
        Some(p) => read_dataset(p)?,
        None => data.clone(),
    };
    let inst = Instance::new(&data, a.k, a.z)?;
    let opt = brute_force_opt(&inst, &pool)?;
    let continuous_objective = if a.continuous {
        Some(exact_continuous_opt(&inst)?)
    } else {
        None
    };
    emit_json(&OracleOutput {
        k: a.k,
        z: a.z,
        pool_size: pool.len(),
        objective: opt.objective,
        centers: opt.centers,
        outliers: opt.outliers,
        continuous_objective,
    })
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("OK_THREADS") {
        let n: usize = v
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::InvalidParameter(format!("OK_THREADS = `{v}` is not a positive integer")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = configure_threads().and_then(|()| match cli.command {
        Command::Generate(a) => run_generate(a),
        Command::Cluster(a) => run_cluster(a),
        Command::Bench(a) => run_bench(a),
        Command::Eval(a) => run_eval(a),
        Command::Oracle(a) => run_oracle(a),
    });
    match run {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
