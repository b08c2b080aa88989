//! End-to-end runs: optional coreset, an algorithm on `(coreset, z')`, then
//! exact-`z` finalization over the full input.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::baselines::{run_baseline, BaselineAlgo, BaselineConfig};
use crate::coreset::{sample_coreset_refined, CoresetMode};
use crate::deadline::Deadline;
use crate::error::{Error, Result};
use crate::geometry::{CenterSet, Dataset};
use crate::kmeans::{KMeansSolver, LloydConfig, PlusPlusLloyd, DEFAULT_IMPROVEMENT_FACTOR, DEFAULT_MAX_ITERS};
use crate::nkmeans::{nk_means, nk_means_search, GuessGrid};
use crate::objective::{partition, z_cost, ClusteringResult, Instance, RunMeta};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algo {
    Nk,
    Kmpp,
    Kmm,
    Ls,
    Uniform,
}

impl Algo {
    pub const ALL: [Algo; 5] = [Algo::Nk, Algo::Kmpp, Algo::Kmm, Algo::Ls, Algo::Uniform];

    pub fn name(&self) -> &'static str {
        match self {
            Algo::Nk => "nk",
            Algo::Kmpp => "kmpp",
            Algo::Kmm => "kmm",
            Algo::Ls => "ls",
            Algo::Uniform => "uniform",
        }
    }
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algo {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algo::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown algorithm `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoresetChoice {
    Off,
    #[default]
    Practical,
    Theoretical,
}

impl CoresetChoice {
    pub fn mode(&self) -> Option<CoresetMode> {
        match self {
            CoresetChoice::Off => None,
            CoresetChoice::Practical => Some(CoresetMode::Practical),
            CoresetChoice::Theoretical => Some(CoresetMode::Theoretical),
        }
    }
}

impl fmt::Display for CoresetChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.mode() {
            None => f.write_str("off"),
            Some(m) => m.fmt(f),
        }
    }
}

impl FromStr for CoresetChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "off" => Ok(CoresetChoice::Off),
            other => Ok(match other.parse::<CoresetMode>()? {
                CoresetMode::Practical => CoresetChoice::Practical,
                CoresetMode::Theoretical => CoresetChoice::Theoretical,
            }),
        }
    }
}

/// How NK-means picks its Opt guess.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptGuess {
    /// Search the power-of-two grid, keep the best final objective.
    #[default]
    Auto,
    Fixed(f64),
}

impl fmt::Display for OptGuess {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OptGuess::Auto => f.write_str("auto"),
            OptGuess::Fixed(g) => write!(f, "{g}"),
        }
    }
}

impl FromStr for OptGuess {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "auto" {
            return Ok(OptGuess::Auto);
        }
        let g: f64 = s
            .parse()
            .map_err(|_| Error::Parse(format!("opt guess `{s}` is neither `auto` nor a number")))?;
        if !(g > 0.0 && g.is_finite()) {
            return Err(Error::InvalidParameter("opt guess must be positive".into()));
        }
        Ok(OptGuess::Fixed(g))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig {
    pub algo: Algo,
    pub coreset: CoresetChoice,
    /// Run Lloyd's on the coreset's k-means++ centers before weighting.
    pub refine_coreset: bool,
    pub opt_guess: OptGuess,
    pub improvement_factor: f64,
    pub max_iters: usize,
    pub grid: GuessGrid,
}

impl PipelineConfig {
    pub fn new(algo: Algo, coreset: CoresetChoice) -> Self {
        PipelineConfig {
            algo,
            coreset,
            refine_coreset: false,
            opt_guess: OptGuess::Auto,
            improvement_factor: DEFAULT_IMPROVEMENT_FACTOR,
            max_iters: DEFAULT_MAX_ITERS,
            grid: GuessGrid::default(),
        }
    }

    fn lloyd(&self, seed: u64) -> LloydConfig {
        LloydConfig {
            improvement_factor: self.improvement_factor,
            max_iters: self.max_iters,
            seed,
        }
    }

    fn baseline(&self, algo: BaselineAlgo, seed: u64) -> BaselineConfig {
        BaselineConfig {
            algo,
            seed,
            improvement_factor: self.improvement_factor,
            max_iters: self.max_iters,
        }
    }
}

/// What the coreset stage produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoresetInfo {
    pub size: usize,
    pub sample_size: usize,
    pub p: f64,
    /// Outlier budget used on the coreset, after clamping to `|Y| - k`.
    pub z_prime: usize,
}

#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    /// Final clustering of the full input with exactly `z` discarded.
    pub result: ClusteringResult,
    /// z-cost of the same centers with `2z` discarded, when `2z < n`.
    pub objective_2z: Option<f64>,
    pub coreset: Option<CoresetInfo>,
    /// NK-means only.
    pub discarded_pre: Option<usize>,
    pub opt_guess_used: Option<f64>,
    pub wall_ms: f64,
}

fn nk_centers(
    data: &Dataset,
    k: usize,
    z: usize,
    cfg: &PipelineConfig,
    seed: u64,
    deadline: &Deadline,
) -> Result<(CenterSet, Option<usize>, Option<f64>)> {
    let inst = Instance::new(data, k, z)?;
    let solver = PlusPlusLloyd::new(cfg.lloyd(seed));
    let out = match cfg.opt_guess {
        OptGuess::Auto if data.len() >= 2 => nk_means_search(&inst, &solver, &cfg.grid, seed, deadline)?,
        OptGuess::Auto => nk_means(&inst, 1.0, &solver, seed, deadline)?,
        OptGuess::Fixed(g) => nk_means(&inst, g, &solver, seed, deadline)?,
    };
    let result = out.result.ok_or(Error::NoFeasibleGuess)?;
    let guess = (z > 0).then_some(out.opt_guess_used);
    Ok((result.centers, Some(out.discarded_pre.len()), guess))
}

/// One seeded run of the full pipeline on `inst`.
pub fn pipeline(inst: &Instance<'_>, cfg: &PipelineConfig, seed: u64, deadline: &Deadline) -> Result<PipelineOutcome> {
    let start = Instant::now();
    let x = inst.data;
    let coreset = match (cfg.algo, cfg.coreset.mode()) {
        (Algo::Uniform, _) | (_, None) => None,
        (_, Some(mode)) => Some(sample_coreset_refined(inst, seed, mode, cfg.refine_coreset, deadline)?),
    };
    let (work, z_work, info) = match &coreset {
        None => (x, inst.z, None),
        Some(co) => {
            let m = co.data.len();
            if m < inst.k {
                return Err(Error::SampleTooSmall { size: m, k: inst.k });
            }
            let z_prime = co.z_prime.min(m - inst.k);
            let info = CoresetInfo {
                size: m,
                sample_size: co.sample_size,
                p: co.p,
                z_prime,
            };
            (&co.data, z_prime, Some(info))
        }
    };
    deadline.check()?;
    let (centers, discarded_pre, opt_guess_used) = match cfg.algo {
        Algo::Nk => nk_centers(work, inst.k, z_work, cfg, seed, deadline)?,
        Algo::Kmpp => {
            let c = PlusPlusLloyd::new(cfg.lloyd(seed)).solve(work, inst.k, seed, deadline)?;
            (c, None, None)
        }
        Algo::Kmm | Algo::Ls | Algo::Uniform => {
            let algo = match cfg.algo {
                Algo::Kmm => BaselineAlgo::KmeansMinusMinus,
                Algo::Ls => BaselineAlgo::LocalSearch,
                _ => BaselineAlgo::UniformConservative,
            };
            let winst = Instance::new(work, inst.k, z_work)?;
            let r = run_baseline(&winst, &cfg.baseline(algo, seed), deadline)?;
            (r.centers, None, None)
        }
    };
    deadline.check()?;
    let objective_2z = if 2 * inst.z < inst.n() {
        Some(z_cost(x, &centers, 2 * inst.z)?.0)
    } else {
        None
    };
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    let result = partition(x, &centers, inst.z)?.with_meta(RunMeta {
        algo: cfg.algo.name().into(),
        seed: Some(seed),
        wall_ms: None,
    });
    Ok(PipelineOutcome {
        result,
        objective_2z,
        coreset: info,
        discarded_pre,
        opt_guess_used,
        wall_ms,
    })
}

/// Per-seed record of a best-of-seeds run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRun {
    pub seed: u64,
    pub status: RunStatus,
    pub objective: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Ok,
    Timeout,
    Infeasible,
    Error,
}

impl RunStatus {
    pub fn of(err: &Error) -> Self {
        match err.exit_code() {
            3 => RunStatus::Timeout,
            4 => RunStatus::Infeasible,
            _ => RunStatus::Error,
        }
    }
}

impl fmt::Display for RunStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RunStatus::Ok => "ok",
            RunStatus::Timeout => "timeout",
            RunStatus::Infeasible => "infeasible",
            RunStatus::Error => "error",
        })
    }
}

#[derive(Debug)]
pub struct BestOfSeeds {
    /// Run with the smallest final objective; earlier seed wins ties.
    pub best: Option<(u64, PipelineOutcome)>,
    pub runs: Vec<SeedRun>,
    /// Summed over all seeds, failed ones included.
    pub total_wall_ms: f64,
    /// First error seen, if any seed failed.
    pub first_error: Option<Error>,
}

/// Run every seed under one shared deadline and keep the best.
///
/// Seeds after a timeout are not attempted and are recorded as timed out.
pub fn best_of_seeds(inst: &Instance<'_>, cfg: &PipelineConfig, seeds: &[u64], deadline: &Deadline) -> BestOfSeeds {
    let mut out = BestOfSeeds {
        best: None,
        runs: Vec::with_capacity(seeds.len()),
        total_wall_ms: 0.0,
        first_error: None,
    };
    for &seed in seeds {
        if deadline.expired() {
            out.runs.push(SeedRun {
                seed,
                status: RunStatus::Timeout,
                objective: None,
            });
            out.first_error.get_or_insert(Error::Timeout);
            continue;
        }
        let start = Instant::now();
        let run = pipeline(inst, cfg, seed, deadline);
        out.total_wall_ms += start.elapsed().as_secs_f64() * 1e3;
        match run {
            Ok(o) => {
                out.runs.push(SeedRun {
                    seed,
                    status: RunStatus::Ok,
                    objective: Some(o.result.objective),
                });
                if out.best.as_ref().is_none_or(|(_, b)| o.result.objective < b.result.objective) {
                    out.best = Some((seed, o));
                }
            }
            Err(e) => {
                out.runs.push(SeedRun {
                    seed,
                    status: RunStatus::of(&e),
                    objective: None,
                });
                out.first_error.get_or_insert(e);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{generate_planted, PlantedSpec};
    use crate::eval::precision;
    use crate::kmeans::kmeans;

    fn planted(noise: usize, seed: u64) -> (Dataset, Vec<usize>) {
        let (x, truth) = generate_planted(&PlantedSpec {
            sizes: vec![120, 120, 120],
            d: 2,
            separation: 50.0,
            spread: 1.0,
            noise,
            noise_range: 400.0,
            seed,
        })
        .unwrap();
        (x, truth.outlier_indices)
    }

    #[test]
    fn parse_round_trips() {
        for a in Algo::ALL {
            assert_eq!(a.name().parse::<Algo>().unwrap(), a);
        }
        for c in [CoresetChoice::Off, CoresetChoice::Practical, CoresetChoice::Theoretical] {
            assert_eq!(c.to_string().parse::<CoresetChoice>().unwrap(), c);
        }
        assert_eq!("auto".parse::<OptGuess>().unwrap(), OptGuess::Auto);
        assert_eq!("2.5".parse::<OptGuess>().unwrap(), OptGuess::Fixed(2.5));
        assert!("-1".parse::<OptGuess>().is_err());
        assert!("x".parse::<Algo>().is_err());
    }

    #[test]
    fn plain_kmeans_pass_through() {
        let (x, _) = planted(0, 4);
        let inst = Instance::new(&x, 3, 0).unwrap();
        let cfg = PipelineConfig::new(Algo::Kmpp, CoresetChoice::Off);
        let out = pipeline(&inst, &cfg, 7, &Deadline::NONE).unwrap();
        let direct = kmeans(&x, 3, &LloydConfig::with_seed(7)).unwrap();
        assert_eq!(out.result.centers, direct);
        assert!(out.result.discarded.is_empty());
        assert!(out.coreset.is_none());
    }

    #[test]
    fn nk_finds_planted_noise() {
        let (x, truth) = planted(12, 1);
        let inst = Instance::new(&x, 3, 12).unwrap();
        for coreset in [CoresetChoice::Off, CoresetChoice::Practical] {
            let cfg = PipelineConfig::new(Algo::Nk, coreset);
            let best = best_of_seeds(&inst, &cfg, &[1, 2, 3], &Deadline::NONE);
            let (_, o) = best.best.unwrap();
            assert_eq!(precision(&o.result.discarded, &truth).unwrap(), 1.0);
            assert_eq!(o.result.discarded.len(), 12);
            assert!(o.objective_2z.unwrap() <= o.result.objective);
        }
    }

    #[test]
    fn best_of_seeds_is_minimum() {
        let (x, _) = planted(12, 2);
        let inst = Instance::new(&x, 3, 12).unwrap();
        let cfg = PipelineConfig::new(Algo::Kmpp, CoresetChoice::Off);
        let best = best_of_seeds(&inst, &cfg, &[5, 6, 7, 8], &Deadline::NONE);
        let min = best
            .runs
            .iter()
            .filter_map(|r| r.objective)
            .fold(f64::INFINITY, f64::min);
        let (seed, o) = best.best.unwrap();
        assert_eq!(o.result.objective, min);
        let first = best.runs.iter().find(|r| r.objective == Some(min)).unwrap();
        assert_eq!(first.seed, seed);
    }

    #[test]
    fn every_algorithm_discards_exactly_z() {
        let (x, _) = planted(12, 3);
        let inst = Instance::new(&x, 3, 12).unwrap();
        for algo in Algo::ALL {
            let cfg = PipelineConfig::new(algo, CoresetChoice::Practical);
            let o = pipeline(&inst, &cfg, 11, &Deadline::NONE).unwrap();
            assert_eq!(o.result.discarded.len(), 12, "{algo}");
            assert_eq!(o.result.recompute_objective(&x), o.result.objective);
        }
    }

    #[test]
    fn expired_deadline_times_out() {
        let (x, _) = planted(12, 3);
        let inst = Instance::new(&x, 3, 12).unwrap();
        let cfg = PipelineConfig::new(Algo::Nk, CoresetChoice::Off);
        let dl = Deadline::after(std::time::Duration::ZERO);
        let best = best_of_seeds(&inst, &cfg, &[1, 2], &dl);
        assert!(best.best.is_none());
        assert!(best.runs.iter().all(|r| r.status == RunStatus::Timeout));
        assert!(matches!(best.first_error, Some(Error::Timeout)));
    }
}
