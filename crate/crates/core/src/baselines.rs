//! Comparison algorithms: k-means--, single-swap local search, and
//! conservative uniform sampling. Each returns a clustering that discards
//! exactly `z` points.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::coreset::uniform_sample;
use crate::deadline::Deadline;
use crate::error::{Error, Result};
use crate::geometry::{
    assign_unchecked, nearest_two_unchecked, sq_dist_unchecked, CenterSet, Dataset,
};
use crate::kmeans::{
    kmeanspp_indices, recenter, seeded_rng, KMeansSolver, LloydConfig, PlusPlusLloyd,
    DEFAULT_IMPROVEMENT_FACTOR, DEFAULT_MAX_ITERS,
};
use crate::objective::{partition, z_cost_from_sq, ClusteringResult, Instance, RunMeta};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineAlgo {
    KmeansMinusMinus,
    LocalSearch,
    UniformConservative,
}

impl BaselineAlgo {
    pub fn short_name(&self) -> &'static str {
        match self {
            BaselineAlgo::KmeansMinusMinus => "kmm",
            BaselineAlgo::LocalSearch => "ls",
            BaselineAlgo::UniformConservative => "uniform",
        }
    }
}

impl fmt::Display for BaselineAlgo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for BaselineAlgo {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kmm" | "kmeans_minus_minus" => Ok(BaselineAlgo::KmeansMinusMinus),
            "ls" | "local_search" => Ok(BaselineAlgo::LocalSearch),
            "uniform" | "uniform_conservative" => Ok(BaselineAlgo::UniformConservative),
            other => Err(Error::Parse(format!("unknown baseline `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineConfig {
    pub algo: BaselineAlgo,
    pub seed: u64,
    pub improvement_factor: f64,
    pub max_iters: usize,
}

impl BaselineConfig {
    pub fn new(algo: BaselineAlgo, seed: u64) -> Self {
        BaselineConfig {
            algo,
            seed,
            improvement_factor: DEFAULT_IMPROVEMENT_FACTOR,
            max_iters: DEFAULT_MAX_ITERS,
        }
    }

    fn lloyd(&self) -> LloydConfig {
        LloydConfig {
            improvement_factor: self.improvement_factor,
            max_iters: self.max_iters,
            seed: self.seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.lloyd().validate()
    }
}

/// Final clustering plus the z-cost after every iteration (or accepted swap).
#[derive(Debug, Clone)]
pub struct BaselineOutcome {
    pub result: ClusteringResult,
    pub history: Vec<f64>,
}

fn meta(algo: BaselineAlgo, seed: u64) -> RunMeta {
    RunMeta {
        algo: algo.short_name().into(),
        seed: Some(seed),
        wall_ms: None,
    }
}

fn check_init(inst: &Instance<'_>, init: &CenterSet) -> Result<()> {
    init.check_dim(inst.data.dim())?;
    if init.len() != inst.k {
        return Err(Error::SizeMismatch(format!(
            "{} initial centers for k = {}",
            init.len(),
            inst.k
        )));
    }
    Ok(())
}

/// k-means--: Lloyd iterations that leave the `z` farthest points out of
/// every recentering step.
pub fn kmeans_minus_minus(
    inst: &Instance<'_>,
    init: &CenterSet,
    cfg: &BaselineConfig,
    deadline: &Deadline,
) -> Result<BaselineOutcome> {
    cfg.validate()?;
    check_init(inst, init)?;
    let data = inst.data;
    let mut centers = init.clone();
    let mut nearest = assign_unchecked(data, &centers);
    let sq: Vec<f64> = nearest.iter().map(|&(_, d)| d).collect();
    let (mut cost, mut out) = z_cost_from_sq(data, &sq, inst.z);
    let mut history = vec![cost];
    for _ in 0..cfg.max_iters {
        deadline.check()?;
        let mut keep = vec![true; data.len()];
        for &i in &out {
            keep[i] = false;
        }
        let next = recenter(data, &centers, &nearest, Some(&keep));
        let next_nearest = assign_unchecked(data, &next);
        let sq: Vec<f64> = next_nearest.iter().map(|&(_, d)| d).collect();
        let (next_cost, next_out) = z_cost_from_sq(data, &sq, inst.z);
        if next_cost > cost {
            break;
        }
        history.push(next_cost);
        let improved_enough = next_cost * cfg.improvement_factor < cost;
        centers = next;
        nearest = next_nearest;
        cost = next_cost;
        out = next_out;
        if !improved_enough {
            break;
        }
    }
    let result = partition(data, &centers, inst.z)?.with_meta(meta(BaselineAlgo::KmeansMinusMinus, cfg.seed));
    Ok(BaselineOutcome { result, history })
}

/// Precomputed candidate distances for small inputs.
const MATRIX_LIMIT: usize = 4096;

/// Single-swap local search over the input points as candidate centers.
///
/// Centers are scanned in order and candidates by ascending index; the first
/// swap whose z-cost beats the current one by the improvement factor is
/// taken and the scan restarts. Stops when no swap qualifies or after
/// `max_iters` accepted swaps.
pub fn local_search_outliers(
    inst: &Instance<'_>,
    init: &CenterSet,
    cfg: &BaselineConfig,
    deadline: &Deadline,
) -> Result<BaselineOutcome> {
    cfg.validate()?;
    check_init(inst, init)?;
    let data = inst.data;
    let n = data.len();
    let matrix: Option<Vec<f64>> = (n <= MATRIX_LIMIT).then(|| {
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..i {
                let d = sq_dist_unchecked(data.point(i), data.point(j));
                m[i * n + j] = d;
                m[j * n + i] = d;
            }
        }
        m
    });
    let dist_to_candidate = |c: usize, out: &mut [f64]| match &matrix {
        Some(m) => out.copy_from_slice(&m[c * n..(c + 1) * n]),
        None => {
            let cp = data.point(c);
            for (o, p) in out.iter_mut().zip(data.points()) {
                *o = sq_dist_unchecked(p, cp);
            }
        }
    };

    let mut centers = init.clone();
    let sq: Vec<f64> = assign_unchecked(data, &centers).into_iter().map(|(_, d)| d).collect();
    let (mut cost, _) = z_cost_from_sq(data, &sq, inst.z);
    let mut history = vec![cost];
    let mut cand = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut without = vec![0.0; n];

    for _ in 0..cfg.max_iters {
        let near: Vec<(usize, f64, f64)> = data
            .points()
            .map(|p| nearest_two_unchecked(p, &centers))
            .collect();
        let mut accepted = None;
        'scan: for j in 0..inst.k {
            deadline.check()?;
            for (w, &(i1, d1, d2)) in without.iter_mut().zip(&near) {
                *w = if i1 == j { d2 } else { d1 };
            }
            for c in 0..n {
                dist_to_candidate(c, &mut cand);
                for ((t, &w), &d) in trial.iter_mut().zip(&without).zip(&cand) {
                    *t = w.min(d);
                }
                let (trial_cost, _) = z_cost_from_sq(data, &trial, inst.z);
                if trial_cost < cost && trial_cost * cfg.improvement_factor <= cost {
                    accepted = Some((j, c, trial_cost));
                    break 'scan;
                }
            }
        }
        match accepted {
            Some((j, c, trial_cost)) => {
                centers = centers.with_replaced(j, data.point(c));
                cost = trial_cost;
                history.push(cost);
            }
            None => break,
        }
    }
    let result = partition(data, &centers, inst.z)?.with_meta(meta(BaselineAlgo::LocalSearch, cfg.seed));
    Ok(BaselineOutcome { result, history })
}

/// k-means++ + Lloyd on a Bernoulli(1/(2z)) sample, evaluated on all points
/// with exactly `z` discarded.
pub fn uniform_conservative(
    inst: &Instance<'_>,
    cfg: &BaselineConfig,
    deadline: &Deadline,
) -> Result<ClusteringResult> {
    cfg.validate()?;
    if inst.z == 0 {
        return Err(Error::InvalidParameter(
            "conservative sampling needs z >= 1".into(),
        ));
    }
    let p = (1.0 / (2.0 * inst.z as f64)).min(1.0);
    let sample = match uniform_sample(inst.data, p, cfg.seed) {
        Ok(s) => s,
        Err(Error::SampleTooSmall { .. }) => {
            return Err(Error::SampleTooSmall { size: 0, k: inst.k })
        }
        Err(e) => return Err(e),
    };
    if sample.data.len() < inst.k {
        return Err(Error::SampleTooSmall {
            size: sample.data.len(),
            k: inst.k,
        });
    }
    let centers = PlusPlusLloyd::new(cfg.lloyd()).solve(&sample.data, inst.k, cfg.seed, deadline)?;
    Ok(partition(inst.data, &centers, inst.z)?.with_meta(meta(BaselineAlgo::UniformConservative, cfg.seed)))
}

/// k-means++ seeds for the iterative baselines.
pub fn seed_centers(data: &Dataset, k: usize, seed: u64, deadline: &Deadline) -> Result<CenterSet> {
    let mut rng = seeded_rng(seed);
    let (idx, _) = kmeanspp_indices(data, k, &mut rng, deadline)?;
    CenterSet::from_indices(data, &idx)
}

/// Run a baseline end to end, seeding iterative ones with k-means++.
pub fn run_baseline(inst: &Instance<'_>, cfg: &BaselineConfig, deadline: &Deadline) -> Result<ClusteringResult> {
    match cfg.algo {
        BaselineAlgo::KmeansMinusMinus => {
            let init = seed_centers(inst.data, inst.k, cfg.seed, deadline)?;
            Ok(kmeans_minus_minus(inst, &init, cfg, deadline)?.result)
        }
        BaselineAlgo::LocalSearch => {
            let init = seed_centers(inst.data, inst.k, cfg.seed, deadline)?;
            Ok(local_search_outliers(inst, &init, cfg, deadline)?.result)
        }
        BaselineAlgo::UniformConservative => uniform_conservative(inst, cfg, deadline),
    }
}
