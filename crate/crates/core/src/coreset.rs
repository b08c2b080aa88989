//! Sampling coresets for k-means with outliers.
//!
//! Two parameterizations are supported. `Theoretical` samples each point with
//! `p = max(36/z ln(4nk²/z), 36k/z ln(2k³))`; when `p > 1` it skips sampling
//! and keeps `32(k + z)` k-means++ centers, otherwise it keeps
//! `32(k + z')` centers of the sample with `z' = ceil(2.5 p z)`.
//! `Practical` samples with `p = min(2.5 k ln n / z, 1)` and keeps
//! `k + z'` centers with `z' = ceil(p z)`. In both modes each kept center is
//! weighted by the total weight of the sample points it attracts.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::deadline::Deadline;
use crate::error::{Error, Result};
use crate::geometry::{assign_unchecked, CenterSet, Dataset};
use crate::kmeans::{kmeanspp_indices, lloyd_traced, seeded_rng, LloydConfig};
use crate::objective::Instance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoresetMode {
    Theoretical,
    Practical,
}

impl fmt::Display for CoresetMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CoresetMode::Theoretical => "theoretical",
            CoresetMode::Practical => "practical",
        })
    }
}

impl FromStr for CoresetMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "theoretical" => Ok(CoresetMode::Theoretical),
            "practical" => Ok(CoresetMode::Practical),
            other => Err(Error::Parse(format!("unknown coreset mode `{other}`"))),
        }
    }
}

/// Sampling probability for the given mode, natural logarithms throughout.
///
/// Theoretical values may exceed 1; callers branch on `p > 1`. With `z = 0`
/// the theoretical probability is infinite and the practical one is 1.
pub fn sampling_prob(n: usize, k: usize, z: usize, mode: CoresetMode) -> f64 {
    let (n, k) = (n as f64, k as f64);
    if z == 0 {
        return match mode {
            CoresetMode::Theoretical => f64::INFINITY,
            CoresetMode::Practical => 1.0,
        };
    }
    let z = z as f64;
    match mode {
        CoresetMode::Theoretical => {
            let by_n = 36.0 / z * (4.0 * n * k * k / z).ln();
            let by_k = 36.0 * k / z * (2.0 * k * k * k).ln();
            by_n.max(by_k)
        }
        CoresetMode::Practical => (2.5 * k * n.ln() / z).min(1.0),
    }
}

/// A subset of a dataset together with the source index of every member.
#[derive(Debug, Clone)]
pub struct Sample {
    pub data: Dataset,
    pub indices: Vec<usize>,
}

fn bernoulli_indices(n: usize, p: f64, rng: &mut impl Rng) -> Vec<usize> {
    if p >= 1.0 {
        return (0..n).collect();
    }
    (0..n).filter(|_| rng.random::<f64>() < p).collect()
}

/// Keep each point independently with probability `p`, in ascending index order.
pub fn uniform_sample(data: &Dataset, p: f64, seed: u64) -> Result<Sample> {
    let mut rng = seeded_rng(seed);
    sample_with(data, p, &mut rng)
}

fn sample_with(data: &Dataset, p: f64, rng: &mut impl Rng) -> Result<Sample> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "sampling probability must lie in (0, 1], got {p}"
        )));
    }
    let indices = bernoulli_indices(data.len(), p, rng);
    if indices.is_empty() {
        return Err(Error::SampleTooSmall { size: 0, k: 1 });
    }
    Ok(Sample {
        data: data.subset(&indices)?,
        indices,
    })
}

/// `m` k-means++ centers of `data`, each weighted by the weight it attracts.
/// A seed always attracts itself; other points go to their nearest seed with
/// the lowest seed position winning ties.
pub fn kmeanspp_coreset(data: &Dataset, m: usize, seed: u64) -> Result<Sample> {
    let mut rng = seeded_rng(seed);
    kmeanspp_coreset_with(data, m, &mut rng, None, &Deadline::NONE)
}

/// As [`kmeanspp_coreset`], with Lloyd's run on the seeds before weighting.
/// Coreset points are then the refined centers, generally not input points;
/// `indices` holds the seed each one grew from. Centers that end up with no
/// members are dropped.
pub fn kmeanspp_coreset_refined(data: &Dataset, m: usize, seed: u64, cfg: &LloydConfig) -> Result<Sample> {
    let mut rng = seeded_rng(seed);
    kmeanspp_coreset_with(data, m, &mut rng, Some(cfg), &Deadline::NONE)
}

fn kmeanspp_coreset_with(
    data: &Dataset,
    m: usize,
    rng: &mut impl Rng,
    refine: Option<&LloydConfig>,
    deadline: &Deadline,
) -> Result<Sample> {
    let (seeds, _) = kmeanspp_indices(data, m, rng, deadline)?;
    let centers = CenterSet::from_indices(data, &seeds)?;
    if let Some(cfg) = refine {
        return refined_sample(data, &seeds, &centers, cfg, deadline);
    }
    let mut owner: Vec<usize> = assign_unchecked(data, &centers)
        .into_iter()
        .map(|(j, _)| j)
        .collect();
    for (j, &s) in seeds.iter().enumerate() {
        owner[s] = j;
    }
    let mut weights = vec![0.0; m];
    for (i, &j) in owner.iter().enumerate() {
        weights[j] += data.weight(i);
    }
    Ok(Sample {
        data: data.subset(&seeds)?.with_weights(weights)?,
        indices: seeds,
    })
}

fn refined_sample(
    data: &Dataset,
    seeds: &[usize],
    init: &CenterSet,
    cfg: &LloydConfig,
    deadline: &Deadline,
) -> Result<Sample> {
    let centers = lloyd_traced(data, init, cfg, deadline)?.centers;
    let mut weights = vec![0.0; centers.len()];
    for (i, (j, _)) in assign_unchecked(data, &centers).into_iter().enumerate() {
        weights[j] += data.weight(i);
    }
    let live: Vec<usize> = (0..centers.len()).filter(|&j| weights[j] > 0.0).collect();
    let coords = live.iter().flat_map(|&j| centers.center(j).iter().copied()).collect();
    Ok(Sample {
        data: Dataset::new(data.dim(), coords)?.with_weights(live.iter().map(|&j| weights[j]).collect())?,
        indices: live.iter().map(|&j| seeds[j]).collect(),
    })
}

/// Weighted summary plus the outlier budget to use on it.
#[derive(Debug, Clone)]
pub struct CoresetOutput {
    pub data: Dataset,
    /// Index in the source dataset of every coreset point.
    pub source_indices: Vec<usize>,
    pub z_prime: usize,
    pub p: f64,
    pub mode: CoresetMode,
    pub source_n: usize,
    /// Points in the uniform sample before k-means++ aggregation.
    pub sample_size: usize,
    /// The coreset is the raw sample because the target size exceeded it.
    pub fell_back: bool,
}

/// Size decisions that precede the k-means++ step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoresetPlan {
    pub p: f64,
    pub sampled: bool,
    pub z_prime: usize,
    /// Requested number of k-means++ centers.
    pub target: usize,
}

impl CoresetPlan {
    pub fn new(n: usize, k: usize, z: usize, mode: CoresetMode) -> Self {
        let p = sampling_prob(n, k, z, mode);
        match mode {
            CoresetMode::Theoretical if p > 1.0 => CoresetPlan {
                p,
                sampled: false,
                z_prime: z,
                target: 32 * (k + z),
            },
            CoresetMode::Theoretical => {
                let z_prime = ((2.5 * p * z as f64).ceil() as usize).min(z);
                CoresetPlan {
                    p,
                    sampled: true,
                    z_prime,
                    target: 32 * (k + z_prime),
                }
            }
            CoresetMode::Practical => {
                let z_prime = ((p * z as f64).ceil() as usize).min(z);
                CoresetPlan {
                    p,
                    sampled: p < 1.0,
                    z_prime,
                    target: k + z_prime,
                }
            }
        }
    }

    /// Coreset size once the sample holds `sample_size` points.
    pub fn size_for(&self, sample_size: usize) -> usize {
        self.target.min(sample_size)
    }
}

/// Coreset size the construction would produce for this seed, without
/// running the k-means++ step.
pub fn coreset_size(n: usize, k: usize, z: usize, mode: CoresetMode, seed: u64) -> usize {
    let plan = CoresetPlan::new(n, k, z, mode);
    let sample_size = if plan.sampled {
        let mut rng = seeded_rng(seed);
        (0..n).filter(|_| rng.random::<f64>() < plan.p).count()
    } else {
        n
    };
    plan.size_for(sample_size)
}

/// Build the coreset of `inst` in the given mode.
///
/// Sampling and seeding share one RNG stream. If the sample is no larger
/// than the requested number of centers, the sample itself is returned with
/// its existing weights.
pub fn sample_coreset(
    inst: &Instance<'_>,
    seed: u64,
    mode: CoresetMode,
    deadline: &Deadline,
) -> Result<CoresetOutput> {
    sample_coreset_refined(inst, seed, mode, false, deadline)
}

/// [`sample_coreset`], optionally running Lloyd's on the k-means++ centers
/// before they are weighted (see [`kmeanspp_coreset_refined`]).
pub fn sample_coreset_refined(
    inst: &Instance<'_>,
    seed: u64,
    mode: CoresetMode,
    refine: bool,
    deadline: &Deadline,
) -> Result<CoresetOutput> {
    let n = inst.n();
    let plan = CoresetPlan::new(n, inst.k, inst.z, mode);
    let mut rng = seeded_rng(seed);
    let sample = if plan.sampled {
        sample_with(inst.data, plan.p, &mut rng)?
    } else {
        Sample {
            data: inst.data.clone(),
            indices: (0..n).collect(),
        }
    };
    let sample_size = sample.indices.len();
    let (core, fell_back) = if plan.target >= sample_size {
        (sample, true)
    } else {
        let lloyd = LloydConfig::with_seed(seed);
        let inner = kmeanspp_coreset_with(&sample.data, plan.target, &mut rng, refine.then_some(&lloyd), deadline)?;
        let indices = inner.indices.iter().map(|&i| sample.indices[i]).collect();
        (
            Sample {
                data: inner.data,
                indices,
            },
            false,
        )
    };
    Ok(CoresetOutput {
        data: core.data,
        source_indices: core.indices,
        z_prime: plan.z_prime,
        p: plan.p.min(1.0),
        mode,
        source_n: n,
        sample_size,
        fell_back,
    })
}
