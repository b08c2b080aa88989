//! Synthetic benchmark data: Gaussian balls plus uniform noise, with ground
//! truth outliers.
//!
//! Generation consumes one [`ChaCha8Rng`](rand_chacha::ChaCha8Rng) stream in a
//! fixed order: true centers, then inliers cluster by cluster, then noise.
//! Normal variates come from `rand_distr::StandardNormal` (ziggurat). Inliers
//! occupy the first `n - z` indices and noise the last `z`; the labelled
//! outliers are then re-derived as the `z` points farthest from the true
//! centers, so a noise point that lands inside a ball counts as an inlier.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{CenterSet, Dataset};
use crate::kmeans::seeded_rng;
use crate::objective::z_cost;

/// Half-width of the cube the true centers are drawn from.
pub const CENTER_RANGE: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    /// Total points, noise included.
    pub n: usize,
    pub d: usize,
    pub k: usize,
    pub z: usize,
    /// Noise is uniform in `[-noise_range, noise_range]^d`.
    pub noise_range: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.k == 0 {
            return Err(Error::InvalidParameter("d and k must be positive".into()));
        }
        if self.z >= self.n {
            return Err(Error::InvalidParameter(format!(
                "z = {} must be below n = {}",
                self.z, self.n
            )));
        }
        if self.n - self.z < self.k {
            return Err(Error::InvalidParameter("fewer inliers than clusters".into()));
        }
        if !(self.noise_range > 0.0 && self.noise_range.is_finite()) {
            return Err(Error::InvalidParameter("noise range must be positive".into()));
        }
        Ok(())
    }

    /// Planted cluster sizes: `(n - z) / k` each, remainder to the first clusters.
    pub fn cluster_sizes(&self) -> Vec<usize> {
        split_evenly(self.n - self.z, self.k)
    }
}

fn split_evenly(total: usize, parts: usize) -> Vec<usize> {
    let base = total / parts;
    let extra = total % parts;
    (0..parts).map(|i| base + usize::from(i < extra)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub true_centers: Vec<Vec<f64>>,
    /// The `z` points farthest from the true centers, ascending.
    pub outlier_indices: Vec<usize>,
    /// z-cost of the true centers.
    pub planted_zcost: f64,
    /// Generating cluster of each inlier slot; noise points have none.
    #[serde(skip)]
    pub labels: Vec<Option<usize>>,
}

impl GroundTruth {
    pub fn centers(&self) -> Result<CenterSet> {
        CenterSet::from_rows(&self.true_centers)
    }
}

fn finish(coords: Vec<f64>, d: usize, centers: CenterSet, labels: Vec<Option<usize>>, z: usize) -> Result<(Dataset, GroundTruth)> {
    let data = Dataset::new(d, coords)?;
    let (planted_zcost, outlier_indices) = z_cost(&data, &centers, z)?;
    Ok((
        data,
        GroundTruth {
            true_centers: centers.to_rows(),
            outlier_indices,
            planted_zcost,
            labels,
        },
    ))
}

/// Draw a dataset and its ground truth.
pub fn generate(spec: &SyntheticSpec) -> Result<(Dataset, GroundTruth)> {
    spec.validate()?;
    let mut rng = seeded_rng(spec.seed);
    let d = spec.d;
    let center_coords: Vec<f64> = (0..spec.k * d)
        .map(|_| rng.random_range(-CENTER_RANGE..CENTER_RANGE))
        .collect();
    let centers = CenterSet::new(d, center_coords)?;
    let mut coords = Vec::with_capacity(spec.n * d);
    let mut labels = Vec::with_capacity(spec.n);
    for (c, size) in spec.cluster_sizes().into_iter().enumerate() {
        let mu = centers.center(c);
        for _ in 0..size {
            for &m in mu {
                let g: f64 = rng.sample(StandardNormal);
                coords.push(m + g);
            }
            labels.push(Some(c));
        }
    }
    for _ in 0..spec.z {
        for _ in 0..d {
            coords.push(rng.random_range(-spec.noise_range..spec.noise_range));
        }
        labels.push(None);
    }
    finish(coords, d, centers, labels, spec.z)
}

/// Well-separated balls of chosen sizes plus uniform noise, for tests that
/// need control over cluster sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedSpec {
    pub sizes: Vec<usize>,
    pub d: usize,
    /// Distance between consecutive centers, which sit on the first axis.
    pub separation: f64,
    /// Per-coordinate standard deviation inside a ball.
    pub spread: f64,
    pub noise: usize,
    /// Noise is uniform in a cube of this half-width around the centers' midpoint.
    pub noise_range: f64,
    pub seed: u64,
}

pub fn generate_planted(spec: &PlantedSpec) -> Result<(Dataset, GroundTruth)> {
    if spec.d == 0 || spec.sizes.is_empty() || spec.sizes.contains(&0) {
        return Err(Error::InvalidParameter("need d >= 1 and non-empty clusters".into()));
    }
    let d = spec.d;
    let k = spec.sizes.len();
    let mut center_coords = vec![0.0; k * d];
    for c in 0..k {
        center_coords[c * d] = c as f64 * spec.separation;
    }
    let centers = CenterSet::new(d, center_coords)?;
    let mid = (k - 1) as f64 * spec.separation / 2.0;
    let mut rng = seeded_rng(spec.seed);
    let n = spec.sizes.iter().sum::<usize>() + spec.noise;
    let mut coords = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    for (c, &size) in spec.sizes.iter().enumerate() {
        let mu = centers.center(c);
        for _ in 0..size {
            for &m in mu {
                let g: f64 = rng.sample(StandardNormal);
                coords.push(m + spec.spread * g);
            }
            labels.push(Some(c));
        }
    }
    for _ in 0..spec.noise {
        for t in 0..d {
            let offset = if t == 0 { mid } else { 0.0 };
            coords.push(offset + rng.random_range(-spec.noise_range..spec.noise_range));
        }
        labels.push(None);
    }
    if spec.noise >= n {
        return Err(Error::InvalidParameter("noise must be below the total size".into()));
    }
    finish(coords, d, centers, labels, spec.noise)
}
