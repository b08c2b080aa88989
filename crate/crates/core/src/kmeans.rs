//! Weighted k-means++ seeding and weighted Lloyd refinement.
//!
//! Randomness comes from [`ChaCha8Rng`] seeded with a `u64`, whose stream is
//! specified and identical across platforms. D² draws invert the running
//! cumulative sum in ascending point order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::deadline::Deadline;
use crate::error::{Error, Result};
use crate::geometry::{assign_unchecked, sq_dist_unchecked, CenterSet, Dataset};

pub const DEFAULT_IMPROVEMENT_FACTOR: f64 = 1.00001;
pub const DEFAULT_MAX_ITERS: usize = 1000;

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LloydConfig {
    /// Stop once an iteration improves the objective by less than this factor.
    pub improvement_factor: f64,
    pub max_iters: usize,
    pub seed: u64,
}

impl Default for LloydConfig {
    fn default() -> Self {
        LloydConfig {
            improvement_factor: DEFAULT_IMPROVEMENT_FACTOR,
            max_iters: DEFAULT_MAX_ITERS,
            seed: 0,
        }
    }
}

impl LloydConfig {
    pub fn with_seed(seed: u64) -> Self {
        LloydConfig {
            seed,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.improvement_factor > 1.0 && self.improvement_factor.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "improvement factor must exceed 1, got {}",
                self.improvement_factor
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter("max_iters must be positive".into()));
        }
        Ok(())
    }
}

/// Draw an index with probability proportional to `mass`, by inverting the
/// cumulative sum at `u * total`. Returns `None` when the total mass is zero.
pub(crate) fn draw_proportional(mass: &[f64], rng: &mut impl Rng) -> Option<usize> {
    let total = mass.iter().fold(0.0, |acc, m| acc + m);
    if total.is_nan() || total <= 0.0 {
        return None;
    }
    let target = rng.random::<f64>() * total;
    let mut cum = 0.0;
    let mut last_positive = None;
    for (i, &m) in mass.iter().enumerate() {
        if m > 0.0 {
            cum += m;
            last_positive = Some(i);
            if cum > target {
                return Some(i);
            }
        }
    }
    // Rounding can leave `cum` a hair below `target`.
    last_positive
}

/// Indices of `m` distinct seeds chosen by weighted D² sampling, plus each
/// point's final squared distance to its nearest seed.
pub(crate) fn kmeanspp_indices(
    data: &Dataset,
    m: usize,
    rng: &mut impl Rng,
    deadline: &Deadline,
) -> Result<(Vec<usize>, Vec<f64>)> {
    let n = data.len();
    if m == 0 {
        return Err(Error::InvalidParameter("number of seeds must be positive".into()));
    }
    if m > n {
        return Err(Error::TooManyCenters {
            requested: m,
            available: n,
        });
    }
    let weights: Vec<f64> = (0..n).map(|i| data.weight(i)).collect();
    let mut chosen = vec![false; n];
    let mut seeds = Vec::with_capacity(m);

    let first = draw_proportional(&weights, rng).expect("weights are positive");
    seeds.push(first);
    chosen[first] = true;
    let anchor = data.point(first);
    let mut d2: Vec<f64> = data
        .coords()
        .par_chunks_exact(data.dim())
        .map(|p| sq_dist_unchecked(p, anchor))
        .collect();
    let mut mass = vec![0.0; n];

    while seeds.len() < m {
        deadline.check()?;
        for i in 0..n {
            mass[i] = weights[i] * d2[i];
        }
        let next = match draw_proportional(&mass, rng) {
            Some(i) => i,
            None => {
                // Every point coincides with a seed: fall back to the unchosen ones.
                let rest: Vec<f64> = (0..n)
                    .map(|i| if chosen[i] { 0.0 } else { weights[i] })
                    .collect();
                draw_proportional(&rest, rng).expect("m <= n leaves an unchosen point")
            }
        };
        seeds.push(next);
        chosen[next] = true;
        let c = data.point(next);
        d2.par_iter_mut()
            .zip(data.coords().par_chunks_exact(data.dim()))
            .for_each(|(d, p)| {
                let nd = sq_dist_unchecked(p, c);
                if nd < *d {
                    *d = nd;
                }
            });
    }
    Ok((seeds, d2))
}

/// k-means++ seeding: `m` centers drawn from the data by weighted D² sampling.
pub fn kmeanspp_seed(data: &Dataset, m: usize, seed: u64) -> Result<CenterSet> {
    let mut rng = seeded_rng(seed);
    let (idx, _) = kmeanspp_indices(data, m, &mut rng, &Deadline::NONE)?;
    CenterSet::from_indices(data, &idx)
}

/// Lloyd's run with its per-iteration objective trace.
#[derive(Debug, Clone)]
pub struct LloydOutcome {
    pub centers: CenterSet,
    /// `history[t]` is the 0-cost of the centers after `t` recentering steps.
    pub history: Vec<f64>,
    pub iterations: usize,
}

impl LloydOutcome {
    pub fn objective(&self) -> f64 {
        *self.history.last().expect("history is never empty")
    }
}

fn plain_cost(data: &Dataset, nearest: &[(usize, f64)]) -> f64 {
    nearest
        .iter()
        .enumerate()
        .fold(0.0, |acc, (i, &(_, d))| acc + data.weight(i) * d)
}

/// Weighted centroids of the kept points; a center with no members keeps its
/// previous position. `keep` of `None` means every point.
pub(crate) fn recenter(
    data: &Dataset,
    centers: &CenterSet,
    assignment: &[(usize, f64)],
    keep: Option<&[bool]>,
) -> CenterSet {
    let dim = data.dim();
    let m = centers.len();
    let mut sums = vec![0.0; m * dim];
    let mut mass = vec![0.0; m];
    for (i, p) in data.points().enumerate() {
        if keep.is_some_and(|k| !k[i]) {
            continue;
        }
        let j = assignment[i].0;
        let w = data.weight(i);
        mass[j] += w;
        for (s, &x) in sums[j * dim..(j + 1) * dim].iter_mut().zip(p) {
            *s += w * x;
        }
    }
    let mut out = centers.clone();
    for j in 0..m {
        if mass[j] > 0.0 {
            for (c, s) in out.center_mut(j).iter_mut().zip(&sums[j * dim..(j + 1) * dim]) {
                *c = s / mass[j];
            }
        }
    }
    out
}

pub fn lloyd_traced(
    data: &Dataset,
    init: &CenterSet,
    cfg: &LloydConfig,
    deadline: &Deadline,
) -> Result<LloydOutcome> {
    cfg.validate()?;
    init.check_dim(data.dim())?;
    let mut centers = init.clone();
    let mut nearest = assign_unchecked(data, &centers);
    let mut cost = plain_cost(data, &nearest);
    let mut history = vec![cost];
    let mut iterations = 0;
    while iterations < cfg.max_iters {
        deadline.check()?;
        let next = recenter(data, &centers, &nearest, None);
        let next_nearest = assign_unchecked(data, &next);
        let next_cost = plain_cost(data, &next_nearest);
        iterations += 1;
        if next_cost > cost {
            // Float noise on a converged solution; keep the better centers.
            break;
        }
        history.push(next_cost);
        let improved_enough = next_cost * cfg.improvement_factor < cost;
        centers = next;
        nearest = next_nearest;
        cost = next_cost;
        if !improved_enough {
            break;
        }
    }
    Ok(LloydOutcome {
        centers,
        history,
        iterations,
    })
}

/// Lloyd's algorithm from `init` until the objective stalls.
pub fn lloyd(data: &Dataset, init: &CenterSet, cfg: &LloydConfig) -> Result<CenterSet> {
    Ok(lloyd_traced(data, init, cfg, &Deadline::NONE)?.centers)
}

/// k-means++ seeding followed by Lloyd's.
pub fn kmeans(data: &Dataset, k: usize, cfg: &LloydConfig) -> Result<CenterSet> {
    PlusPlusLloyd::new(*cfg).solve(data, k, cfg.seed, &Deadline::NONE)
}

/// A k-means routine without outliers, usable as the black box inside
/// noise-removal preprocessing.
pub trait KMeansSolver: Sync {
    fn solve(&self, data: &Dataset, k: usize, seed: u64, deadline: &Deadline) -> Result<CenterSet>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct PlusPlusLloyd {
    pub cfg: LloydConfig,
}

impl PlusPlusLloyd {
    pub fn new(cfg: LloydConfig) -> Self {
        PlusPlusLloyd { cfg }
    }
}

impl KMeansSolver for PlusPlusLloyd {
    fn solve(&self, data: &Dataset, k: usize, seed: u64, deadline: &Deadline) -> Result<CenterSet> {
        let mut rng = seeded_rng(seed);
        let (idx, _) = kmeanspp_indices(data, k, &mut rng, deadline)?;
        let init = CenterSet::from_indices(data, &idx)?;
        Ok(lloyd_traced(data, &init, &self.cfg, deadline)?.centers)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::z_cost;

    fn line(v: &[f64]) -> Dataset {
        Dataset::from_line(v).unwrap()
    }

    #[test]
    fn seeding_exhausts_all_points() {
        let x = line(&[3.0, -1.0, 7.5, 0.25]);
        let c = kmeanspp_seed(&x, 4, 9).unwrap();
        let mut got: Vec<f64> = c.coords().to_vec();
        got.sort_by(f64::total_cmp);
        assert_eq!(got, vec![-1.0, 0.25, 3.0, 7.5]);
        assert_eq!(z_cost(&x, &c, 0).unwrap().0, 0.0);
    }

    #[test]
    fn seeding_with_duplicates_still_distinct_indices() {
        let x = line(&[1.0, 1.0, 1.0]);
        let mut rng = seeded_rng(4);
        let (mut idx, _) = kmeanspp_indices(&x, 3, &mut rng, &Deadline::NONE).unwrap();
        idx.sort();
        assert_eq!(idx, vec![0, 1, 2]);
    }

    #[test]
    fn two_points_always_both_chosen() {
        let x = line(&[0.0, 100.0]);
        for seed in 0..20 {
            let c = kmeanspp_seed(&x, 2, seed).unwrap();
            let mut got = c.coords().to_vec();
            got.sort_by(f64::total_cmp);
            assert_eq!(got, vec![0.0, 100.0]);
        }
    }

    #[test]
    fn too_many_seeds_rejected() {
        let x = line(&[0.0, 1.0]);
        assert!(matches!(
            kmeanspp_seed(&x, 3, 0),
            Err(Error::TooManyCenters { requested: 3, available: 2 })
        ));
    }

    #[test]
    fn lloyd_fixed_point() {
        let x = line(&[1.0, 1.0, 5.0, 5.0]);
        let init = CenterSet::from_line(&[1.0, 5.0]).unwrap();
        let out = lloyd_traced(&x, &init, &LloydConfig::default(), &Deadline::NONE).unwrap();
        assert_eq!(out.iterations, 1);
        assert_eq!(out.centers, init);
    }

    #[test]
    fn lloyd_single_center_is_centroid() {
        let x = line(&[0.0, 2.0]);
        let init = CenterSet::from_line(&[1.0]).unwrap();
        let out = lloyd_traced(&x, &init, &LloydConfig::default(), &Deadline::NONE).unwrap();
        assert_eq!(out.centers.coords(), &[1.0]);
        assert_eq!(out.objective(), 2.0);
    }

    #[test]
    fn lloyd_two_clusters() {
        let x = line(&[0.0, 1.0, 9.0, 10.0]);
        let init = CenterSet::from_line(&[1.0, 9.0]).unwrap();
        let out = lloyd_traced(&x, &init, &LloydConfig::default(), &Deadline::NONE).unwrap();
        assert_eq!(out.centers.coords(), &[0.5, 9.5]);
        assert_eq!(out.objective(), 1.0);
    }

    #[test]
    fn lloyd_keeps_empty_cluster_center() {
        let x = line(&[0.0, 1.0]);
        let init = CenterSet::from_line(&[0.5, 100.0]).unwrap();
        let c = lloyd(&x, &init, &LloydConfig::default()).unwrap();
        assert_eq!(c.coords(), &[0.5, 100.0]);
    }

    #[test]
    fn kmeans_trivial_cases() {
        let x = line(&[0.0, 10.0]);
        let c = kmeans(&x, 2, &LloydConfig::with_seed(3)).unwrap();
        assert_eq!(z_cost(&x, &c, 0).unwrap().0, 0.0);
        let x = line(&[4.0, -2.0, 8.0]);
        let c = kmeans(&x, 3, &LloydConfig::with_seed(3)).unwrap();
        assert_eq!(z_cost(&x, &c, 0).unwrap().0, 0.0);
    }

    #[test]
    fn config_validation() {
        let mut cfg = LloydConfig {
            improvement_factor: 1.0,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        cfg.improvement_factor = 1.1;
        cfg.max_iters = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn weighted_centroid() {
        let x = line(&[0.0, 4.0]).with_weights(vec![3.0, 1.0]).unwrap();
        let c = lloyd(&x, &CenterSet::from_line(&[0.0]).unwrap(), &LloydConfig::default()).unwrap();
        assert_eq!(c.coords(), &[1.0]);
    }

    #[test]
    fn deterministic_per_seed() {
        let pts: Vec<f64> = (0..200).map(|i| ((i * 37) % 101) as f64 * 0.37).collect();
        let x = line(&pts);
        let cfg = LloydConfig::with_seed(11);
        assert_eq!(kmeans(&x, 5, &cfg).unwrap(), kmeans(&x, 5, &cfg).unwrap());
    }

    #[test]
    fn draw_proportional_skips_zero_mass() {
        let mut rng = seeded_rng(0);
        for _ in 0..100 {
            let i = draw_proportional(&[0.0, 2.0, 0.0, 1.0, 0.0], &mut rng).unwrap();
            assert!(i == 1 || i == 3);
        }
        assert_eq!(draw_proportional(&[0.0, 0.0], &mut rng), None);
    }
}
