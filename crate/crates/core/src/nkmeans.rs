//! Noise removal ahead of any k-means routine.
//!
//! Given a guess of the optimal z-cost, every point whose radius-`r` ball
//! holds at least `2z` points (total weight, for weighted data) is *heavy*,
//! with `r = 2 * sqrt(guess / z)`. Points with no heavy point within `r` are
//! removed, the k-means routine runs on the rest, and the final clustering
//! discards exactly the `z` farthest points of the whole input.
//!
//! [`nk_means`] runs one guess with the direct pairwise scan.
//! [`nk_means_search`] tries the power-of-two guess grid; it first builds a
//! [`NeighborhoodProfile`] so each guess is answered by thresholding instead
//! of a fresh quadratic scan.

use std::collections::BinaryHeap;

use rand::seq::index::sample as sample_indices;
use rayon::prelude::*;

use crate::deadline::Deadline;
use crate::error::{Error, Result};
use crate::geometry::{for_each_distance_block, sq_dist_unchecked, Dataset};
use crate::kmeans::{seeded_rng, KMeansSolver};
use crate::objective::{partition, ClusteringResult, Instance, RunMeta};

/// Radius and heavy threshold derived from an Opt guess.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NkParams {
    pub opt_guess: f64,
    pub z: usize,
}

impl NkParams {
    pub fn new(opt_guess: f64, z: usize) -> Result<Self> {
        if z == 0 {
            return Err(Error::InvalidParameter(
                "noise removal needs z >= 1; z = 0 is plain k-means".into(),
            ));
        }
        if !(opt_guess > 0.0 && opt_guess.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "Opt guess must be positive and finite, got {opt_guess}"
            )));
        }
        Ok(NkParams { opt_guess, z })
    }

    /// `r^2 = 4 * guess / z`.
    pub fn radius_sq(&self) -> f64 {
        4.0 * self.opt_guess / self.z as f64
    }

    pub fn radius(&self) -> f64 {
        self.radius_sq().sqrt()
    }

    pub fn heavy_threshold(&self) -> f64 {
        2.0 * self.z as f64
    }
}

#[derive(Debug, Clone)]
pub struct NkOutcome {
    /// Points removed before clustering, ascending.
    pub discarded_pre: Vec<usize>,
    pub heavy_flags: Vec<bool>,
    /// `None` exactly when `failed`.
    pub result: Option<ClusteringResult>,
    pub opt_guess_used: f64,
    /// Fewer than `k` points survived the removal step.
    pub failed: bool,
    /// One record per guess tried (search only).
    pub guesses: Vec<GuessRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GuessRecord {
    pub opt_guess: f64,
    pub discarded_pre: usize,
    pub objective: Option<f64>,
}

fn mark_heavy_sq(data: &Dataset, radius_sq: f64, threshold: f64, deadline: &Deadline) -> Result<Vec<bool>> {
    let n = data.len();
    let t = data.transposed();
    let flags: Option<Vec<bool>> = (0..n)
        .into_par_iter()
        .map(|i| {
            if deadline.expired() {
                return None;
            }
            let mut mass = 0.0;
            for_each_distance_block(data.point(i), &t, n, |start, dists| {
                for (o, &d) in dists.iter().enumerate() {
                    if d <= radius_sq {
                        mass += data.weight(start + o);
                    }
                }
            });
            Some(mass >= threshold)
        })
        .collect();
    flags.ok_or(Error::Timeout)
}

fn discard_set_sq(data: &Dataset, heavy: &[bool], radius_sq: f64, deadline: &Deadline) -> Result<Vec<usize>> {
    let heavy_idx: Vec<usize> = (0..data.len()).filter(|&i| heavy[i]).collect();
    let keep: Option<Vec<bool>> = (0..data.len())
        .into_par_iter()
        .map(|i| {
            if deadline.expired() {
                return None;
            }
            let x = data.point(i);
            Some(
                heavy[i]
                    || heavy_idx
                        .iter()
                        .any(|&h| sq_dist_unchecked(x, data.point(h)) <= radius_sq),
            )
        })
        .collect();
    let keep = keep.ok_or(Error::Timeout)?;
    Ok((0..data.len()).filter(|&i| !keep[i]).collect())
}

/// Heavy flags by direct pairwise scan: `x` is heavy iff the points within
/// distance `r` of it (itself included) weigh at least `threshold`.
pub fn mark_heavy(data: &Dataset, r: f64, threshold: f64) -> Vec<bool> {
    mark_heavy_sq(data, r * r, threshold, &Deadline::NONE).expect("no deadline")
}

/// Points with no heavy point within distance `r`, ascending.
pub fn discard_set(data: &Dataset, heavy: &[bool], r: f64) -> Vec<usize> {
    discard_set_sq(data, heavy, r * r, &Deadline::NONE).expect("no deadline")
}

fn plain_outcome<S: KMeansSolver + ?Sized>(
    inst: &Instance<'_>,
    solver: &S,
    seed: u64,
    deadline: &Deadline,
) -> Result<NkOutcome> {
    let centers = solver.solve(inst.data, inst.k, seed, deadline)?;
    let result = partition(inst.data, &centers, inst.z)?;
    Ok(NkOutcome {
        discarded_pre: Vec::new(),
        heavy_flags: vec![true; inst.n()],
        result: Some(result.with_meta(meta(seed))),
        opt_guess_used: f64::INFINITY,
        failed: false,
        guesses: Vec::new(),
    })
}

fn meta(seed: u64) -> RunMeta {
    RunMeta {
        algo: "nk".into(),
        seed: Some(seed),
        wall_ms: None,
    }
}

fn complement(n: usize, sorted: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(n - sorted.len());
    let mut it = sorted.iter().peekable();
    for i in 0..n {
        if it.peek() == Some(&&i) {
            it.next();
        } else {
            out.push(i);
        }
    }
    out
}

/// Cluster what survives removal, then discard exactly `z` over all points.
fn cluster_survivors<S: KMeansSolver + ?Sized>(
    inst: &Instance<'_>,
    removed: &[usize],
    solver: &S,
    seed: u64,
    deadline: &Deadline,
) -> Result<Option<ClusteringResult>> {
    let kept = complement(inst.n(), removed);
    if kept.len() < inst.k {
        return Ok(None);
    }
    let survivors = inst.data.subset(&kept)?;
    let centers = solver.solve(&survivors, inst.k, seed, deadline)?;
    Ok(Some(partition(inst.data, &centers, inst.z)?.with_meta(meta(seed))))
}

/// One pass of noise removal at a fixed Opt guess, followed by `solver`.
pub fn nk_means<S: KMeansSolver + ?Sized>(
    inst: &Instance<'_>,
    opt_guess: f64,
    solver: &S,
    seed: u64,
    deadline: &Deadline,
) -> Result<NkOutcome> {
    if inst.z == 0 {
        return plain_outcome(inst, solver, seed, deadline);
    }
    let params = NkParams::new(opt_guess, inst.z)?;
    let heavy = mark_heavy_sq(inst.data, params.radius_sq(), params.heavy_threshold(), deadline)?;
    let removed = discard_set_sq(inst.data, &heavy, params.radius_sq(), deadline)?;
    let result = cluster_survivors(inst, &removed, solver, seed, deadline)?;
    Ok(NkOutcome {
        failed: result.is_none(),
        discarded_pre: removed,
        heavy_flags: heavy,
        result,
        opt_guess_used: opt_guess,
        guesses: Vec::new(),
    })
}

/// Per-point radii that answer heavy/discard queries for every radius at once.
///
/// `heavy_sq[x]` is the smallest squared radius at which `x` is heavy
/// (infinite if never). `cover_sq[x] = min_y max(d^2(x, y), heavy_sq[y])` is
/// the smallest squared radius at which some heavy point lies within reach of
/// `x`. Hence at squared radius `s`, `x` is heavy iff `heavy_sq[x] <= s` and
/// `x` is removed iff `cover_sq[x] > s`; the removed set shrinks as `s` grows.
#[derive(Debug, Clone)]
pub struct NeighborhoodProfile {
    pub heavy_sq: Vec<f64>,
    pub cover_sq: Vec<f64>,
}

fn ordered(d: f64) -> u64 {
    // Non-negative floats order like their bit patterns.
    d.to_bits()
}

impl NeighborhoodProfile {
    pub fn build(data: &Dataset, threshold: f64, deadline: &Deadline) -> Result<Self> {
        let heavy_sq = Self::heavy_radii(data, threshold, deadline)?;
        let cover_sq = Self::cover_radii(data, &heavy_sq, deadline)?;
        Ok(NeighborhoodProfile { heavy_sq, cover_sq })
    }

    fn heavy_radii(data: &Dataset, threshold: f64, deadline: &Deadline) -> Result<Vec<f64>> {
        let n = data.len();
        if threshold <= 0.0 {
            return Ok(vec![0.0; n]);
        }
        if data.total_weight() < threshold {
            return Ok(vec![f64::INFINITY; n]);
        }
        let t = data.transposed();
        let radii: Option<Vec<f64>> = if data.is_weighted() {
            (0..n)
                .into_par_iter()
                .map(|i| {
                    if deadline.expired() {
                        return None;
                    }
                    let mut row: Vec<(f64, f64)> = Vec::with_capacity(n);
                    for_each_distance_block(data.point(i), &t, n, |start, dists| {
                        row.extend(dists.iter().enumerate().map(|(o, &d)| (d, data.weight(start + o))));
                    });
                    row.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
                    let mut mass = 0.0;
                    for (d, w) in row {
                        mass += w;
                        if mass >= threshold {
                            return Some(d);
                        }
                    }
                    Some(f64::INFINITY)
                })
                .collect()
        } else {
            let need = threshold.ceil() as usize;
            (0..n)
                .into_par_iter()
                .map(|i| {
                    if deadline.expired() {
                        return None;
                    }
                    // Max-heap of the `need` smallest distances seen so far.
                    let mut heap: BinaryHeap<u64> = BinaryHeap::with_capacity(need + 1);
                    for_each_distance_block(data.point(i), &t, n, |_, dists| {
                        for &d in dists {
                            let key = ordered(d);
                            if heap.len() < need {
                                heap.push(key);
                            } else if let Some(mut top) = heap.peek_mut() {
                                if key < *top {
                                    *top = key;
                                }
                            }
                        }
                    });
                    Some(f64::from_bits(*heap.peek().expect("need >= 1")))
                })
                .collect()
        };
        radii.ok_or(Error::Timeout)
    }

    fn cover_radii(data: &Dataset, heavy_sq: &[f64], deadline: &Deadline) -> Result<Vec<f64>> {
        let n = data.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| heavy_sq[a].total_cmp(&heavy_sq[b]).then(a.cmp(&b)));
        let radii: Option<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| {
                if deadline.expired() {
                    return None;
                }
                let x = data.point(i);
                let mut best = heavy_sq[i];
                for &j in &order {
                    if heavy_sq[j] >= best {
                        break;
                    }
                    let v = sq_dist_unchecked(x, data.point(j)).max(heavy_sq[j]);
                    if v < best {
                        best = v;
                    }
                }
                Some(best)
            })
            .collect();
        radii.ok_or(Error::Timeout)
    }

    pub fn heavy(&self, radius_sq: f64) -> Vec<bool> {
        self.heavy_sq.iter().map(|&h| h <= radius_sq).collect()
    }

    pub fn discard(&self, radius_sq: f64) -> Vec<usize> {
        (0..self.cover_sq.len())
            .filter(|&i| self.cover_sq[i] > radius_sq)
            .collect()
    }

    pub fn discard_count(&self, radius_sq: f64) -> usize {
        self.cover_sq.iter().filter(|&&c| c > radius_sq).count()
    }
}

/// How the Opt guess range is bracketed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GuessGrid {
    /// Above this many points the range comes from a subsample.
    pub exact_limit: usize,
    pub subsample: usize,
    /// The subsampled range is widened by this factor on both ends.
    pub widen: f64,
}

impl Default for GuessGrid {
    fn default() -> Self {
        GuessGrid {
            exact_limit: 50_000,
            subsample: 10_000,
            widen: 4.0,
        }
    }
}

/// Smallest positive and largest pairwise squared distance among `indices`.
fn pairwise_range(data: &Dataset, indices: &[usize], deadline: &Deadline) -> Result<(f64, f64)> {
    let sub = data.subset(indices)?.without_weights();
    let t = sub.transposed();
    let m = sub.len();
    let per_row: Option<Vec<(f64, f64)>> = (0..m)
        .into_par_iter()
        .map(|i| {
            if deadline.expired() {
                return None;
            }
            let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
            for_each_distance_block(sub.point(i), &t, m, |start, dists| {
                for (o, &d) in dists.iter().enumerate() {
                    if start + o > i {
                        if d > 0.0 && d < lo {
                            lo = d;
                        }
                        hi = hi.max(d);
                    }
                }
            });
            Some((lo, hi))
        })
        .collect();
    let per_row = per_row.ok_or(Error::Timeout)?;
    Ok(per_row
        .into_iter()
        .fold((f64::INFINITY, 0.0), |(a, b), (lo, hi)| (a.min(lo), b.max(hi))))
}

impl GuessGrid {
    /// Powers of two covering `[W * min d^2, W * max d^2]`, `W` the total weight.
    pub fn guesses(&self, data: &Dataset, seed: u64, deadline: &Deadline) -> Result<Vec<f64>> {
        let n = data.len();
        let (lo, hi) = if n > self.exact_limit {
            let mut rng = seeded_rng(seed ^ 0x9e37_79b9_7f4a_7c15);
            let mut idx = sample_indices(&mut rng, n, self.subsample.min(n)).into_vec();
            idx.sort_unstable();
            let (lo, hi) = pairwise_range(data, &idx, deadline)?;
            (lo / self.widen, hi * self.widen)
        } else {
            let idx: Vec<usize> = (0..n).collect();
            pairwise_range(data, &idx, deadline)?
        };
        if hi <= 0.0 {
            return Ok(vec![1.0]);
        }
        let w = data.total_weight();
        let lo_exp = (w * lo).log2().floor() as i32;
        let hi_exp = (w * hi).log2().ceil() as i32;
        Ok((lo_exp..=hi_exp).map(|e| 2f64.powi(e)).collect())
    }
}

/// Noise removal over the power-of-two Opt guess grid, keeping the guess whose
/// final exact-`z` objective is smallest. Guesses that leave fewer than `k`
/// points are skipped.
pub fn nk_means_search<S: KMeansSolver + ?Sized>(
    inst: &Instance<'_>,
    solver: &S,
    grid: &GuessGrid,
    seed: u64,
    deadline: &Deadline,
) -> Result<NkOutcome> {
    if inst.n() < 2 {
        return Err(Error::InvalidInstance("guess search needs at least two points".into()));
    }
    if inst.z == 0 {
        return plain_outcome(inst, solver, seed, deadline);
    }
    let guesses = grid.guesses(inst.data, seed, deadline)?;
    let threshold = 2.0 * inst.z as f64;
    let profile = NeighborhoodProfile::build(inst.data, threshold, deadline)?;
    search_with_profile(inst, solver, &guesses, &profile, seed, deadline)
}

/// Guess loop over a prebuilt profile.
pub fn search_with_profile<S: KMeansSolver + ?Sized>(
    inst: &Instance<'_>,
    solver: &S,
    guesses: &[f64],
    profile: &NeighborhoodProfile,
    seed: u64,
    deadline: &Deadline,
) -> Result<NkOutcome> {
    let mut records = Vec::with_capacity(guesses.len());
    let mut best: Option<(f64, Vec<usize>, ClusteringResult)> = None;
    // Removed sets are nested in the radius, so equal sizes mean equal sets.
    let mut last: Option<(usize, Option<f64>)> = None;
    for &g in guesses {
        deadline.check()?;
        let params = NkParams::new(g, inst.z)?;
        let radius_sq = params.radius_sq();
        let count = profile.discard_count(radius_sq);
        if let Some((c, obj)) = last {
            if c == count {
                records.push(GuessRecord {
                    opt_guess: g,
                    discarded_pre: count,
                    objective: obj,
                });
                continue;
            }
        }
        let removed = profile.discard(radius_sq);
        let result = cluster_survivors(inst, &removed, solver, seed, deadline)?;
        let objective = result.as_ref().map(|r| r.objective);
        records.push(GuessRecord {
            opt_guess: g,
            discarded_pre: count,
            objective,
        });
        last = Some((count, objective));
        if let Some(result) = result {
            if best.as_ref().is_none_or(|(_, _, b)| result.objective < b.objective) {
                best = Some((g, removed, result));
            }
        }
    }
    let (g, removed, result) = best.ok_or(Error::NoFeasibleGuess)?;
    let radius_sq = NkParams::new(g, inst.z)?.radius_sq();
    Ok(NkOutcome {
        discarded_pre: removed,
        heavy_flags: profile.heavy(radius_sq),
        result: Some(result),
        opt_guess_used: g,
        failed: false,
        guesses: records,
    })
}
