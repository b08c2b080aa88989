//! Metrics and exact oracles.
//!
//! The oracles here deliberately avoid the objective code in
//! [`crate::objective`]: they compute distances, nearest centers, outlier
//! ranking and sums with their own loops so they can check it.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::coreset::{sampling_prob, CoresetMode};
use crate::error::{Error, Result};
use crate::geometry::{CenterSet, Dataset};
use crate::kmeans::seeded_rng;
use crate::objective::{ClusteringResult, Instance};

/// Fraction of the discarded points that are true outliers. With both sets
/// of size `z` this also equals recall. Vacuously 1 when `z = 0`.
pub fn precision(discarded: &[usize], truth: &[usize]) -> Result<f64> {
    if discarded.len() != truth.len() {
        return Err(Error::SizeMismatch(format!(
            "{} discarded points against {} true outliers",
            discarded.len(),
            truth.len()
        )));
    }
    if truth.is_empty() {
        return Ok(1.0);
    }
    let mut flags = std::collections::HashSet::with_capacity(truth.len());
    flags.extend(truth.iter().copied());
    let hits = discarded.iter().filter(|i| flags.contains(i)).count();
    Ok(hits as f64 / truth.len() as f64)
}

/// Fraction of the true outliers that were discarded.
pub fn recall(discarded: &[usize], truth: &[usize]) -> Result<f64> {
    if truth.is_empty() {
        return Ok(1.0);
    }
    let flags: std::collections::HashSet<usize> = discarded.iter().copied().collect();
    let hits = truth.iter().filter(|i| flags.contains(i)).count();
    Ok(hits as f64 / truth.len() as f64)
}

pub fn result_precision(result: &ClusteringResult, truth: &[usize]) -> Result<f64> {
    precision(&result.discarded, truth)
}

/// Largest search space the oracles accept.
pub const ORACLE_CAP: u128 = 1_000_000;

fn binomial(n: usize, r: usize) -> u128 {
    if r > n {
        return 0;
    }
    let r = r.min(n - r);
    let mut acc: u128 = 1;
    for i in 0..r {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

fn oracle_sq(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for t in 0..a.len() {
        let diff = a[t] - b[t];
        s += diff * diff;
    }
    s
}

/// Exact z-cost by plain enumeration: each point's distance to its closest
/// center, the `z` largest dropped (higher index first on ties), the rest
/// summed in index order. Returns the cost and the dropped indices, ascending.
#[allow(clippy::needless_range_loop)]
pub fn oracle_z_cost(data: &Dataset, centers: &[Vec<f64>], z: usize) -> (f64, Vec<usize>) {
    let n = data.len();
    let mut dist = Vec::with_capacity(n);
    for i in 0..n {
        let mut best = f64::INFINITY;
        for c in centers {
            let d = oracle_sq(data.point(i), c);
            if d < best {
                best = d;
            }
        }
        dist.push(best);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| dist[b].partial_cmp(&dist[a]).unwrap().then(b.cmp(&a)));
    let mut dropped: Vec<usize> = order[..z].to_vec();
    dropped.sort();
    let mut total = 0.0;
    for i in 0..n {
        if !dropped.contains(&i) {
            total += data.weight(i) * dist[i];
        }
    }
    (total, dropped)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleOptimum {
    pub objective: f64,
    pub centers: Vec<Vec<f64>>,
    pub outliers: Vec<usize>,
}

fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if idx[i] < n - k + i {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Best `k` centers drawn from `pool`, by exhaustive enumeration. With
/// `k = 1` the centroid of each candidate's kept set is also tried.
#[allow(clippy::needless_range_loop)]
pub fn brute_force_opt(inst: &Instance<'_>, pool: &Dataset) -> Result<OracleOptimum> {
    if pool.dim() != inst.data.dim() {
        return Err(Error::DimensionMismatch {
            expected: inst.data.dim(),
            found: pool.dim(),
        });
    }
    if inst.k > pool.len() {
        return Err(Error::TooManyCenters {
            requested: inst.k,
            available: pool.len(),
        });
    }
    let space = binomial(pool.len(), inst.k).saturating_mul(binomial(inst.n(), inst.z));
    if space > ORACLE_CAP {
        return Err(Error::OracleTooLarge(space));
    }
    let mut best: Option<OracleOptimum> = None;
    let mut consider = |centers: Vec<Vec<f64>>| {
        let (objective, outliers) = oracle_z_cost(inst.data, &centers, inst.z);
        if best.as_ref().is_none_or(|b| objective < b.objective) {
            best = Some(OracleOptimum {
                objective,
                centers,
                outliers,
            });
        }
    };
    let mut idx: Vec<usize> = (0..inst.k).collect();
    loop {
        let centers: Vec<Vec<f64>> = idx.iter().map(|&i| pool.point(i).to_vec()).collect();
        if inst.k == 1 {
            let (_, dropped) = oracle_z_cost(inst.data, &centers, inst.z);
            let dim = inst.data.dim();
            let mut mean = vec![0.0; dim];
            let mut mass = 0.0;
            for i in 0..inst.n() {
                if !dropped.contains(&i) {
                    let w = inst.data.weight(i);
                    mass += w;
                    for t in 0..dim {
                        mean[t] += w * inst.data.point(i)[t];
                    }
                }
            }
            for m in &mut mean {
                *m /= mass;
            }
            consider(vec![mean]);
        }
        consider(centers);
        if !next_combination(&mut idx, pool.len()) {
            break;
        }
    }
    Ok(best.expect("at least one combination"))
}

/// The unrestricted optimum: every choice of `z` outliers and every split of
/// the rest into at most `k` groups, each group paying its centroid cost.
/// Any center set's z-cost is at least this value.
pub fn exact_continuous_opt(inst: &Instance<'_>) -> Result<f64> {
    let n = inst.n();
    let labelings = (inst.k as u128).checked_pow((n - inst.z) as u32).unwrap_or(u128::MAX);
    let space = labelings.saturating_mul(binomial(n, inst.z));
    if space > ORACLE_CAP {
        return Err(Error::OracleTooLarge(space));
    }
    let dim = inst.data.dim();
    let mut best = f64::INFINITY;
    let mut out: Vec<usize> = (0..inst.z).collect();
    loop {
        let kept: Vec<usize> = (0..n).filter(|i| !out.contains(i)).collect();
        let mut labels = vec![0usize; kept.len()];
        loop {
            let mut sums = vec![0.0; inst.k * dim];
            let mut mass = vec![0.0; inst.k];
            for (pos, &i) in kept.iter().enumerate() {
                let g = labels[pos];
                let w = inst.data.weight(i);
                mass[g] += w;
                for t in 0..dim {
                    sums[g * dim + t] += w * inst.data.point(i)[t];
                }
            }
            let mut cost = 0.0;
            for (pos, &i) in kept.iter().enumerate() {
                let g = labels[pos];
                let centroid: Vec<f64> = (0..dim).map(|t| sums[g * dim + t] / mass[g]).collect();
                cost += inst.data.weight(i) * oracle_sq(inst.data.point(i), &centroid);
            }
            if cost < best {
                best = cost;
            }
            // Next labeling in base k.
            let mut p = 0;
            while p < labels.len() {
                labels[p] += 1;
                if labels[p] < inst.k {
                    break;
                }
                labels[p] = 0;
                p += 1;
            }
            if p == labels.len() {
                break;
            }
        }
        if inst.z == 0 || !next_combination(&mut out, n) {
            break;
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma8Report {
    pub trials: usize,
    pub p: f64,
    pub bins: usize,
    pub large_clusters: usize,
    pub bin_condition_held: usize,
    pub cluster_condition_held: usize,
    pub both_held: usize,
    pub frequency: Option<f64>,
    /// Pass mark `1 - 2/k^2`.
    pub threshold: f64,
    pub verdict: Option<bool>,
}

/// Empirical frequency with which a Bernoulli sample at the theoretical
/// coreset probability represents every cost bin and every large cluster.
///
/// Bins split the points by squared distance to `planted` into groups of `z`
/// (the last bin takes the remainder; its interval scales with its size).
/// Each bin must receive between `0.75 p |B|` and `1.25 p |B|` sampled
/// points. Clusters are the kept points grouped by nearest planted center; a
/// cluster of size at least `z / k` is large and must receive at least
/// `0.75 p n_i` sampled points.
pub fn lemma8_statcheck(inst: &Instance<'_>, planted: &CenterSet, trials: usize, seed: u64) -> Result<Lemma8Report> {
    let (n, k, z) = (inst.n(), inst.k, inst.z);
    if z == 0 {
        return Err(Error::InvalidParameter("the check needs z >= 1".into()));
    }
    let p = sampling_prob(n, k, z, CoresetMode::Theoretical);
    if p > 1.0 {
        return Err(Error::InvalidParameter(format!(
            "theoretical sampling probability {p} exceeds 1; the conditions are vacuous"
        )));
    }
    planted.check_dim(inst.data.dim())?;
    let centers = planted.to_rows();
    let mut cost = vec![0.0; n];
    let mut owner = vec![0usize; n];
    for i in 0..n {
        let mut best = (0, f64::INFINITY);
        for (j, c) in centers.iter().enumerate() {
            let d = oracle_sq(inst.data.point(i), c);
            if d < best.1 {
                best = (j, d);
            }
        }
        owner[i] = best.0;
        cost[i] = best.1;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| cost[a].partial_cmp(&cost[b]).unwrap().then(a.cmp(&b)));
    let bins = (n / z).max(1);
    let mut bin_of = vec![0usize; n];
    for (rank, &i) in order.iter().enumerate() {
        bin_of[i] = (rank / z).min(bins - 1);
    }
    let bin_sizes: Vec<usize> = (0..bins)
        .map(|b| if b + 1 < bins { z } else { n - z * (bins - 1) })
        .collect();
    // The z most expensive points are the outliers; the rest form clusters.
    let mut cluster_of = vec![None; n];
    for &i in &order[..n - z] {
        cluster_of[i] = Some(owner[i]);
    }
    let mut cluster_sizes = vec![0usize; centers.len()];
    for c in cluster_of.iter().flatten() {
        cluster_sizes[*c] += 1;
    }
    let large: Vec<bool> = cluster_sizes
        .iter()
        .map(|&s| s as f64 >= z as f64 / k as f64)
        .collect();

    let threshold = 1.0 - 2.0 / (k * k) as f64;
    let mut report = Lemma8Report {
        trials,
        p,
        bins,
        large_clusters: large.iter().filter(|&&l| l).count(),
        bin_condition_held: 0,
        cluster_condition_held: 0,
        both_held: 0,
        frequency: None,
        threshold,
        verdict: None,
    };
    if trials == 0 {
        return Ok(report);
    }
    let mut rng = seeded_rng(seed);
    for _ in 0..trials {
        let mut in_bin = vec![0usize; bins];
        let mut in_cluster = vec![0usize; centers.len()];
        for i in 0..n {
            if rng.random::<f64>() < p {
                in_bin[bin_of[i]] += 1;
                if let Some(c) = cluster_of[i] {
                    in_cluster[c] += 1;
                }
            }
        }
        let bins_ok = (0..bins).all(|b| {
            let expect = p * bin_sizes[b] as f64;
            let got = in_bin[b] as f64;
            got >= 0.75 * expect && got <= 1.25 * expect
        });
        let clusters_ok = (0..centers.len())
            .filter(|&c| large[c])
            .all(|c| in_cluster[c] as f64 >= 0.75 * p * cluster_sizes[c] as f64);
        report.bin_condition_held += usize::from(bins_ok);
        report.cluster_condition_held += usize::from(clusters_ok);
        report.both_held += usize::from(bins_ok && clusters_ok);
    }
    let freq = report.both_held as f64 / trials as f64;
    report.frequency = Some(freq);
    report.verdict = Some(freq >= threshold);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{generate, SyntheticSpec};

    fn line(v: &[f64]) -> Dataset {
        Dataset::from_line(v).unwrap()
    }

    #[test]
    fn precision_extremes() {
        assert_eq!(precision(&[1, 2], &[1, 2]).unwrap(), 1.0);
        assert_eq!(precision(&[3, 4], &[1, 2]).unwrap(), 0.0);
        assert_eq!(precision(&[1, 4], &[1, 2]).unwrap(), 0.5);
        assert!(precision(&[1], &[1, 2]).is_err());
        assert_eq!(precision(&[], &[]).unwrap(), 1.0);
    }

    #[test]
    fn precision_equals_recall_at_equal_sizes() {
        let a = [0, 3, 5, 9];
        let b = [3, 4, 5, 6];
        assert_eq!(precision(&a, &b).unwrap(), recall(&a, &b).unwrap());
    }

    #[test]
    fn brute_force_three_points() {
        let x = line(&[0.0, 1.0, 10.0]);
        let inst = Instance::new(&x, 1, 1).unwrap();
        // Pool-only check (no centroid augmentation): best is 1.
        let (c0, _) = oracle_z_cost(&x, &[vec![0.0]], 1);
        let (c1, _) = oracle_z_cost(&x, &[vec![1.0]], 1);
        let (c10, _) = oracle_z_cost(&x, &[vec![10.0]], 1);
        assert_eq!((c0, c1, c10), (1.0, 1.0, 81.0));
        // With the centroid of {0, 1} also tried, 0.5 wins.
        let opt = brute_force_opt(&inst, &x).unwrap();
        assert_eq!(opt.objective, 0.5);
        assert_eq!(opt.outliers, vec![2]);
    }

    #[test]
    fn brute_force_k_equals_n() {
        let x = line(&[0.0, 3.0, 7.0]);
        let inst = Instance::new(&x, 3, 0).unwrap();
        assert_eq!(brute_force_opt(&inst, &x).unwrap().objective, 0.0);
    }

    #[test]
    fn brute_force_keep_one() {
        let x = line(&[0.0, 3.0, 7.0]);
        let inst = Instance::new(&x, 1, 2).unwrap();
        assert_eq!(brute_force_opt(&inst, &x).unwrap().objective, 0.0);
    }

    #[test]
    fn brute_force_cap() {
        let v: Vec<f64> = (0..60).map(f64::from).collect();
        let x = line(&v);
        let inst = Instance::new(&x, 3, 3).unwrap();
        assert!(matches!(brute_force_opt(&inst, &x), Err(Error::OracleTooLarge(_))));
    }

    #[test]
    fn single_center_optimum_is_variance() {
        let x = line(&[1.0, 2.0, 4.0, 9.0]);
        let inst = Instance::new(&x, 1, 0).unwrap();
        let mean = 4.0;
        let var: f64 = [1.0, 2.0, 4.0, 9.0].iter().map(|v: &f64| (v - mean) * (v - mean)).sum();
        assert_eq!(brute_force_opt(&inst, &x).unwrap().objective, var);
        assert_eq!(exact_continuous_opt(&inst).unwrap(), var);
    }

    #[test]
    fn continuous_optimum_small() {
        let x = line(&[0.0, 1.0, 9.0, 10.0, 50.0]);
        let inst = Instance::new(&x, 2, 1).unwrap();
        assert_eq!(exact_continuous_opt(&inst).unwrap(), 1.0);
    }

    #[test]
    fn lemma8_rejects_dense_probability() {
        let (x, truth) = generate(&SyntheticSpec {
            n: 1_000,
            d: 2,
            k: 3,
            z: 5,
            noise_range: 2.5,
            seed: 0,
        })
        .unwrap();
        let inst = Instance::new(&x, 3, 5).unwrap();
        assert!(lemma8_statcheck(&inst, &truth.centers().unwrap(), 10, 0).is_err());
    }

    #[test]
    fn lemma8_zero_trials_has_no_verdict() {
        let (x, truth) = generate(&SyntheticSpec {
            n: 20_000,
            d: 2,
            k: 2,
            z: 2_000,
            noise_range: 2.5,
            seed: 0,
        })
        .unwrap();
        let inst = Instance::new(&x, 2, 2_000).unwrap();
        let r = lemma8_statcheck(&inst, &truth.centers().unwrap(), 0, 0).unwrap();
        assert!(r.p <= 1.0);
        assert_eq!(r.verdict, None);
        assert_eq!(r.frequency, None);
        assert_eq!(r.bins, 10);
    }
}
