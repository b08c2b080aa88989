//! The k-means-with-outliers instance and its z-cost objective.
//!
//! Outlier ranking: points are ordered by squared distance to their nearest
//! center, largest first, and among equal distances the highest index is
//! discarded first. Each discarded point consumes one unit of the budget
//! regardless of its weight. Objectives are summed over kept points in
//! ascending index order.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{assign_unchecked, CenterSet, Dataset};

/// `(data, k, z)`: choose `k` centers, discard the `z` worst points.
#[derive(Debug, Clone, Copy)]
pub struct Instance<'a> {
    pub data: &'a Dataset,
    pub k: usize,
    pub z: usize,
}

impl<'a> Instance<'a> {
    pub fn new(data: &'a Dataset, k: usize, z: usize) -> Result<Self> {
        let n = data.len();
        if k == 0 {
            return Err(Error::InvalidInstance("k must be at least 1".into()));
        }
        if z >= n {
            return Err(Error::InvalidInstance(format!("z = {z} must be below n = {n}")));
        }
        if k + z > n {
            return Err(Error::InvalidInstance(format!(
                "k + z = {} exceeds n = {n}",
                k + z
            )));
        }
        Ok(Instance { data, k, z })
    }

    pub fn n(&self) -> usize {
        self.data.len()
    }

    /// z-cost of `centers` at this instance's own budget.
    pub fn cost(&self, centers: &CenterSet) -> Result<(f64, Vec<usize>)> {
        z_cost(self.data, centers, self.z)
    }
}

/// Provenance attached to a result.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub algo: String,
    pub seed: Option<u64>,
    pub wall_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusteringResult {
    pub centers: CenterSet,
    /// Nearest center of every point, including discarded ones.
    pub assignment: Vec<usize>,
    /// Discarded point indices, ascending.
    pub discarded: Vec<usize>,
    pub objective: f64,
    pub meta: RunMeta,
}

impl ClusteringResult {
    /// Objective rebuilt from the stored assignment and discard set.
    pub fn recompute_objective(&self, data: &Dataset) -> f64 {
        let mut is_out = vec![false; data.len()];
        for &i in &self.discarded {
            is_out[i] = true;
        }
        let mut total = 0.0;
        for (i, p) in data.points().enumerate() {
            if !is_out[i] {
                let c = self.centers.center(self.assignment[i]);
                total += data.weight(i) * crate::geometry::sq_dist_unchecked(p, c);
            }
        }
        total
    }

    /// Kept indices in ascending order.
    pub fn kept(&self) -> Vec<usize> {
        let mut is_out = vec![false; self.assignment.len()];
        for &i in &self.discarded {
            is_out[i] = true;
        }
        (0..self.assignment.len()).filter(|&i| !is_out[i]).collect()
    }

    pub fn with_meta(mut self, meta: RunMeta) -> Self {
        self.meta = meta;
        self
    }
}

/// Indices of the `z` points to discard given each point's squared distance
/// to its nearest center, returned ascending.
pub fn select_outliers(sq_dists: &[f64], z: usize) -> Vec<usize> {
    if z == 0 {
        return Vec::new();
    }
    let mut idx: Vec<usize> = (0..sq_dists.len()).collect();
    let worse_first = |a: &usize, b: &usize| {
        sq_dists[*b]
            .total_cmp(&sq_dists[*a])
            .then_with(|| b.cmp(a))
    };
    if z < idx.len() {
        idx.select_nth_unstable_by(z - 1, worse_first);
        idx.truncate(z);
    }
    idx.sort_unstable();
    idx
}

/// Weighted cost summed over the points not in `discarded` (ascending, sorted).
pub(crate) fn kept_cost(data: &Dataset, sq_dists: &[f64], discarded: &[usize]) -> f64 {
    let mut out = discarded.iter().peekable();
    let mut total = 0.0;
    for (i, &d) in sq_dists.iter().enumerate() {
        if out.peek() == Some(&&i) {
            out.next();
            continue;
        }
        total += data.weight(i) * d;
    }
    total
}

/// z-cost from precomputed nearest-center squared distances.
pub(crate) fn z_cost_from_sq(data: &Dataset, sq_dists: &[f64], z: usize) -> (f64, Vec<usize>) {
    let discarded = select_outliers(sq_dists, z);
    (kept_cost(data, sq_dists, &discarded), discarded)
}

/// The z-cost `f_z(C)`: total weighted squared distance of all points except
/// the `z` farthest from `centers`. Returns the objective and the discarded set.
pub fn z_cost(data: &Dataset, centers: &CenterSet, z: usize) -> Result<(f64, Vec<usize>)> {
    centers.check_dim(data.dim())?;
    if z >= data.len() {
        return Err(Error::InvalidInstance(format!(
            "z = {z} must be below n = {}",
            data.len()
        )));
    }
    let sq: Vec<f64> = assign_unchecked(data, centers).into_iter().map(|(_, d)| d).collect();
    Ok(z_cost_from_sq(data, &sq, z))
}

/// Full clustering of `data` by `centers` with the `z` farthest points discarded.
pub fn partition(data: &Dataset, centers: &CenterSet, z: usize) -> Result<ClusteringResult> {
    centers.check_dim(data.dim())?;
    if z >= data.len() {
        return Err(Error::InvalidInstance(format!(
            "z = {z} must be below n = {}",
            data.len()
        )));
    }
    let nearest = assign_unchecked(data, centers);
    let sq: Vec<f64> = nearest.iter().map(|&(_, d)| d).collect();
    let (objective, discarded) = z_cost_from_sq(data, &sq, z);
    Ok(ClusteringResult {
        centers: centers.clone(),
        assignment: nearest.into_iter().map(|(j, _)| j).collect(),
        discarded,
        objective,
        meta: RunMeta::default(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn line(v: &[f64]) -> Dataset {
        Dataset::from_line(v).unwrap()
    }

    #[test]
    fn z_cost_examples() {
        let x = line(&[0.0, 1.0, 10.0]);
        let c = CenterSet::from_line(&[0.0]).unwrap();
        assert_eq!(z_cost(&x, &c, 1).unwrap(), (1.0, vec![2]));

        let (plain, out) = z_cost(&x, &c, 0).unwrap();
        assert_eq!(plain, 101.0);
        assert!(out.is_empty());

        let x = line(&[0.0, 0.0, 0.0]);
        assert_eq!(z_cost(&x, &c, 1).unwrap(), (0.0, vec![2]));
    }

    #[test]
    fn z_cost_rejects_full_budget() {
        let x = line(&[0.0, 1.0]);
        let c = CenterSet::from_line(&[0.0]).unwrap();
        assert!(z_cost(&x, &c, 2).is_err());
    }

    #[test]
    fn instance_validation() {
        let x = line(&[0.0, 1.0, 2.0]);
        assert!(Instance::new(&x, 0, 0).is_err());
        assert!(Instance::new(&x, 1, 3).is_err());
        assert!(Instance::new(&x, 2, 2).is_err());
        assert!(Instance::new(&x, 2, 1).is_ok());
    }

    #[test]
    fn partition_examples() {
        let x = line(&[-1.0, 1.0]);
        let c = CenterSet::from_line(&[-1.0, 1.0]).unwrap();
        let r = partition(&x, &c, 0).unwrap();
        assert_eq!(r.assignment, vec![0, 1]);
        assert_eq!(r.objective, 0.0);

        let x = line(&[0.0, 1.0, 10.0]);
        let c = CenterSet::from_line(&[0.0, 10.0]).unwrap();
        let r = partition(&x, &c, 0).unwrap();
        assert_eq!(r.assignment, vec![0, 0, 1]);
        assert_eq!(r.objective, 1.0);

        let r = partition(&x, &c, 1).unwrap();
        assert_eq!(r.discarded, vec![1]);
        assert_eq!(r.objective, 0.0);
    }

    #[test]
    fn weighted_points_count_once_toward_budget() {
        let x = line(&[0.0, 1.0, 5.0])
            .with_weights(vec![1.0, 100.0, 1.0])
            .unwrap();
        let c = CenterSet::from_line(&[0.0]).unwrap();
        // Ranking is by distance, so the far light point goes first.
        assert_eq!(z_cost(&x, &c, 1).unwrap(), (100.0, vec![2]));
    }

    fn arb_problem() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<Vec<f64>>)> {
        (1usize..4).prop_flat_map(|d| {
            (
                prop::collection::vec(prop::collection::vec(-10f64..10.0, d), 2..30),
                prop::collection::vec(prop::collection::vec(-10f64..10.0, d), 1..5),
            )
        })
    }

    proptest! {
        #[test]
        fn monotone_in_budget((pts, cs) in arb_problem()) {
            let x = Dataset::from_rows(&pts).unwrap();
            let c = CenterSet::from_rows(&cs).unwrap();
            let mut prev = f64::INFINITY;
            for z in 0..x.len() {
                let (cost, out) = z_cost(&x, &c, z).unwrap();
                prop_assert_eq!(out.len(), z);
                prop_assert!(cost <= prev);
                prev = cost;
            }
        }

        #[test]
        fn monotone_under_added_center((pts, cs) in arb_problem(), extra in 0usize..30, z in 0usize..3) {
            let x = Dataset::from_rows(&pts).unwrap();
            let z = z.min(x.len() - 1);
            let c = CenterSet::from_rows(&cs).unwrap();
            let mut bigger = c.clone();
            bigger.push(x.point(extra % x.len()));
            let (a, _) = z_cost(&x, &c, z).unwrap();
            let (b, _) = z_cost(&x, &bigger, z).unwrap();
            prop_assert!(b <= a);
        }

        #[test]
        fn partition_round_trips((pts, cs) in arb_problem(), z in 0usize..5) {
            let x = Dataset::from_rows(&pts).unwrap();
            let z = z.min(x.len() - 1);
            let c = CenterSet::from_rows(&cs).unwrap();
            let r = partition(&x, &c, z).unwrap();
            let (cost, out) = z_cost(&x, &c, z).unwrap();
            prop_assert_eq!(r.objective.to_bits(), cost.to_bits());
            prop_assert_eq!(r.recompute_objective(&x).to_bits(), cost.to_bits());
            prop_assert_eq!(&r.discarded, &out);
            prop_assert_eq!(r.kept().len() + r.discarded.len(), x.len());
        }
    }
}
