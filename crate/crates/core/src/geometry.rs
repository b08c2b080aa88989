//! Points, weighted datasets, center sets and squared-Euclidean primitives.
//!
//! Points are stored row-major in one flat buffer; a point is a `&[f64]` of
//! length `dim`. Every squared distance in the crate goes through
//! [`sq_dist_unchecked`] (or the blocked kernel, which reproduces it bit for
//! bit) so objective values are reproducible across code paths.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Immutable collection of `n >= 1` points in `R^dim` with optional positive weights.
///
/// Point index is a persistent identity: tie-breaking and ground-truth
/// bookkeeping both refer to it.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    dim: usize,
    coords: Vec<f64>,
    weights: Option<Vec<f64>>,
}

impl Dataset {
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDataset("dimension must be at least 1".into()));
        }
        if coords.is_empty() {
            return Err(Error::InvalidDataset("dataset must contain at least one point".into()));
        }
        if !coords.len().is_multiple_of(dim) {
            return Err(Error::InvalidDataset(format!(
                "{} coordinates do not divide into points of dimension {dim}",
                coords.len()
            )));
        }
        if let Some(pos) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::InvalidDataset(format!(
                "non-finite coordinate in point {}",
                pos / dim
            )));
        }
        Ok(Dataset {
            dim,
            coords,
            weights: None,
        })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows
            .first()
            .map(|r| r.as_ref().len())
            .ok_or_else(|| Error::InvalidDataset("dataset must contain at least one point".into()))?;
        let mut coords = Vec::with_capacity(dim * rows.len());
        for row in rows {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            coords.extend_from_slice(row);
        }
        Dataset::new(dim, coords)
    }

    /// Points on the real line, one coordinate each.
    pub fn from_line(values: &[f64]) -> Result<Self> {
        Dataset::new(1, values.to_vec())
    }

    pub fn with_weights(mut self, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != self.len() {
            return Err(Error::SizeMismatch(format!(
                "{} weights for {} points",
                weights.len(),
                self.len()
            )));
        }
        if let Some(i) = weights.iter().position(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::InvalidDataset(format!(
                "weight of point {i} must be positive and finite"
            )));
        }
        self.weights = Some(weights);
        Ok(self)
    }

    pub fn without_weights(mut self) -> Self {
        self.weights = None;
        self
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    /// Always false: a dataset holds at least one point.
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> std::slice::ChunksExact<'_, f64> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    #[inline]
    pub fn weight(&self, i: usize) -> f64 {
        match &self.weights {
            Some(w) => w[i],
            None => 1.0,
        }
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    pub fn is_weighted(&self) -> bool {
        self.weights.is_some()
    }

    pub fn total_weight(&self) -> f64 {
        match &self.weights {
            Some(w) => w.iter().fold(0.0, |acc, x| acc + x),
            None => self.len() as f64,
        }
    }

    /// The points at `indices`, in that order, carrying their weights along.
    pub fn subset(&self, indices: &[usize]) -> Result<Dataset> {
        if indices.is_empty() {
            return Err(Error::InvalidDataset("subset must be non-empty".into()));
        }
        let mut coords = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            coords.extend_from_slice(self.point(i));
        }
        Ok(Dataset {
            dim: self.dim,
            coords,
            weights: self
                .weights
                .as_ref()
                .map(|w| indices.iter().map(|&i| w[i]).collect()),
        })
    }

    /// Column-major copy of the coordinates: entry `t * n + j` is coordinate
    /// `t` of point `j`. Feeds the blocked pairwise kernel.
    pub(crate) fn transposed(&self) -> Vec<f64> {
        let n = self.len();
        let mut out = vec![0.0; n * self.dim];
        for (j, p) in self.points().enumerate() {
            for (t, &c) in p.iter().enumerate() {
                out[t * n + j] = c;
            }
        }
        out
    }
}

/// Ordered, non-empty set of centers in `R^dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct CenterSet {
    dim: usize,
    coords: Vec<f64>,
}

impl CenterSet {
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::EmptyCenters);
        }
        if dim == 0 || !coords.len().is_multiple_of(dim) {
            return Err(Error::InvalidParameter(format!(
                "{} coordinates do not form centers of dimension {dim}",
                coords.len()
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter("non-finite center coordinate".into()));
        }
        Ok(CenterSet { dim, coords })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.first().map(|r| r.as_ref().len()).ok_or(Error::EmptyCenters)?;
        let mut coords = Vec::with_capacity(dim * rows.len());
        for row in rows {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            coords.extend_from_slice(row);
        }
        CenterSet::new(dim, coords)
    }

    pub fn from_line(values: &[f64]) -> Result<Self> {
        CenterSet::new(1, values.to_vec())
    }

    /// Centers copied from the given data points.
    pub fn from_indices(data: &Dataset, indices: &[usize]) -> Result<Self> {
        let mut coords = Vec::with_capacity(indices.len() * data.dim());
        for &i in indices {
            coords.extend_from_slice(data.point(i));
        }
        CenterSet::new(data.dim(), coords)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn center(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub(crate) fn center_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> std::slice::ChunksExact<'_, f64> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.iter().map(<[f64]>::to_vec).collect()
    }

    /// Replace center `i` by `point`.
    pub fn with_replaced(&self, i: usize, point: &[f64]) -> CenterSet {
        let mut out = self.clone();
        out.center_mut(i).copy_from_slice(point);
        out
    }

    #[cfg(test)]
    pub(crate) fn push(&mut self, point: &[f64]) {
        debug_assert_eq!(point.len(), self.dim);
        self.coords.extend_from_slice(point);
    }

    pub(crate) fn check_dim(&self, dim: usize) -> Result<()> {
        if self.dim != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: self.dim,
            });
        }
        Ok(())
    }
}

/// Squared Euclidean distance.
pub fn sq_dist(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    Ok(sq_dist_unchecked(a, b))
}

/// Squared Euclidean distance, accumulated left to right from `0.0`.
#[inline]
pub fn sq_dist_unchecked(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(0.0, |acc, (x, y)| {
        let diff = x - y;
        acc + diff * diff
    })
}

/// Index and squared distance of the closest center; the lowest index wins ties.
pub fn nearest(x: &[f64], centers: &CenterSet) -> Result<(usize, f64)> {
    centers.check_dim(x.len())?;
    Ok(nearest_unchecked(x, centers))
}

#[inline]
pub(crate) fn nearest_unchecked(x: &[f64], centers: &CenterSet) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centers.iter().enumerate() {
        let d = sq_dist_unchecked(x, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

/// Nearest and second-nearest centers as `(i1, d1, d2)`; `d2` is infinite with one center.
#[inline]
pub(crate) fn nearest_two_unchecked(x: &[f64], centers: &CenterSet) -> (usize, f64, f64) {
    let (mut i1, mut d1, mut d2) = (0, f64::INFINITY, f64::INFINITY);
    for (j, c) in centers.iter().enumerate() {
        let d = sq_dist_unchecked(x, c);
        if d < d1 {
            d2 = d1;
            d1 = d;
            i1 = j;
        } else if d < d2 {
            d2 = d;
        }
    }
    (i1, d1, d2)
}

/// Nearest center for every point, computed in parallel.
pub fn assign(data: &Dataset, centers: &CenterSet) -> Result<Vec<(usize, f64)>> {
    centers.check_dim(data.dim())?;
    Ok(assign_unchecked(data, centers))
}

pub(crate) fn assign_unchecked(data: &Dataset, centers: &CenterSet) -> Vec<(usize, f64)> {
    data.coords()
        .par_chunks_exact(data.dim())
        .map(|p| nearest_unchecked(p, centers))
        .collect()
}

pub(crate) const BLOCK: usize = 512;

/// Squared distances from `x` to every point of a transposed dataset, delivered
/// in blocks of up to [`BLOCK`] consecutive indices as `(first_index, dists)`.
///
/// Each distance accumulates coordinates in the same order as
/// [`sq_dist_unchecked`], so the values are bit-identical to it.
pub(crate) fn for_each_distance_block<F>(x: &[f64], transposed: &[f64], n: usize, mut f: F)
where
    F: FnMut(usize, &[f64]),
{
    let mut acc = [0.0f64; BLOCK];
    let mut start = 0;
    while start < n {
        let len = BLOCK.min(n - start);
        let acc = &mut acc[..len];
        acc.fill(0.0);
        for (t, &xt) in x.iter().enumerate() {
            let col = &transposed[t * n + start..t * n + start + len];
            for (a, &c) in acc.iter_mut().zip(col) {
                let diff = xt - c;
                *a += diff * diff;
            }
        }
        f(start, acc);
        start += len;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sq_dist_examples() {
        assert_eq!(sq_dist(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 25.0);
        assert_eq!(sq_dist(&[1.5, -2.0], &[1.5, -2.0]).unwrap(), 0.0);
        assert_eq!(sq_dist(&[1.0, 2.0, 3.0], &[4.0, 6.0, 3.0]).unwrap(), 25.0);
    }

    #[test]
    fn sq_dist_dimension_mismatch() {
        assert!(matches!(
            sq_dist(&[0.0], &[0.0, 1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn nearest_examples() {
        let c = CenterSet::from_rows(&[[1.0, 0.0], [0.0, 1.0]]).unwrap();
        assert_eq!(nearest(&[0.0, 0.0], &c).unwrap(), (0, 1.0));
        let c = CenterSet::from_rows(&[[0.0, 0.0], [4.0, 0.0]]).unwrap();
        assert_eq!(nearest(&[5.0, 0.0], &c).unwrap(), (1, 1.0));
        let c = CenterSet::from_rows(&[[0.0, 0.0], [3.0, 3.0]]).unwrap();
        assert_eq!(nearest(&[2.0, 2.0], &c).unwrap(), (1, 2.0));
    }

    #[test]
    fn empty_center_set_rejected() {
        assert!(matches!(CenterSet::new(2, vec![]), Err(Error::EmptyCenters)));
        let rows: [[f64; 2]; 0] = [];
        assert!(matches!(CenterSet::from_rows(&rows), Err(Error::EmptyCenters)));
    }

    #[test]
    fn dataset_validation() {
        assert!(Dataset::new(2, vec![]).is_err());
        assert!(Dataset::new(2, vec![1.0, 2.0, 3.0]).is_err());
        assert!(Dataset::new(1, vec![f64::NAN]).is_err());
        assert!(Dataset::from_rows(&[vec![1.0, 2.0], vec![1.0]]).is_err());
        let d = Dataset::from_line(&[1.0, 2.0]).unwrap();
        assert!(d.clone().with_weights(vec![1.0, 0.0]).is_err());
        assert!(d.clone().with_weights(vec![1.0]).is_err());
        let w = d.with_weights(vec![2.0, 3.0]).unwrap();
        assert_eq!(w.total_weight(), 5.0);
    }

    #[test]
    fn subset_keeps_weights() {
        let d = Dataset::from_line(&[1.0, 2.0, 3.0])
            .unwrap()
            .with_weights(vec![1.0, 2.0, 3.0])
            .unwrap();
        let s = d.subset(&[2, 0]).unwrap();
        assert_eq!(s.coords(), &[3.0, 1.0]);
        assert_eq!(s.weights().unwrap(), &[3.0, 1.0]);
    }

    proptest! {
        #[test]
        fn approximate_triangle_inequality(
            pts in prop::collection::vec(prop::collection::vec(-1e3f64..1e3, 3), 3)
        ) {
            let (x, y, z) = (&pts[0], &pts[1], &pts[2]);
            let xz = sq_dist_unchecked(x, z);
            let bound = 2.0 * sq_dist_unchecked(x, y) + 2.0 * sq_dist_unchecked(y, z);
            prop_assert!(xz <= bound * (1.0 + 1e-12) + 1e-9);
        }

        #[test]
        fn symmetric_and_zero_on_identity(
            a in prop::collection::vec(-1e3f64..1e3, 4),
            b in prop::collection::vec(-1e3f64..1e3, 4),
        ) {
            prop_assert_eq!(sq_dist_unchecked(&a, &b), sq_dist_unchecked(&b, &a));
            prop_assert_eq!(sq_dist_unchecked(&a, &a), 0.0);
            if a != b {
                prop_assert!(sq_dist_unchecked(&a, &b) > 0.0);
            }
        }

        #[test]
        fn blocked_kernel_is_bit_identical(
            rows in prop::collection::vec(prop::collection::vec(-50f64..50.0, 3), 1..700)
        ) {
            let data = Dataset::from_rows(&rows).unwrap();
            let t = data.transposed();
            let x = data.point(0);
            let mut seen = 0;
            for_each_distance_block(x, &t, data.len(), |start, dists| {
                for (o, &d) in dists.iter().enumerate() {
                    assert_eq!(d.to_bits(), sq_dist_unchecked(x, data.point(start + o)).to_bits());
                }
                seen += dists.len();
            });
            prop_assert_eq!(seen, data.len());
        }
    }
}
