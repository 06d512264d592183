//! Point storage, neighborhood queries and sampling density.

use nalgebra::{Unit, Vector3};

use crate::error::{Error, Result};
use crate::kdtree::KdTree;

pub type Point3 = nalgebra::Point3<f64>;
pub type UnitVector3 = Unit<Vector3<f64>>;

/// Points with optional per-point unit normals and a spatial index.
///
/// Immutable after construction. Every query borrows the cloud, so a single
/// instance can be shared across worker threads.
#[derive(Debug, Clone)]
pub struct PointCloud {
    points: Vec<Point3>,
    normals: Option<Vec<UnitVector3>>,
    index: KdTree,
}

/// Mean distance from a point to its `k` nearest neighbors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityEstimate {
    pub value: f64,
    pub k_used: usize,
}

/// Equal when points and normals are; the search index is derived state.
impl PartialEq for PointCloud {
    fn eq(&self, other: &Self) -> bool {
        self.points == other.points && self.normals == other.normals
    }
}

impl PointCloud {
    pub fn new(points: Vec<Point3>) -> Result<Self> {
        if let Some(i) = points.iter().position(|p| !p.coords.iter().all(|c| c.is_finite())) {
            return Err(Error::param(format!("point {i} has a non-finite coordinate")));
        }
        let index = KdTree::new(&points);
        Ok(PointCloud {
            points,
            normals: None,
            index,
        })
    }

    pub fn with_normals(points: Vec<Point3>, normals: Vec<Vector3<f64>>) -> Result<Self> {
        let cloud = Self::new(points)?;
        cloud.replace_normals(normals)
    }

    /// Attaches normals, normalizing each one. Zero-length input is rejected.
    pub fn replace_normals(mut self, normals: Vec<Vector3<f64>>) -> Result<Self> {
        if normals.len() != self.points.len() {
            return Err(Error::param(format!(
                "{} normals for {} points",
                normals.len(),
                self.points.len()
            )));
        }
        let mut units = Vec::with_capacity(normals.len());
        for (i, n) in normals.into_iter().enumerate() {
            let norm = n.norm();
            if !norm.is_finite() || norm == 0.0 {
                return Err(Error::param(format!("normal {i} is zero or non-finite")));
            }
            // already unit up to rounding: keep the bits so file round trips are stable
            let n = if (norm - 1.0).abs() <= 4.0 * f64::EPSILON { n } else { n / norm };
            units.push(Unit::new_unchecked(n));
        }
        self.normals = Some(units);
        Ok(self)
    }

    pub fn without_normals(mut self) -> Self {
        self.normals = None;
        self
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    pub fn point(&self, id: usize) -> &Point3 {
        &self.points[id]
    }

    pub fn normals(&self) -> Option<&[UnitVector3]> {
        self.normals.as_deref()
    }

    pub fn has_normals(&self) -> bool {
        self.normals.is_some()
    }

    pub fn index(&self) -> &KdTree {
        &self.index
    }

    /// Returns a new cloud with `f` applied to every point and `g` to every normal.
    pub fn map(
        &self,
        f: impl Fn(&Point3) -> Point3,
        g: impl Fn(&Vector3<f64>) -> Vector3<f64>,
    ) -> Result<Self> {
        let points = self.points.iter().map(f).collect();
        match &self.normals {
            Some(ns) => Self::with_normals(points, ns.iter().map(|n| g(n.as_ref())).collect()),
            None => Self::new(points),
        }
    }

    /// The `k` nearest neighbors of point `query_id`, excluding itself, sorted by
    /// distance with ties going to the smaller index.
    pub fn knn(&self, query_id: usize, k: usize) -> Result<Vec<(usize, f64)>> {
        self.check_id(query_id)?;
        if k == 0 || k >= self.len() {
            return Err(Error::param(format!(
                "k = {k} outside 1..={} for a cloud of {} points",
                self.len().saturating_sub(1),
                self.len()
            )));
        }
        Ok(self.index.nearest(&self.points[query_id], k, Some(query_id)))
    }

    /// Indices `j != query_id` with `|p_j - p| <= radius`, sorted ascending.
    pub fn ball_neighbors(&self, query_id: usize, radius: f64) -> Result<Vec<usize>> {
        self.check_id(query_id)?;
        if !(radius > 0.0) {
            return Err(Error::param(format!("radius must be positive, got {radius}")));
        }
        Ok(self.index.within(&self.points[query_id], radius, Some(query_id)))
    }

    pub fn sampling_density(&self, query_id: usize, k: usize) -> Result<DensityEstimate> {
        if k == 0 {
            return Err(Error::param("density neighborhood k must be at least 1"));
        }
        if self.len() < k + 1 {
            return Err(Error::param(format!(
                "density with k = {k} needs at least {} points, cloud has {}",
                k + 1,
                self.len()
            )));
        }
        let nn = self.knn(query_id, k)?;
        let value = nn.iter().map(|&(_, d)| d).sum::<f64>() / k as f64;
        Ok(DensityEstimate { value, k_used: k })
    }

    /// Mean of the per-point sampling density over the whole cloud.
    pub fn mean_sampling_density(&self, k: usize) -> Result<f64> {
        use rayon::prelude::*;
        let k = k.min(self.len().saturating_sub(1));
        let total: Result<Vec<f64>> = (0..self.len())
            .into_par_iter()
            .map(|i| self.sampling_density(i, k).map(|d| d.value))
            .collect();
        let total = total?;
        Ok(total.iter().sum::<f64>() / total.len() as f64)
    }

    fn check_id(&self, id: usize) -> Result<()> {
        if id >= self.len() {
            return Err(Error::param(format!(
                "point index {id} out of range for {} points",
                self.len()
            )));
        }
        Ok(())
    }
}
