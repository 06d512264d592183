//! PCA normal estimation with minimum-spanning-tree sign propagation.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use rayon::prelude::*;

use crate::cloud::PointCloud;
use crate::error::{Error, Result};

pub const DEFAULT_NORMAL_K: usize = 10;

#[derive(Debug, Clone)]
pub struct NormalEstimation {
    pub cloud: PointCloud,
    /// Points whose neighborhood had zero spread; their normal is +z.
    pub degenerate: Vec<usize>,
}

/// Estimates a unit normal per point from the covariance of the point and its
/// `k` nearest neighbors, then orients the normals consistently by walking a
/// minimum spanning tree of the kNN graph from the highest point.
pub fn estimate_normals(cloud: &PointCloud, k: usize) -> Result<NormalEstimation> {
    if k < 3 {
        return Err(Error::param(format!("normal estimation needs k >= 3, got {k}")));
    }
    if cloud.len() < k + 1 {
        return Err(Error::param(format!(
            "normal estimation with k = {k} needs at least {} points, cloud has {}",
            k + 1,
            cloud.len()
        )));
    }

    let per_point: Result<Vec<(Vector3<f64>, bool, Vec<usize>)>> = (0..cloud.len())
        .into_par_iter()
        .map(|i| {
            let nn = cloud.knn(i, k)?;
            let ids: Vec<usize> = nn.iter().map(|&(j, _)| j).collect();
            let (normal, degenerate) = pca_normal(cloud, i, &ids);
            Ok((normal, degenerate, ids))
        })
        .collect();
    let per_point = per_point?;

    let mut normals: Vec<Vector3<f64>> = per_point.iter().map(|p| p.0).collect();
    let degenerate: Vec<usize> = per_point
        .iter()
        .enumerate()
        .filter(|(_, p)| p.1)
        .map(|(i, _)| i)
        .collect();
    let neighbors: Vec<Vec<usize>> = per_point.into_iter().map(|p| p.2).collect();

    orient_by_mst(cloud, &neighbors, &mut normals);

    let cloud = cloud.clone().replace_normals(normals)?;
    Ok(NormalEstimation { cloud, degenerate })
}

fn pca_normal(cloud: &PointCloud, id: usize, neighbors: &[usize]) -> (Vector3<f64>, bool) {
    let members = std::iter::once(id).chain(neighbors.iter().copied());
    let count = (neighbors.len() + 1) as f64;
    let centroid = members
        .clone()
        .fold(Vector3::zeros(), |acc, j| acc + cloud.point(j).coords)
        / count;
    let mut cov = Matrix3::zeros();
    for j in members {
        let d = cloud.point(j).coords - centroid;
        cov += d * d.transpose();
    }
    cov /= count;

    let scale = centroid.amax().max(1.0);
    let floor = (f64::EPSILON * scale).powi(2) * count;
    if cov.trace() <= floor {
        return (Vector3::z(), true);
    }

    let eig = SymmetricEigen::new(cov);
    let smallest = eig.eigenvalues.imin();
    let n = eig.eigenvectors.column(smallest).into_owned();
    (n.normalize(), false)
}

#[derive(PartialEq)]
struct Frontier {
    cost: f64,
    node: usize,
    parent: usize,
}

impl Eq for Frontier {}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Frontier {
    // reversed for a min-heap
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then(other.node.cmp(&self.node))
            .then(other.parent.cmp(&self.parent))
    }
}

fn orient_by_mst(cloud: &PointCloud, knn: &[Vec<usize>], normals: &mut [Vector3<f64>]) {
    let n = cloud.len();
    let mut adjacency: Vec<Vec<usize>> = knn.to_vec();
    for (i, list) in knn.iter().enumerate() {
        for &j in list {
            adjacency[j].push(i);
        }
    }
    for list in &mut adjacency {
        list.sort_unstable();
        list.dedup();
    }

    // roots in descending z, ties to the smaller index
    let mut roots: Vec<usize> = (0..n).collect();
    roots.sort_by(|&a, &b| cloud.point(b).z.total_cmp(&cloud.point(a).z).then(a.cmp(&b)));

    let mut visited = vec![false; n];
    let mut heap = BinaryHeap::new();
    for root in roots {
        if visited[root] {
            continue;
        }
        if normals[root].z < 0.0 {
            normals[root] = -normals[root];
        }
        visited[root] = true;
        push_edges(root, &adjacency, normals, &visited, &mut heap);
        while let Some(Frontier { node, parent, .. }) = heap.pop() {
            if visited[node] {
                continue;
            }
            visited[node] = true;
            if normals[node].dot(&normals[parent]) < 0.0 {
                normals[node] = -normals[node];
            }
            push_edges(node, &adjacency, normals, &visited, &mut heap);
        }
    }
}

fn push_edges(
    from: usize,
    adjacency: &[Vec<usize>],
    normals: &[Vector3<f64>],
    visited: &[bool],
    heap: &mut BinaryHeap<Frontier>,
) {
    for &to in &adjacency[from] {
        if !visited[to] {
            heap.push(Frontier {
                cost: 1.0 - normals[from].dot(&normals[to]).abs(),
                node: to,
                parent: from,
            });
        }
    }
}
