//! Labeling points from the connectivity of their walk graphs.

use rayon::prelude::*;

use crate::cloud::PointCloud;
use crate::dsn::{build_dsn, DsnDescriptor};
use crate::error::{Error, Result};
use crate::params::DsnParams;
use crate::walk::{run_walks, GridEdge, GridNode, WalkGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeatureLabel {
    Feature,
    NonFeatureSmooth,
    NonFeatureNearEdge,
}

impl FeatureLabel {
    pub fn is_feature(self) -> bool {
        self == FeatureLabel::Feature
    }
}

/// Why a point was labeled without running the full pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Degeneracy {
    EmptyNeighborhood,
    EmptyInnerRing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Classification {
    pub label: FeatureLabel,
    pub degenerate: Option<Degeneracy>,
}

/// Longest connected runs per row (circular) and per column (linear), in vertices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunStats {
    pub row_con_max: Vec<usize>,
    pub col_con_max: Vec<usize>,
}

/// Grid cells touching at least one derived-graph edge. Spokes count, the
/// target node itself does not.
pub fn count_non_isolated(graph: &WalkGraph, dsn: &DsnDescriptor) -> usize {
    let (rows, cols) = (graph.rows(), graph.cols());
    let mut touched = vec![false; rows * cols];
    for edge in graph.adjacency() {
        let (a, b) = edge.endpoints(cols);
        for node in [a, b] {
            if let GridNode::Cell(i, j) = node {
                touched[i * cols + j] = true;
            }
        }
    }
    touched
        .iter()
        .enumerate()
        .filter(|&(k, &t)| t && dsn.vertex(k / cols, k % cols).is_occupied())
        .count()
}

/// Smooth-surface test: more than `0.9 * N * C - 1` non-isolated vertices.
pub fn constraint1(non_isolated: usize, params: &DsnParams) -> Result<bool> {
    let c = params.columns()? as f64;
    let threshold = 0.9 * params.n_disks as f64 * c - 1.0;
    Ok(non_isolated as f64 > threshold)
}

fn longest_run(edges: &[bool], occupied: bool, circular: bool) -> usize {
    let n = edges.len();
    if circular && n > 0 && edges.iter().all(|&e| e) {
        return n;
    }
    let mut best = 0usize;
    let mut current = 0usize;
    let passes = if circular { 2 * n } else { n };
    for k in 0..passes {
        if edges[k % n] {
            current += 1;
            best = best.max(current);
        } else {
            current = 0;
        }
    }
    if best > 0 {
        best.min(n) + 1
    } else {
        usize::from(occupied)
    }
}

pub fn run_stats(graph: &WalkGraph, dsn: &DsnDescriptor) -> RunStats {
    let (rows, cols) = (graph.rows(), graph.cols());
    let row_con_max = (0..rows)
        .map(|i| {
            let edges: Vec<bool> = (0..cols).map(|j| graph.connected(GridEdge::Row(i, j))).collect();
            let occupied = (0..cols).any(|j| dsn.vertex(i, j).is_occupied());
            longest_run(&edges, occupied, true)
        })
        .collect();
    let col_con_max = (0..cols)
        .map(|j| {
            let edges: Vec<bool> = (1..rows).map(|i| graph.connected(GridEdge::Col(i, j))).collect();
            let occupied = (0..rows).any(|i| dsn.vertex(i, j).is_occupied());
            longest_run(&edges, occupied, false)
        })
        .collect();
    RunStats {
        row_con_max,
        col_con_max,
    }
}

/// Near-edge test: enough long row runs, or enough long column runs.
pub fn constraint2(stats: &RunStats, params: &DsnParams) -> Result<bool> {
    let c = params.columns()? as f64;
    let n = params.n_disks as f64;
    let long_rows = stats
        .row_con_max
        .iter()
        .filter(|&&run| run as f64 > 0.5 * c - 2.0)
        .count();
    let long_cols = stats
        .col_con_max
        .iter()
        .filter(|&&run| run as f64 > n - 2.0)
        .count();
    Ok(long_rows as f64 >= n - 2.0 || long_cols as f64 >= 0.5 * c - 2.0)
}

/// Applies both constraints to an already computed walk graph.
pub fn label_from_graph(graph: &WalkGraph, dsn: &DsnDescriptor, params: &DsnParams) -> Result<FeatureLabel> {
    if constraint1(count_non_isolated(graph, dsn), params)? {
        return Ok(FeatureLabel::NonFeatureSmooth);
    }
    if constraint2(&run_stats(graph, dsn), params)? {
        return Ok(FeatureLabel::NonFeatureNearEdge);
    }
    Ok(FeatureLabel::Feature)
}

pub fn classify_point(
    cloud: &PointCloud,
    target_id: usize,
    params: &DsnParams,
    seed: u64,
) -> Result<Classification> {
    let degenerate = |kind| {
        Ok(Classification {
            label: FeatureLabel::Feature,
            degenerate: Some(kind),
        })
    };
    if target_id >= cloud.len() {
        return Err(Error::param(format!("point index {target_id} out of range")));
    }
    // too few points to measure a sampling density at all
    if cloud.len() <= params.k_density {
        return degenerate(Degeneracy::EmptyNeighborhood);
    }

    let dsn = match build_dsn(cloud, target_id, params) {
        Ok(d) => d,
        Err(Error::EmptyNeighborhood(_)) => return degenerate(Degeneracy::EmptyNeighborhood),
        Err(e) => return Err(e),
    };
    let graph = match run_walks(&dsn, params, seed) {
        Ok(g) => g,
        Err(Error::DegenerateStart(_)) => return degenerate(Degeneracy::EmptyInnerRing),
        Err(e) => return Err(e),
    };
    Ok(Classification {
        label: label_from_graph(&graph, &dsn, params)?,
        degenerate: None,
    })
}

/// Classifies every point in parallel on the current rayon pool. Each point
/// draws from its own random stream, so the result does not depend on
/// scheduling.
pub fn detect_features_detailed(
    cloud: &PointCloud,
    params: &DsnParams,
    seed: u64,
) -> Result<Vec<Classification>> {
    params.validate()?;
    if cloud.is_empty() {
        return Err(Error::param("cannot detect features on an empty cloud"));
    }
    if !cloud.has_normals() {
        return Err(Error::param("feature detection needs normals"));
    }
    (0..cloud.len())
        .into_par_iter()
        .map(|i| classify_point(cloud, i, params, seed))
        .collect()
}

pub fn detect_features(cloud: &PointCloud, params: &DsnParams, seed: u64) -> Result<Vec<FeatureLabel>> {
    Ok(detect_features_detailed(cloud, params, seed)?
        .into_iter()
        .map(|c| c.label)
        .collect())
}
