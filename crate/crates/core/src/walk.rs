//! Length-constrained random walks over a descriptor grid.
//!
//! Every walk starts at the target node, enters row 0 at the vertex with the
//! smallest spoke weight, and then moves between grid neighbors. A move is
//! admissible only when its edge weight stays within `path_tol_factor * r`
//! of the running mean weight of the walk so far; the walk stops as soon as
//! no admissible move exists. Edge traversals are tallied over all walks and
//! edges visited in at least `connect_fraction` of the walks form the derived
//! graph.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dsn::DsnDescriptor;
use crate::error::{Error, Result};
use crate::params::DsnParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GridNode {
    Target,
    Cell(usize, usize),
}

impl fmt::Display for GridNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GridNode::Target => write!(f, "T"),
            GridNode::Cell(i, j) => write!(f, "({i},{j})"),
        }
    }
}

/// An undirected grid edge in canonical form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GridEdge {
    /// Target to `Cell(0, j)`.
    Spoke(usize),
    /// `Cell(i, j-1)` to `Cell(i, j)`, column arithmetic modulo C.
    Row(usize, usize),
    /// `Cell(i-1, j)` to `Cell(i, j)`, `i >= 1`.
    Col(usize, usize),
}

impl GridEdge {
    /// Canonical edge joining `a` and `b`, or `None` if they are not grid neighbors.
    pub fn between(a: GridNode, b: GridNode, rows: usize, cols: usize) -> Option<GridEdge> {
        use GridNode::*;
        let in_range = |n: GridNode| match n {
            Target => true,
            Cell(i, j) => i < rows && j < cols,
        };
        if !in_range(a) || !in_range(b) {
            return None;
        }
        match (a, b) {
            (Target, Cell(0, j)) | (Cell(0, j), Target) => Some(GridEdge::Spoke(j)),
            (Cell(i1, j1), Cell(i2, j2)) if i1 == i2 => {
                if j2 == (j1 + 1) % cols {
                    Some(GridEdge::Row(i1, j2))
                } else if j1 == (j2 + 1) % cols {
                    Some(GridEdge::Row(i1, j1))
                } else {
                    None
                }
            }
            (Cell(i1, j1), Cell(i2, j2)) if j1 == j2 => {
                if i2 == i1 + 1 {
                    Some(GridEdge::Col(i2, j1))
                } else if i1 == i2 + 1 {
                    Some(GridEdge::Col(i1, j1))
                } else {
                    None
                }
            }
            _ => None,
        }
    }

    pub fn endpoints(&self, cols: usize) -> (GridNode, GridNode) {
        match *self {
            GridEdge::Spoke(j) => (GridNode::Target, GridNode::Cell(0, j)),
            GridEdge::Row(i, j) => (GridNode::Cell(i, (j + cols - 1) % cols), GridNode::Cell(i, j)),
            GridEdge::Col(i, j) => (GridNode::Cell(i - 1, j), GridNode::Cell(i, j)),
        }
    }

    fn id(&self, rows: usize, cols: usize) -> usize {
        match *self {
            GridEdge::Spoke(j) => j,
            GridEdge::Row(i, j) => cols + i * cols + j,
            GridEdge::Col(i, j) => cols + rows * cols + (i - 1) * cols + j,
        }
    }

    fn from_id(id: usize, rows: usize, cols: usize) -> GridEdge {
        if id < cols {
            GridEdge::Spoke(id)
        } else if id < cols + rows * cols {
            let k = id - cols;
            GridEdge::Row(k / cols, k % cols)
        } else {
            let k = id - cols - rows * cols;
            GridEdge::Col(k / cols + 1, k % cols)
        }
    }
}

fn edge_count(rows: usize, cols: usize) -> usize {
    2 * rows * cols
}

/// Weight of a grid edge, `None` when an endpoint bin is empty.
pub fn edge_weight(dsn: &DsnDescriptor, a: GridNode, b: GridNode) -> Result<Option<f64>> {
    let edge = GridEdge::between(a, b, dsn.rows(), dsn.cols())
        .ok_or_else(|| Error::param(format!("{a} and {b} are not grid neighbors")))?;
    Ok(weight_of(dsn, edge))
}

fn weight_of(dsn: &DsnDescriptor, edge: GridEdge) -> Option<f64> {
    match edge {
        GridEdge::Spoke(j) => *dsn.col_vector.get(0, j),
        GridEdge::Row(i, j) => *dsn.row_vector.get(i, j),
        GridEdge::Col(i, j) => *dsn.col_vector.get(i, j),
    }
}

/// Edge visit tallies over all walks plus the derived adjacency.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkGraph {
    rows: usize,
    cols: usize,
    counts: Vec<u32>,
    adjacency: Vec<bool>,
    pub params_used: DsnParams,
    pub seed: u64,
}

impl WalkGraph {
    /// Builds a graph from explicit per-edge counts; adjacency follows the
    /// connect-fraction rule of `params`.
    pub fn from_counts(
        rows: usize,
        cols: usize,
        counts: impl IntoIterator<Item = (GridEdge, u32)>,
        params: &DsnParams,
    ) -> Result<Self> {
        let mut dense = vec![0u32; edge_count(rows, cols)];
        for (edge, c) in counts {
            let (a, b) = edge.endpoints(cols);
            if GridEdge::between(a, b, rows, cols) != Some(edge) {
                return Err(Error::param(format!("{edge:?} is not an edge of a {rows}x{cols} grid")));
            }
            dense[edge.id(rows, cols)] = c;
        }
        let adjacency = derive_graph(&dense, params);
        Ok(WalkGraph {
            rows,
            cols,
            counts: dense,
            adjacency,
            params_used: params.clone(),
            seed: 0,
        })
    }

    /// Graph with exactly the given edges connected (each counted at the threshold).
    pub fn from_adjacency(
        rows: usize,
        cols: usize,
        edges: impl IntoIterator<Item = GridEdge>,
        params: &DsnParams,
    ) -> Result<Self> {
        let t = params.connect_threshold();
        Self::from_counts(rows, cols, edges.into_iter().map(|e| (e, t)), params)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn count(&self, edge: GridEdge) -> u32 {
        self.counts[edge.id(self.rows, self.cols)]
    }

    pub fn count_between(&self, a: GridNode, b: GridNode) -> u32 {
        GridEdge::between(a, b, self.rows, self.cols).map_or(0, |e| self.count(e))
    }

    pub fn connected(&self, edge: GridEdge) -> bool {
        self.adjacency[edge.id(self.rows, self.cols)]
    }

    pub fn connected_between(&self, a: GridNode, b: GridNode) -> bool {
        GridEdge::between(a, b, self.rows, self.cols).is_some_and(|e| self.connected(e))
    }

    /// All edges with a nonzero count, in canonical order.
    pub fn counted_edges(&self) -> impl Iterator<Item = (GridEdge, u32)> + '_ {
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(id, &c)| (GridEdge::from_id(id, self.rows, self.cols), c))
    }

    pub fn adjacency(&self) -> impl Iterator<Item = GridEdge> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .filter(|(_, &a)| a)
            .map(|(id, _)| GridEdge::from_id(id, self.rows, self.cols))
    }

    pub fn total_count(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum()
    }

    pub fn raw_counts(&self) -> &[u32] {
        &self.counts
    }
}

/// Edges whose count reaches `ceil(walk_repeats * connect_fraction)`.
pub fn derive_graph(counts: &[u32], params: &DsnParams) -> Vec<bool> {
    let threshold = params.connect_threshold();
    counts.iter().map(|&c| c >= threshold).collect()
}

/// Node sequence of every walk, target first.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WalkTrace {
    pub walks: Vec<Vec<GridNode>>,
}

impl fmt::Display for WalkTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (s, walk) in self.walks.iter().enumerate() {
            write!(f, "walk {s}:")?;
            for node in walk {
                write!(f, " {node}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

pub fn run_walks(dsn: &DsnDescriptor, params: &DsnParams, seed: u64) -> Result<WalkGraph> {
    walk_impl(dsn, params, seed, None)
}

pub fn run_walks_traced(
    dsn: &DsnDescriptor,
    params: &DsnParams,
    seed: u64,
) -> Result<(WalkGraph, WalkTrace)> {
    let mut trace = WalkTrace::default();
    let graph = walk_impl(dsn, params, seed, Some(&mut trace))?;
    Ok((graph, trace))
}

/// Stream-separated generator: the same seed gives independent streams per target.
pub fn walk_rng(seed: u64, target_id: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(target_id as u64);
    rng
}

#[derive(Clone, Copy)]
struct Step {
    to: usize,
    edge: usize,
    weight: f64,
}

fn walk_impl(
    dsn: &DsnDescriptor,
    params: &DsnParams,
    seed: u64,
    mut trace: Option<&mut WalkTrace>,
) -> Result<WalkGraph> {
    params.validate()?;
    let (rows, cols) = (dsn.rows(), dsn.cols());
    if params.n_disks != rows || params.columns()? != cols {
        return Err(Error::param("walk parameters do not match the descriptor grid"));
    }

    // node 0 is the target, cell (i, j) is 1 + i * cols + j
    let node_of = |n: GridNode| match n {
        GridNode::Target => 0,
        GridNode::Cell(i, j) => 1 + i * cols + j,
    };
    let grid_node = |id: usize| {
        if id == 0 {
            GridNode::Target
        } else {
            GridNode::Cell((id - 1) / cols, (id - 1) % cols)
        }
    };
    let mut moves: Vec<Vec<Step>> = vec![Vec::new(); 1 + rows * cols];
    for id in 0..edge_count(rows, cols) {
        let edge = GridEdge::from_id(id, rows, cols);
        if let Some(weight) = weight_of(dsn, edge) {
            let (a, b) = edge.endpoints(cols);
            let (a, b) = (node_of(a), node_of(b));
            moves[a].push(Step { to: b, edge: id, weight });
            moves[b].push(Step { to: a, edge: id, weight });
        }
    }
    // fixed neighbor order so a seed reproduces the same trace
    for list in &mut moves {
        list.sort_by_key(|s| s.to);
    }

    let start = (0..cols)
        .filter_map(|j| dsn.col_vector.get(0, j).map(|w| (j, w)))
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
        .ok_or(Error::DegenerateStart(dsn.target_id))?;
    let (start_col, start_weight) = start;
    let start_edge = GridEdge::Spoke(start_col).id(rows, cols);
    let start_node = node_of(GridNode::Cell(0, start_col));

    let tolerance = params.path_tol_factor * dsn.density.value;
    let mut rng = walk_rng(seed, dsn.target_id);
    let mut counts = vec![0u32; edge_count(rows, cols)];
    let mut candidates: Vec<Step> = Vec::with_capacity(8);

    for _ in 0..params.walk_repeats {
        counts[start_edge] += 1;
        let mut current = start_node;
        let mut sum = start_weight;
        let mut num = 1usize;
        let mut mean = start_weight;
        let mut path = trace.as_ref().map(|_| vec![GridNode::Target, grid_node(current)]);

        for _ in 0..params.walk_steps {
            candidates.clear();
            candidates.extend(
                moves[current]
                    .iter()
                    .filter(|s| (s.weight - mean).abs() <= tolerance),
            );
            if candidates.is_empty() {
                break;
            }
            let step = candidates[rng.random_range(0..candidates.len())];
            counts[step.edge] += 1;
            current = step.to;
            num += 1;
            sum += step.weight;
            mean = sum / num as f64;
            if let Some(p) = path.as_mut() {
                p.push(grid_node(current));
            }
        }
        if let (Some(t), Some(p)) = (trace.as_deref_mut(), path) {
            t.walks.push(p);
        }
    }

    let adjacency = derive_graph(&counts, params);
    Ok(WalkGraph {
        rows,
        cols,
        counts,
        adjacency,
        params_used: params.clone(),
        seed,
    })
}
