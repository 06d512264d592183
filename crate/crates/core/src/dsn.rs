//! Disk sampling neighborhood descriptor.
//!
//! Around a target point `p` with normal `n`, `N` concentric circles of radii
//! `r, 2r, .., N r` are laid in the plane through `p` orthogonal to `n`, where
//! `r` is the local sampling density. Each circle carries `C = 360 / phi`
//! sample centers. Neighbors inside the ball of radius `(N + 1) r` are
//! projected onto the plane and binned to the nearest center within `r`; each
//! non-empty bin contributes the 3D centroid of its members as a grid vertex.
//!
//! Grid rows are disks (row 0 innermost), columns are angular sectors with
//! wraparound. Per-vertex heights above the plane (`d_r`) and their row and
//! column differences become the edge weights used by the walker.

use std::fmt::Write as _;

use nalgebra::{Point2, Unit, UnitQuaternion, Vector3};

use crate::cloud::{DensityEstimate, Point3, PointCloud, UnitVector3};
use crate::error::{Error, Result};
use crate::params::DsnParams;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Clone> Grid<T> {
    pub fn filled(rows: usize, cols: usize, value: T) -> Self {
        Grid {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }
}

impl<T> Grid<T> {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &T {
        &self.data[i * self.cols + j]
    }

    pub fn get_mut(&mut self, i: usize, j: usize) -> &mut T {
        &mut self.data[i * self.cols + j]
    }

    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize), &T)> {
        let cols = self.cols;
        self.data
            .iter()
            .enumerate()
            .map(move |(k, v)| ((k / cols, k % cols), v))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DsnVertex {
    Empty,
    Occupied {
        centroid: Point3,
        /// Unsigned distance of the centroid to the disk plane.
        d_r: f64,
        /// Height difference to the vertex one row in (or to the target for
        /// row 0). `None` when that inner vertex is empty.
        d_c: Option<f64>,
        member_count: usize,
    },
}

impl DsnVertex {
    pub fn is_occupied(&self) -> bool {
        matches!(self, DsnVertex::Occupied { .. })
    }

    pub fn centroid(&self) -> Option<Point3> {
        match self {
            DsnVertex::Occupied { centroid, .. } => Some(*centroid),
            DsnVertex::Empty => None,
        }
    }

    pub fn d_r(&self) -> Option<f64> {
        match self {
            DsnVertex::Occupied { d_r, .. } => Some(*d_r),
            DsnVertex::Empty => None,
        }
    }

    pub fn d_c(&self) -> Option<f64> {
        match self {
            DsnVertex::Occupied { d_c, .. } => *d_c,
            DsnVertex::Empty => None,
        }
    }

    pub fn member_count(&self) -> usize {
        match self {
            DsnVertex::Occupied { member_count, .. } => *member_count,
            DsnVertex::Empty => 0,
        }
    }
}

/// Orthonormal frame of the disk plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    pub normal: UnitVector3,
    pub in_plane_axis: UnitVector3,
}

impl Frame {
    /// Uses the projection of the coordinate axis least aligned with `normal`.
    pub fn canonical(normal: UnitVector3) -> Self {
        let n = normal.as_ref();
        let axis = (0..3)
            .min_by(|&a, &b| n[a].abs().total_cmp(&n[b].abs()))
            .unwrap_or(0);
        let mut e = Vector3::zeros();
        e[axis] = 1.0;
        Self::with_axis(normal, e).expect("least aligned axis is never parallel to a unit normal")
    }

    /// Projects `axis` onto the plane orthogonal to `normal`.
    pub fn with_axis(normal: UnitVector3, axis: Vector3<f64>) -> Result<Self> {
        let projected = axis - normal.as_ref() * normal.dot(&axis);
        let len = projected.norm();
        if !(len > 1e-12) {
            return Err(Error::param("in-plane axis is parallel to the normal"));
        }
        Ok(Frame {
            normal,
            in_plane_axis: Unit::new_unchecked(projected / len),
        })
    }

    pub fn second_axis(&self) -> Vector3<f64> {
        self.normal.cross(&self.in_plane_axis)
    }

    /// Rotates the in-plane axis about the normal.
    pub fn rotated(&self, angle_rad: f64) -> Self {
        let q = UnitQuaternion::from_axis_angle(&self.normal, angle_rad);
        Frame {
            normal: self.normal,
            in_plane_axis: Unit::new_normalize(q * self.in_plane_axis.into_inner()),
        }
    }
}

/// Sample centers of every bin for one sampling radius.
#[derive(Debug, Clone)]
pub struct BinLayout {
    r: f64,
    rows: usize,
    cols: usize,
    centers: Vec<Point2<f64>>,
}

impl BinLayout {
    pub fn new(params: &DsnParams, r: f64) -> Result<Self> {
        let cols = params.columns()?;
        let rows = params.n_disks;
        let step = params.phi_deg.to_radians();
        let mut centers = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            let radius = (i + 1) as f64 * r;
            for j in 0..cols {
                let t = j as f64 * step;
                centers.push(Point2::new(radius * t.cos(), radius * t.sin()));
            }
        }
        Ok(BinLayout {
            r,
            rows,
            cols,
            centers,
        })
    }

    pub fn center(&self, i: usize, j: usize) -> Point2<f64> {
        self.centers[i * self.cols + j]
    }

    /// Nearest center within `r` of `q`; ties to the smaller row, then column.
    pub fn locate(&self, q: &Point2<f64>) -> Option<(usize, usize)> {
        let rho = q.coords.norm();
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..self.rows {
            let ring = (i + 1) as f64 * self.r;
            if (rho - ring).abs() > self.r {
                continue;
            }
            for j in 0..self.cols {
                let d = (q - self.centers[i * self.cols + j]).norm();
                if d <= self.r && best.is_none_or(|(bd, _, _)| d < bd) {
                    best = Some((d, i, j));
                }
            }
        }
        best.map(|(_, i, j)| (i, j))
    }
}

/// Bin of an in-plane point, or `None` when no center lies within `r`.
pub fn bin_of(projected: &Point2<f64>, params: &DsnParams, r: f64) -> Result<Option<(usize, usize)>> {
    Ok(BinLayout::new(params, r)?.locate(projected))
}

#[derive(Debug, Clone)]
pub struct DsnDescriptor {
    pub target_id: usize,
    pub grid: Grid<DsnVertex>,
    /// `|d_r(i,j) - d_r(i,j-1)|`, column index modulo C.
    pub row_vector: Grid<Option<f64>>,
    /// Row 0: `d_r(0,j)`; otherwise `|d_c(i,j) - d_c(i-1,j)|`.
    pub col_vector: Grid<Option<f64>>,
    pub density: DensityEstimate,
    pub frame: Frame,
    members: Grid<Vec<usize>>,
}

impl DsnDescriptor {
    pub fn rows(&self) -> usize {
        self.grid.rows()
    }

    pub fn cols(&self) -> usize {
        self.grid.cols()
    }

    pub fn vertex(&self, i: usize, j: usize) -> &DsnVertex {
        self.grid.get(i, j)
    }

    pub fn members(&self, i: usize, j: usize) -> &[usize] {
        self.members.get(i, j)
    }

    pub fn occupied_count(&self) -> usize {
        self.grid.iter().filter(|(_, v)| v.is_occupied()).count()
    }

    /// Plain-text grid, one line per disk; cells are `d_r:member_count` or `-`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for i in 0..self.rows() {
            let cells: Vec<String> = (0..self.cols())
                .map(|j| match self.vertex(i, j) {
                    DsnVertex::Occupied {
                        d_r, member_count, ..
                    } => format!("{d_r:.6}:{member_count}"),
                    DsnVertex::Empty => "-".to_string(),
                })
                .collect();
            let _ = writeln!(out, "{}", cells.join(" "));
        }
        out
    }
}

/// Builds the descriptor of `target_id` with the canonical in-plane axis.
pub fn build_dsn(cloud: &PointCloud, target_id: usize, params: &DsnParams) -> Result<DsnDescriptor> {
    let normal = target_normal(cloud, target_id)?;
    build_dsn_in_frame(cloud, target_id, params, Frame::canonical(normal))
}

/// Builds the descriptor in a caller-supplied frame. The frame normal must be
/// the target's normal up to sign for the result to be meaningful.
pub fn build_dsn_in_frame(
    cloud: &PointCloud,
    target_id: usize,
    params: &DsnParams,
    frame: Frame,
) -> Result<DsnDescriptor> {
    params.validate()?;
    target_normal(cloud, target_id)?;
    let density = cloud.sampling_density(target_id, params.k_density)?;
    let r = density.value;
    if !(r > 0.0) {
        // every density neighbor coincides with the target
        return Err(Error::EmptyNeighborhood(target_id));
    }
    let layout = BinLayout::new(params, r)?;
    let rows = params.n_disks;
    let cols = layout.cols;

    let ball = cloud.ball_neighbors(target_id, (rows + 1) as f64 * r)?;
    if ball.is_empty() {
        return Err(Error::EmptyNeighborhood(target_id));
    }

    let p = cloud.point(target_id);
    let n = frame.normal.into_inner();
    let u = frame.in_plane_axis.into_inner();
    let v = frame.second_axis();

    let mut sums: Grid<Vector3<f64>> = Grid::filled(rows, cols, Vector3::zeros());
    let mut members: Grid<Vec<usize>> = Grid::filled(rows, cols, Vec::new());
    for j in ball {
        let offset = cloud.point(j) - p;
        let q = Point2::new(offset.dot(&u), offset.dot(&v));
        if let Some((bi, bj)) = layout.locate(&q) {
            *sums.get_mut(bi, bj) += offset;
            members.get_mut(bi, bj).push(j);
        }
    }

    let mut grid = Grid::filled(rows, cols, DsnVertex::Empty);
    for i in 0..rows {
        for j in 0..cols {
            let count = members.get(i, j).len();
            if count == 0 {
                continue;
            }
            let mean = sums.get(i, j) / count as f64;
            *grid.get_mut(i, j) = DsnVertex::Occupied {
                centroid: p + mean,
                d_r: mean.dot(&n).abs(),
                d_c: None,
                member_count: count,
            };
        }
    }

    Ok(DsnDescriptor::assemble(target_id, grid, density, frame, members))
}

impl DsnDescriptor {
    /// Builds a descriptor directly from a grid of vertex heights (`None` for
    /// an empty bin), with the disk plane at z = 0. Centroids sit on the bin
    /// centers lifted to their height; each vertex counts one member.
    pub fn from_heights(heights: &[Vec<Option<f64>>], params: &DsnParams, r: f64) -> Result<Self> {
        params.validate()?;
        let layout = BinLayout::new(params, r)?;
        if heights.len() != layout.rows || heights.iter().any(|row| row.len() != layout.cols) {
            return Err(Error::param(format!(
                "height grid must be {} x {}",
                layout.rows, layout.cols
            )));
        }
        let mut grid = Grid::filled(layout.rows, layout.cols, DsnVertex::Empty);
        for (i, row) in heights.iter().enumerate() {
            for (j, h) in row.iter().enumerate() {
                if let Some(h) = *h {
                    let c = layout.center(i, j);
                    *grid.get_mut(i, j) = DsnVertex::Occupied {
                        centroid: Point3::new(c.x, c.y, h),
                        d_r: h.abs(),
                        d_c: None,
                        member_count: 1,
                    };
                }
            }
        }
        let members = Grid::filled(layout.rows, layout.cols, Vec::new());
        let density = DensityEstimate {
            value: r,
            k_used: params.k_density,
        };
        let frame = Frame::canonical(Vector3::z_axis());
        Ok(Self::assemble(0, grid, density, frame, members))
    }

    fn assemble(
        target_id: usize,
        mut grid: Grid<DsnVertex>,
        density: DensityEstimate,
        frame: Frame,
        members: Grid<Vec<usize>>,
    ) -> Self {
        let (rows, cols) = (grid.rows(), grid.cols());
        for i in 0..rows {
            for j in 0..cols {
                let inner = if i == 0 {
                    Some(0.0)
                } else {
                    grid.get(i - 1, j).d_r()
                };
                if let DsnVertex::Occupied { d_r, d_c, .. } = grid.get_mut(i, j) {
                    *d_c = inner.map(|h| (*d_r - h).abs());
                }
            }
        }

        let mut row_vector = Grid::filled(rows, cols, None);
        let mut col_vector = Grid::filled(rows, cols, None);
        for i in 0..rows {
            for j in 0..cols {
                let left = (j + cols - 1) % cols;
                if let (Some(a), Some(b)) = (grid.get(i, j).d_r(), grid.get(i, left).d_r()) {
                    *row_vector.get_mut(i, j) = Some((a - b).abs());
                }
                *col_vector.get_mut(i, j) = if i == 0 {
                    grid.get(0, j).d_r()
                } else {
                    match (grid.get(i, j).d_c(), grid.get(i - 1, j).d_c()) {
                        (Some(a), Some(b)) => Some((a - b).abs()),
                        _ => None,
                    }
                };
            }
        }

        DsnDescriptor {
            target_id,
            grid,
            row_vector,
            col_vector,
            density,
            frame,
            members,
        }
    }
}

fn target_normal(cloud: &PointCloud, target_id: usize) -> Result<UnitVector3> {
    let normals = cloud
        .normals()
        .ok_or_else(|| Error::param("descriptor construction needs normals"))?;
    normals
        .get(target_id)
        .copied()
        .ok_or_else(|| Error::param(format!("point index {target_id} out of range")))
}
