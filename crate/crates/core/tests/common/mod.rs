#![allow(dead_code)]

use nalgebra::{Isometry3, Translation3, UnitQuaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rwodsn::{Point3, PointCloud};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_points(n: usize, seed: u64) -> Vec<Point3> {
    let mut rng = rng(seed);
    (0..n)
        .map(|_| Point3::new(rng.random(), rng.random(), rng.random()))
        .collect()
}

/// Jittered square grid in z = 0 with +z normals, `n` points per side.
pub fn plane(n: usize, h: f64, seed: u64) -> PointCloud {
    let mut rng = rng(seed);
    let mut pts = Vec::with_capacity(n * n);
    for a in 0..n {
        for b in 0..n {
            let jx: f64 = rng.random_range(-0.15..0.15);
            let jy: f64 = rng.random_range(-0.15..0.15);
            pts.push(Point3::new((a as f64 + jx) * h, (b as f64 + jy) * h, 0.0));
        }
    }
    let normals = vec![Vector3::z(); pts.len()];
    PointCloud::with_normals(pts, normals).unwrap()
}

pub fn random_isometry(seed: u64) -> Isometry3<f64> {
    let mut rng = rng(seed);
    let axis = Vector3::new(
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
    );
    let angle = rng.random_range(-3.0..3.0);
    let rotation = UnitQuaternion::from_scaled_axis(axis.normalize() * angle);
    let t = Vector3::new(
        rng.random_range(-5.0..5.0),
        rng.random_range(-5.0..5.0),
        rng.random_range(-5.0..5.0),
    );
    Isometry3::from_parts(Translation3::from(t), rotation)
}

/// All-pairs oracle: the k nearest other points, sorted by (distance, index).
pub fn brute_knn(points: &[Point3], q: usize, k: usize) -> Vec<(usize, f64)> {
    let mut all: Vec<(usize, f64)> = points
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != q)
        .map(|(j, p)| (j, (p - points[q]).norm()))
        .collect();
    all.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    all.truncate(k);
    all
}

pub fn brute_ball(points: &[Point3], q: usize, radius: f64) -> Vec<usize> {
    points
        .iter()
        .enumerate()
        .filter(|&(j, p)| j != q && (p - points[q]).norm() <= radius)
        .map(|(j, _)| j)
        .collect()
}

pub fn brute_density(points: &[Point3], q: usize, k: usize) -> f64 {
    let mut d: Vec<f64> = points
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != q)
        .map(|(_, p)| (p - points[q]).norm())
        .collect();
    d.sort_by(|a, b| a.total_cmp(b));
    d[..k].iter().sum::<f64>() / k as f64
}

pub fn brute_hausdorff(a: &[Point3], b: &[Point3]) -> f64 {
    let directed = |x: &[Point3], y: &[Point3]| {
        x.iter()
            .map(|p| y.iter().map(|q| (p - q).norm()).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    directed(a, b).max(directed(b, a))
}

/// Distance to the nearest of the 12 edges of the axis-aligned cube of side
/// `2 * half` centered at the origin.
pub fn cube_edge_distance(p: &Point3, half: f64) -> f64 {
    let c = [p.x.abs(), p.y.abs(), p.z.abs()];
    (0..3)
        .map(|a| {
            let (b, d) = ((a + 1) % 3, (a + 2) % 3);
            let along = (c[a] - half).max(0.0);
            ((c[b] - half).powi(2) + (c[d] - half).powi(2) + along * along).sqrt()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Face of the centered cube a surface point lies on, as `axis * 2 + (sign > 0)`.
pub fn cube_face(p: &Point3) -> usize {
    let c = [p.x, p.y, p.z];
    let axis = (0..3)
        .max_by(|&a, &b| c[a].abs().total_cmp(&c[b].abs()))
        .unwrap();
    axis * 2 + usize::from(c[axis] > 0.0)
}

/// Feature where a point is within `band` of a cube edge, smooth elsewhere.
pub fn cube_band_labels(cloud: &PointCloud, half: f64, band: f64) -> Vec<rwodsn::FeatureLabel> {
    cloud
        .points()
        .iter()
        .map(|p| {
            if cube_edge_distance(p, half) <= band {
                rwodsn::FeatureLabel::Feature
            } else {
                rwodsn::FeatureLabel::NonFeatureSmooth
            }
        })
        .collect()
}

/// A smooth height field z = 0.1 sin(4x) cos(3y) on a jittered 50 x 50 grid.
pub fn bumpy_cloud(seed: u64) -> PointCloud {
    let mut rng = rng(seed);
    let mut pts = Vec::new();
    let mut normals = Vec::new();
    for a in 0..50 {
        for b in 0..50 {
            let x = (a as f64 + rng.random_range(-0.2..0.2)) * 0.02;
            let y = (b as f64 + rng.random_range(-0.2..0.2)) * 0.02;
            let z = 0.1 * (4.0 * x).sin() * (3.0 * y).cos();
            let n = Vector3::new(-0.4 * (4.0 * x).cos() * (3.0 * y).cos(), 0.3 * (4.0 * x).sin() * (3.0 * y).sin(), 1.0);
            pts.push(Point3::new(x, y, z));
            normals.push(n);
        }
    }
    PointCloud::with_normals(pts, normals).unwrap()
}
