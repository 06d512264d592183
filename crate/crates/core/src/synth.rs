//! Synthetic shapes with analytic normals and crease ground truth.
//!
//! Every shape is sampled on a regular lattice of the given spacing whose
//! points are jittered tangentially by up to `JITTER * spacing`. Lattice
//! points that lie on a crease or a boundary only move along it, so creases
//! stay exactly sampled. Ground truth marks points within `spacing / 2` of an
//! analytic crease.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cloud::{Point3, PointCloud};
use crate::error::{Error, Result};
use crate::labeled::LabeledCloud;

pub const JITTER: f64 = 0.15;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SynthShape {
    /// Square of side `extent` in z = 0. No creases.
    Plane,
    /// Axis-aligned cube of side `extent` centered at the origin.
    Cube,
    /// Closed cylinder along z with diameter and height `extent`.
    Cylinder,
    /// Two rectangular faces of width `extent / 2` meeting at `angle_deg`
    /// along a crease of length `extent` on the y axis; the bisector is +z.
    Wedge { angle_deg: f64 },
}

impl fmt::Display for SynthShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SynthShape::Plane => write!(f, "plane"),
            SynthShape::Cube => write!(f, "cube"),
            SynthShape::Cylinder => write!(f, "cylinder"),
            SynthShape::Wedge { angle_deg } => write!(f, "wedge:{angle_deg}"),
        }
    }
}

impl FromStr for SynthShape {
    type Err = Error;

    /// `plane`, `cube`, `cylinder`, `wedge` (90°) or `wedge:<degrees>`.
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        match lower.as_str() {
            "plane" => Ok(SynthShape::Plane),
            "cube" => Ok(SynthShape::Cube),
            "cylinder" => Ok(SynthShape::Cylinder),
            "wedge" => Ok(SynthShape::Wedge { angle_deg: 90.0 }),
            other => match other.strip_prefix("wedge:") {
                Some(a) => a
                    .parse()
                    .map(|angle_deg| SynthShape::Wedge { angle_deg })
                    .map_err(|_| Error::param(format!("bad wedge angle {a:?}"))),
                None => Err(Error::param(format!("unknown shape {s:?}"))),
            },
        }
    }
}

impl SynthShape {
    /// Distance from `p` to the nearest analytic crease of the shape at the
    /// given extent; infinite for the plane.
    pub fn crease_distance(&self, p: &Point3, extent: f64) -> f64 {
        let half = extent / 2.0;
        match *self {
            SynthShape::Plane => f64::INFINITY,
            SynthShape::Cube => {
                let mut best = f64::INFINITY;
                for axis in 0..3 {
                    let (a, b) = ((axis + 1) % 3, (axis + 2) % 3);
                    for sa in [-half, half] {
                        for sb in [-half, half] {
                            let mut lo = Vector3::zeros();
                            lo[a] = sa;
                            lo[b] = sb;
                            lo[axis] = -half;
                            let mut hi = lo;
                            hi[axis] = half;
                            best = best.min(segment_distance(&p.coords, &lo, &hi));
                        }
                    }
                }
                best
            }
            SynthShape::Cylinder => {
                let rho = (p.x * p.x + p.y * p.y).sqrt();
                let dz = p.z.abs() - half;
                ((rho - half).powi(2) + dz * dz).sqrt()
            }
            SynthShape::Wedge { .. } => segment_distance(
                &p.coords,
                &Vector3::new(0.0, -half, 0.0),
                &Vector3::new(0.0, half, 0.0),
            ),
        }
    }
}

fn segment_distance(p: &Vector3<f64>, a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    let ab = b - a;
    let t = ((p - a).dot(&ab) / ab.norm_squared()).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

struct Sampler {
    rng: ChaCha8Rng,
    amplitude: f64,
    points: Vec<Point3>,
    normals: Vec<Vector3<f64>>,
}

impl Sampler {
    /// Offset for a lattice coordinate: jittered only strictly inside `0..=last`.
    fn jitter(&mut self, index: usize, last: usize) -> f64 {
        if index == 0 || index == last {
            0.0
        } else {
            self.rng.random_range(-self.amplitude..=self.amplitude)
        }
    }

    fn push(&mut self, p: Point3, n: Vector3<f64>) {
        self.points.push(p);
        self.normals.push(n.normalize());
    }
}

fn steps(length: f64, spacing: f64) -> usize {
    ((length / spacing).round() as usize).max(1)
}

pub fn synth(shape: SynthShape, spacing: f64, extent: f64, seed: u64) -> Result<LabeledCloud> {
    if !(spacing > 0.0) || !spacing.is_finite() {
        return Err(Error::param(format!("spacing must be positive, got {spacing}")));
    }
    if !(extent > spacing) || !extent.is_finite() {
        return Err(Error::param(format!(
            "extent {extent} must exceed spacing {spacing}"
        )));
    }
    let mut s = Sampler {
        rng: ChaCha8Rng::seed_from_u64(seed),
        amplitude: JITTER * spacing,
        points: Vec::new(),
        normals: Vec::new(),
    };
    let half = extent / 2.0;
    match shape {
        SynthShape::Plane => {
            let n = steps(extent, spacing);
            let h = extent / n as f64;
            for a in 0..=n {
                for b in 0..=n {
                    let x = -half + a as f64 * h + s.jitter(a, n);
                    let y = -half + b as f64 * h + s.jitter(b, n);
                    s.push(Point3::new(x, y, 0.0), Vector3::z());
                }
            }
        }
        SynthShape::Cube => {
            let n = steps(extent, spacing);
            let h = extent / n as f64;
            for a in 0..=n {
                for b in 0..=n {
                    for c in 0..=n {
                        let idx = [a, b, c];
                        if !idx.iter().any(|&v| v == 0 || v == n) {
                            continue;
                        }
                        let mut p = Vector3::zeros();
                        let mut normal = Vector3::zeros();
                        for axis in 0..3 {
                            p[axis] = -half + idx[axis] as f64 * h + s.jitter(idx[axis], n);
                            if idx[axis] == 0 {
                                normal[axis] = -1.0;
                            } else if idx[axis] == n {
                                normal[axis] = 1.0;
                            }
                        }
                        s.push(Point3::from(p), normal);
                    }
                }
            }
        }
        SynthShape::Cylinder => {
            let radius = half;
            let around = steps(2.0 * PI * radius, spacing).max(3);
            let tall = steps(extent, spacing);
            let dz = extent / tall as f64;
            let dtheta = 2.0 * PI / around as f64;
            let angular_amp = s.amplitude / radius;
            for k in 0..=tall {
                for a in 0..around {
                    let theta = a as f64 * dtheta + s.rng.random_range(-angular_amp..=angular_amp);
                    let z = -half + k as f64 * dz + s.jitter(k, tall);
                    let radial = Vector3::new(theta.cos(), theta.sin(), 0.0);
                    let cap = if k == 0 {
                        -Vector3::z()
                    } else if k == tall {
                        Vector3::z()
                    } else {
                        Vector3::zeros()
                    };
                    s.push(Point3::new(radius * radial.x, radius * radial.y, z), radial + cap);
                }
            }
            let n = steps(extent, spacing);
            let h = extent / n as f64;
            for z in [-half, half] {
                for a in 0..=n {
                    for b in 0..=n {
                        let x = -half + a as f64 * h + s.jitter(a, n);
                        let y = -half + b as f64 * h + s.jitter(b, n);
                        if (x * x + y * y).sqrt() <= radius - 0.75 * spacing {
                            s.push(Point3::new(x, y, z), Vector3::new(0.0, 0.0, z.signum()));
                        }
                    }
                }
            }
        }
        SynthShape::Wedge { angle_deg } => {
            if !(angle_deg > 0.0 && angle_deg < 180.0) {
                return Err(Error::param(format!(
                    "wedge angle must lie in (0, 180), got {angle_deg}"
                )));
            }
            let half_angle = angle_deg.to_radians() / 2.0;
            let along = steps(extent, spacing);
            let across = steps(half, spacing);
            let h_along = extent / along as f64;
            let h_across = half / across as f64;
            for (side, sign) in [(0, 1.0), (1, -1.0)] {
                let dir = Vector3::new(sign * half_angle.sin(), 0.0, -half_angle.cos());
                let face_normal = Vector3::new(sign * half_angle.cos(), 0.0, half_angle.sin());
                let first = if side == 0 { 0 } else { 1 };
                for m in first..=across {
                    for k in 0..=along {
                        let y = -half + k as f64 * h_along + s.jitter(k, along);
                        let t = m as f64 * h_across + s.jitter(m, across);
                        let normal = if m == 0 { Vector3::z() } else { face_normal };
                        s.push(Point3::from(Vector3::new(0.0, y, 0.0) + dir * t), normal);
                    }
                }
            }
        }
    }

    let ground_truth = s
        .points
        .iter()
        .map(|p| shape.crease_distance(p, extent) <= spacing / 2.0)
        .collect();
    let cloud = PointCloud::with_normals(s.points, s.normals)?;
    Ok(LabeledCloud {
        cloud,
        labels: None,
        segments: None,
        ground_truth: Some(ground_truth),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plane_has_no_ground_truth() {
        let lc = synth(SynthShape::Plane, 0.1, 1.0, 1).unwrap();
        assert_eq!(lc.len(), 121);
        assert!(lc.ground_truth.unwrap().iter().all(|g| !g));
    }

    #[test]
    fn cube_point_count() {
        let lc = synth(SynthShape::Cube, 0.02, 1.0, 1).unwrap();
        assert_eq!(lc.len(), 51 * 51 * 51 - 49 * 49 * 49);
        let gt = lc.ground_truth.unwrap();
        assert_eq!(gt.iter().filter(|&&g| g).count(), 12 * 49 + 8);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(synth(SynthShape::Wedge { angle_deg: 180.0 }, 0.1, 1.0, 0).is_err());
        assert!(synth(SynthShape::Wedge { angle_deg: 0.0 }, 0.1, 1.0, 0).is_err());
        assert!(synth(SynthShape::Plane, 0.0, 1.0, 0).is_err());
        assert!(synth(SynthShape::Plane, 1.0, 1.0, 0).is_err());
    }

    #[test]
    fn shape_names_round_trip() {
        for s in ["plane", "cube", "cylinder", "wedge:175"] {
            let shape: SynthShape = s.parse().unwrap();
            assert_eq!(shape.to_string(), s);
        }
        assert_eq!("wedge".parse::<SynthShape>().unwrap(), SynthShape::Wedge { angle_deg: 90.0 });
        assert!("sphere".parse::<SynthShape>().is_err());
    }

    #[test]
    fn seeds_are_reproducible() {
        let a = synth(SynthShape::Cylinder, 0.05, 1.0, 9).unwrap();
        let b = synth(SynthShape::Cylinder, 0.05, 1.0, 9).unwrap();
        assert_eq!(a.cloud.points(), b.cloud.points());
        let c = synth(SynthShape::Cylinder, 0.05, 1.0, 10).unwrap();
        assert_ne!(a.cloud.points(), c.cloud.points());
    }
}
