//! Robustness perturbations: Gaussian jitter and random subsampling.

use nalgebra::Vector3;
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::labeled::LabeledCloud;

/// Adds isotropic zero-mean Gaussian noise with standard deviation
/// `sigma_factor` times the cloud-mean sampling density. Normals are dropped
/// since they no longer describe the surface; per-point attributes are kept.
pub fn add_noise(
    labeled: &LabeledCloud,
    sigma_factor: f64,
    k_density: usize,
    seed: u64,
) -> Result<LabeledCloud> {
    if !(sigma_factor >= 0.0) || !sigma_factor.is_finite() {
        return Err(Error::param(format!(
            "noise factor must be non-negative, got {sigma_factor}"
        )));
    }
    if sigma_factor == 0.0 {
        return Ok(labeled.clone());
    }
    let sigma = sigma_factor * labeled.cloud.mean_sampling_density(k_density)?;
    let offsets = gaussian_offsets(labeled.len(), sigma, seed)?;
    let points = labeled
        .cloud
        .points()
        .iter()
        .zip(&offsets)
        .map(|(p, o)| p + o)
        .collect();
    Ok(LabeledCloud {
        cloud: PointCloud::new(points)?,
        ..labeled.clone()
    })
}

/// The per-point offsets `add_noise` applies for a given seed.
pub fn gaussian_offsets(n: usize, sigma: f64, seed: u64) -> Result<Vec<Vector3<f64>>> {
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::param(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n)
        .map(|_| {
            Vector3::new(
                normal.sample(&mut rng),
                normal.sample(&mut rng),
                normal.sample(&mut rng),
            )
        })
        .collect())
}

/// Keeps a uniformly random subset of `round(keep_ratio * n)` points in their
/// original order, along with their normals and attributes.
pub fn simplify(labeled: &LabeledCloud, keep_ratio: f64, seed: u64) -> Result<LabeledCloud> {
    if !(keep_ratio > 0.0 && keep_ratio <= 1.0) {
        return Err(Error::param(format!(
            "keep ratio must lie in (0, 1], got {keep_ratio}"
        )));
    }
    let n = labeled.len();
    let keep = (keep_ratio * n as f64).round() as usize;
    if keep < 2 {
        return Err(Error::param(format!(
            "keeping {keep} of {n} points leaves fewer than 2"
        )));
    }
    if keep == n {
        return Ok(labeled.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut kept = index::sample(&mut rng, n, keep).into_vec();
    kept.sort_unstable();
    subset(labeled, &kept)
}

/// Restricts a labeled cloud to the given point indices.
pub fn subset(labeled: &LabeledCloud, ids: &[usize]) -> Result<LabeledCloud> {
    let points = ids.iter().map(|&i| *labeled.cloud.point(i)).collect();
    let cloud = match labeled.cloud.normals() {
        Some(ns) => PointCloud::with_normals(points, ids.iter().map(|&i| ns[i].into_inner()).collect())?,
        None => PointCloud::new(points)?,
    };
    let segments = labeled.segments.as_ref().map(|s| {
        // renumber so ids stay contiguous
        let mut remap = vec![None; s.num_segments];
        let mut next = 0;
        let segment_id = ids
            .iter()
            .map(|&i| {
                s.segment_id[i].map(|old| {
                    *remap[old].get_or_insert_with(|| {
                        next += 1;
                        next - 1
                    })
                })
            })
            .collect();
        crate::segment::SegmentMap {
            segment_id,
            num_segments: next,
        }
    });
    Ok(LabeledCloud {
        cloud,
        labels: labeled.labels.as_ref().map(|v| pick(v, ids)),
        segments,
        ground_truth: labeled.ground_truth.as_ref().map(|v| pick(v, ids)),
    })
}

fn pick<T: Copy>(values: &[T], ids: &[usize]) -> Vec<T> {
    ids.iter().map(|&i| values[i]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{synth, SynthShape};

    #[test]
    fn zero_noise_is_identity() {
        let lc = synth(SynthShape::Plane, 0.1, 1.0, 3).unwrap();
        let out = add_noise(&lc, 0.0, 10, 5).unwrap();
        assert_eq!(out.cloud.points(), lc.cloud.points());
        assert!(out.cloud.has_normals());
    }

    #[test]
    fn noise_drops_normals_and_is_seeded() {
        let lc = synth(SynthShape::Plane, 0.1, 1.0, 3).unwrap();
        let a = add_noise(&lc, 0.05, 10, 5).unwrap();
        let b = add_noise(&lc, 0.05, 10, 5).unwrap();
        assert!(!a.cloud.has_normals());
        assert_eq!(a.cloud.points(), b.cloud.points());
        assert_ne!(a.cloud.points(), lc.cloud.points());
        assert_eq!(a.ground_truth, lc.ground_truth);
        assert!(add_noise(&lc, -0.1, 10, 5).is_err());
    }

    #[test]
    fn simplify_counts() {
        let lc = synth(SynthShape::Plane, 1.0 / 31.0, 1.0, 3).unwrap();
        let all = simplify(&lc, 1.0, 1).unwrap();
        assert_eq!(all.cloud.points(), lc.cloud.points());

        let pts: Vec<_> = (0..1000).map(|i| crate::cloud::Point3::new(i as f64, 0.0, 0.0)).collect();
        let lc = LabeledCloud::new(PointCloud::new(pts).unwrap());
        let half = simplify(&lc, 0.5, 7).unwrap();
        assert_eq!(half.len(), 500);
        let xs: Vec<f64> = half.cloud.points().iter().map(|p| p.x).collect();
        assert!(xs.windows(2).all(|w| w[0] < w[1]), "order preserved");
        assert!(xs.iter().all(|x| x.fract() == 0.0 && *x < 1000.0));
        assert_eq!(simplify(&lc, 0.5, 7).unwrap().cloud.points(), half.cloud.points());
        assert!(simplify(&lc, 0.001, 7).is_err());
        assert!(simplify(&lc, 0.0, 7).is_err());
        assert!(simplify(&lc, 1.5, 7).is_err());
    }
}
