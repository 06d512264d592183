//! Surface segmentation bounded by feature points.

use std::collections::VecDeque;

use crate::classify::FeatureLabel;
use crate::cloud::PointCloud;
use crate::error::{Error, Result};

pub const DEFAULT_SEGMENT_K: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentMap {
    /// `None` for feature points.
    pub segment_id: Vec<Option<usize>>,
    pub num_segments: usize,
}

impl SegmentMap {
    /// Point indices of each segment, in id order.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_segments];
        for (i, s) in self.segment_id.iter().enumerate() {
            if let Some(s) = s {
                out[*s].push(i);
            }
        }
        out
    }
}

/// Grows segments by breadth-first search over directed kNN edges, never
/// entering a feature point. Seeds are taken in index order, so segment ids
/// are assigned in order of each segment's smallest member.
pub fn segment(cloud: &PointCloud, labels: &[FeatureLabel], k: usize) -> Result<SegmentMap> {
    if labels.len() != cloud.len() {
        return Err(Error::param(format!(
            "{} labels for {} points",
            labels.len(),
            cloud.len()
        )));
    }
    let n = cloud.len();
    let mut segment_id = vec![None; n];
    if n == 0 {
        return Ok(SegmentMap {
            segment_id,
            num_segments: 0,
        });
    }
    let k = k.min(n - 1);
    let mut num_segments = 0;
    let mut queue = VecDeque::new();
    for seed in 0..n {
        if labels[seed].is_feature() || segment_id[seed].is_some() {
            continue;
        }
        let id = num_segments;
        num_segments += 1;
        segment_id[seed] = Some(id);
        queue.push_back(seed);
        while let Some(current) = queue.pop_front() {
            if k == 0 {
                break;
            }
            for (next, _) in cloud.knn(current, k)? {
                if labels[next].is_feature() || segment_id[next].is_some() {
                    continue;
                }
                segment_id[next] = Some(id);
                queue.push_back(next);
            }
        }
    }
    Ok(SegmentMap {
        segment_id,
        num_segments,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cloud::Point3;

    fn plane_at(z: f64, n: usize, pts: &mut Vec<Point3>) {
        for i in 0..n {
            for j in 0..n {
                pts.push(Point3::new(i as f64, j as f64, z));
            }
        }
    }

    #[test]
    fn single_plane_is_one_segment() {
        let mut pts = Vec::new();
        plane_at(0.0, 10, &mut pts);
        let cloud = PointCloud::new(pts).unwrap();
        let labels = vec![FeatureLabel::NonFeatureSmooth; cloud.len()];
        let seg = segment(&cloud, &labels, 5).unwrap();
        assert_eq!(seg.num_segments, 1);
        assert!(seg.segment_id.iter().all(|s| *s == Some(0)));
    }

    #[test]
    fn separated_planes_are_two_segments() {
        let mut pts = Vec::new();
        plane_at(0.0, 8, &mut pts);
        plane_at(100.0, 8, &mut pts);
        let cloud = PointCloud::new(pts).unwrap();
        let labels = vec![FeatureLabel::NonFeatureSmooth; cloud.len()];
        let seg = segment(&cloud, &labels, 5).unwrap();
        assert_eq!(seg.num_segments, 2);
        assert!(seg.segment_id[..64].iter().all(|s| *s == Some(0)));
        assert!(seg.segment_id[64..].iter().all(|s| *s == Some(1)));
    }

    #[test]
    fn all_features_gives_no_segments() {
        let mut pts = Vec::new();
        plane_at(0.0, 4, &mut pts);
        let cloud = PointCloud::new(pts).unwrap();
        let labels = vec![FeatureLabel::Feature; cloud.len()];
        let seg = segment(&cloud, &labels, 5).unwrap();
        assert_eq!(seg.num_segments, 0);
        assert!(seg.segment_id.iter().all(Option::is_none));
    }

    #[test]
    fn feature_line_splits_a_plane() {
        let mut pts = Vec::new();
        plane_at(0.0, 12, &mut pts);
        let cloud = PointCloud::new(pts).unwrap();
        // a three-point-wide barrier along x = 5..=7 blocks every 5-NN edge
        let labels: Vec<FeatureLabel> = cloud
            .points()
            .iter()
            .map(|p| {
                if (5.0..=7.0).contains(&p.x) {
                    FeatureLabel::Feature
                } else {
                    FeatureLabel::NonFeatureSmooth
                }
            })
            .collect();
        let seg = segment(&cloud, &labels, 5).unwrap();
        assert_eq!(seg.num_segments, 2);
        for (i, p) in cloud.points().iter().enumerate() {
            match seg.segment_id[i] {
                None => assert!(labels[i].is_feature()),
                Some(s) => assert_eq!(s, usize::from(p.x > 7.0)),
            }
        }
    }

    #[test]
    fn label_length_mismatch() {
        let cloud = PointCloud::new(vec![Point3::origin(); 3]).unwrap();
        assert!(segment(&cloud, &[FeatureLabel::Feature], 5).is_err());
    }
}
