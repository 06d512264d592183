use crate::classify::FeatureLabel;
use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::segment::SegmentMap;

/// A cloud together with whatever per-point attributes travel with it.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledCloud {
    pub cloud: PointCloud,
    pub labels: Option<Vec<FeatureLabel>>,
    pub segments: Option<SegmentMap>,
    pub ground_truth: Option<Vec<bool>>,
}

impl LabeledCloud {
    pub fn new(cloud: PointCloud) -> Self {
        LabeledCloud {
            cloud,
            labels: None,
            segments: None,
            ground_truth: None,
        }
    }

    pub fn len(&self) -> usize {
        self.cloud.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cloud.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.cloud.len();
        let check = |what: &str, len: usize| {
            if len != n {
                Err(Error::param(format!("{len} {what} for {n} points")))
            } else {
                Ok(())
            }
        };
        if let Some(l) = &self.labels {
            check("labels", l.len())?;
        }
        if let Some(s) = &self.segments {
            check("segment ids", s.segment_id.len())?;
        }
        if let Some(g) = &self.ground_truth {
            check("ground-truth flags", g.len())?;
        }
        Ok(())
    }

    /// Indices of points labeled as features.
    pub fn feature_indices(&self) -> Option<Vec<usize>> {
        self.labels.as_ref().map(|l| {
            l.iter()
                .enumerate()
                .filter(|(_, l)| l.is_feature())
                .map(|(i, _)| i)
                .collect()
        })
    }

    /// Indices of ground-truth feature points.
    pub fn ground_truth_indices(&self) -> Option<Vec<usize>> {
        self.ground_truth.as_ref().map(|g| {
            g.iter()
                .enumerate()
                .filter(|(_, &g)| g)
                .map(|(i, _)| i)
                .collect()
        })
    }
}
