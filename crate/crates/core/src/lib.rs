//! Feature point detection on raw point clouds.
//!
//! Each point gets a disk sampling neighborhood: binned, resampled heights of
//! its neighbors above the tangent plane, arranged on a polar grid. Random
//! walks constrained to low-variation paths on that grid reveal how much of
//! the neighborhood lies on the same smooth surface as the point; points
//! whose walks stay confined are features.
//!
//! The crate also carries the supporting pieces: a k-d tree, PCA normals,
//! evaluation metrics with ICP alignment, feature-bounded segmentation,
//! ASCII XYZ/PLY I/O, perturbation tools and synthetic test shapes.

pub mod classify;
pub mod cloud;
pub mod dsn;
pub mod error;
pub mod io;
pub mod kdtree;
pub mod labeled;
pub mod metrics;
pub mod normals;
pub mod params;
pub mod perturb;
pub mod segment;
pub mod synth;
pub mod walk;

pub use classify::{
    classify_point, detect_features, detect_features_detailed, Classification, FeatureLabel,
};
pub use cloud::{DensityEstimate, Point3, PointCloud, UnitVector3};
pub use dsn::{build_dsn, DsnDescriptor, DsnVertex};
pub use error::{Error, Result};
pub use labeled::LabeledCloud;
pub use normals::estimate_normals;
pub use params::DsnParams;
pub use segment::{segment, SegmentMap};
pub use synth::{synth, SynthShape};
pub use walk::{run_walks, GridEdge, GridNode, WalkGraph};
pub use io::{read_cloud, write_cloud, Format};
pub use metrics::{evaluate, EvalOptions, MetricsReport};
