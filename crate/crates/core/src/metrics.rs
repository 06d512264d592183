//! Scoring a detected feature set against ground truth.
//!
//! Both sets are normalized with the ground truth's centroid and bounding-box
//! extent, the detection is rigidly aligned to the ground truth with
//! point-to-point ICP, and mutual nearest neighbors within `epsilon` become
//! the true positives.

use std::fmt::Write as _;

use nalgebra::{Isometry3, Matrix3, Rotation3, SymmetricEigen, Translation3, UnitQuaternion, Vector3};

use crate::cloud::Point3;
use crate::error::{Error, Result};
use crate::kdtree::KdTree;

pub type RigidTransform = Isometry3<f64>;

/// Translation and uniform scale that center a set and give its largest
/// bounding-box side unit length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalization {
    pub center: Vector3<f64>,
    pub scale: f64,
}

impl Normalization {
    pub fn of(points: &[Point3]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::param("cannot normalize an empty point set"));
        }
        let center = points.iter().map(|p| p.coords).sum::<Vector3<f64>>() / points.len() as f64;
        let mut lo = points[0].coords;
        let mut hi = points[0].coords;
        for p in points {
            lo = lo.inf(&p.coords);
            hi = hi.sup(&p.coords);
        }
        let extent = (hi - lo).max();
        let scale = if extent > 0.0 { 1.0 / extent } else { 1.0 };
        Ok(Normalization { center, scale })
    }

    pub fn apply(&self, points: &[Point3]) -> Vec<Point3> {
        points
            .iter()
            .map(|p| Point3::from((p.coords - self.center) * self.scale))
            .collect()
    }
}

pub fn normalize(points: &[Point3]) -> Result<Vec<Point3>> {
    Ok(Normalization::of(points)?.apply(points))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IcpResult {
    pub transform: RigidTransform,
    pub iterations: usize,
    /// Mean squared nearest-neighbor distance under `transform`.
    pub mse: f64,
}

/// Least-squares rigid motion taking `from[i]` onto `to[i]`.
pub fn kabsch(from: &[Point3], to: &[Point3]) -> RigidTransform {
    let n = from.len() as f64;
    let cf = from.iter().map(|p| p.coords).sum::<Vector3<f64>>() / n;
    let ct = to.iter().map(|p| p.coords).sum::<Vector3<f64>>() / n;
    let mut h = Matrix3::zeros();
    for (a, b) in from.iter().zip(to) {
        h += (a.coords - cf) * (b.coords - ct).transpose();
    }
    let svd = h.svd(true, true);
    let (u, v_t) = (svd.u.expect("u requested"), svd.v_t.expect("v_t requested"));
    let mut d = Matrix3::identity();
    if (v_t.transpose() * u.transpose()).determinant() < 0.0 {
        d[(2, 2)] = -1.0;
    }
    let r = v_t.transpose() * d * u.transpose();
    let rotation = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(r));
    let t = ct - rotation * cf;
    Isometry3::from_parts(Translation3::from(t), rotation)
}

fn is_degenerate(points: &[Point3]) -> bool {
    if points.len() < 3 {
        return true;
    }
    let n = points.len() as f64;
    let c = points.iter().map(|p| p.coords).sum::<Vector3<f64>>() / n;
    let mut cov = Matrix3::zeros();
    for p in points {
        let d = p.coords - c;
        cov += d * d.transpose();
    }
    let mut ev: Vec<f64> = SymmetricEigen::new(cov / n).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    !(ev[0] > 0.0) || ev[1] <= 1e-12 * ev[0]
}

/// Point-to-point ICP aligning `source` onto `target`.
///
/// Stops when the mean squared matching distance improves by less than
/// `conv_tol` or after `max_iters` rounds, and returns the best pose seen.
pub fn icp_align(
    source: &[Point3],
    target: &[Point3],
    max_iters: usize,
    conv_tol: f64,
) -> Result<IcpResult> {
    if is_degenerate(source) {
        return Err(Error::DegenerateAlignment);
    }
    if target.is_empty() {
        return Err(Error::param("ICP target is empty"));
    }
    let tree = KdTree::new(target);
    let mut transform = RigidTransform::identity();
    let mut best = IcpResult {
        transform,
        iterations: 0,
        mse: f64::INFINITY,
    };
    let mut prev = f64::INFINITY;
    let mut iterations = 0;
    let mut moved: Vec<Point3> = source.to_vec();
    let mut matched = Vec::with_capacity(source.len());
    loop {
        matched.clear();
        let mut sq = 0.0;
        for p in &moved {
            let (j, d) = tree.nearest(p, 1, None)[0];
            matched.push(target[j]);
            sq += d * d;
        }
        let mse = sq / moved.len() as f64;
        if mse < best.mse {
            best = IcpResult {
                transform,
                iterations,
                mse,
            };
        }
        if mse == 0.0 || prev - mse < conv_tol || iterations >= max_iters {
            return Ok(best);
        }
        prev = mse;
        let step = kabsch(&moved, &matched);
        transform = step * transform;
        moved = source.iter().map(|p| transform * p).collect();
        iterations += 1;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrespondenceSet {
    /// (index in detection, index in ground truth, distance)
    pub pairs: Vec<(usize, usize, f64)>,
    pub transform: RigidTransform,
    pub epsilon: f64,
}

/// Mutual nearest neighbors between the two sets that lie within `epsilon`.
pub fn correspondences(detected: &[Point3], truth: &[Point3], epsilon: f64) -> CorrespondenceSet {
    let mut pairs = Vec::new();
    if !detected.is_empty() && !truth.is_empty() {
        let truth_tree = KdTree::new(truth);
        let detected_tree = KdTree::new(detected);
        for (a, p) in detected.iter().enumerate() {
            let (b, d) = truth_tree.nearest(p, 1, None)[0];
            if d > epsilon {
                continue;
            }
            let (back, _) = detected_tree.nearest(&truth[b], 1, None)[0];
            if back == a {
                pairs.push((a, b, d));
            }
        }
    }
    CorrespondenceSet {
        pairs,
        transform: RigidTransform::identity(),
        epsilon,
    }
}

/// Twice the median nearest-neighbor spacing of `points`.
pub fn default_epsilon(points: &[Point3]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let tree = KdTree::new(points);
    let mut nn: Vec<f64> = (0..points.len())
        .map(|i| tree.nearest(&points[i], 1, Some(i))[0].1)
        .collect();
    nn.sort_by(|a, b| a.total_cmp(b));
    let mid = nn.len() / 2;
    let median = if nn.len() % 2 == 0 {
        0.5 * (nn[mid - 1] + nn[mid])
    } else {
        nn[mid]
    };
    Some(2.0 * median)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
    pub total: usize,
}

/// Conventions applied where a formula was undefined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MetricFlags {
    /// MCC denominator was zero; MCC reported as 0.
    pub mcc_undefined: bool,
    /// Both sets empty: set scores 1, distances 0.
    pub trivial: bool,
    /// No corresponding pairs: pair distances reported as infinity.
    pub no_pairs: bool,
    /// ICP skipped because the detection was too small or collinear.
    pub alignment_skipped: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsReport {
    pub hausdorff: f64,
    pub jaccard: f64,
    pub dice: f64,
    pub iou: f64,
    pub mcc: f64,
    pub precision: f64,
    pub recall: f64,
    pub mse: f64,
    pub d_max: f64,
    pub d_min: f64,
    pub counts: ConfusionCounts,
    pub flags: MetricFlags,
}

/// Symmetric Hausdorff distance over full point sets; infinite if exactly one is empty.
pub fn hausdorff(a: &[Point3], b: &[Point3]) -> f64 {
    match (a.is_empty(), b.is_empty()) {
        (true, true) => 0.0,
        (true, false) | (false, true) => f64::INFINITY,
        _ => directed_hausdorff(a, b).max(directed_hausdorff(b, a)),
    }
}

fn directed_hausdorff(from: &[Point3], to: &[Point3]) -> f64 {
    let tree = KdTree::new(to);
    from.iter()
        .map(|p| tree.nearest(p, 1, None)[0].1)
        .fold(0.0, f64::max)
}

/// Scores already normalized and aligned sets. `cloud_size` is the size of the
/// source cloud and fixes the true-negative count.
pub fn score(
    detected: &[Point3],
    truth: &[Point3],
    cloud_size: usize,
    epsilon: f64,
) -> Result<MetricsReport> {
    let pairs = correspondences(detected, truth, epsilon).pairs;
    score_pairs(detected, truth, &pairs, cloud_size)
}

fn score_pairs(
    detected: &[Point3],
    truth: &[Point3],
    pairs: &[(usize, usize, f64)],
    cloud_size: usize,
) -> Result<MetricsReport> {
    let tp = pairs.len();
    let fp = detected.len() - tp;
    let fn_ = truth.len() - tp;
    let tn = cloud_size
        .checked_sub(tp + fp + fn_)
        .ok_or_else(|| Error::param(format!(
            "cloud size {cloud_size} is smaller than the {} points involved",
            tp + fp + fn_
        )))?;
    let counts = ConfusionCounts {
        tp,
        fp,
        tn,
        fn_,
        total: cloud_size,
    };
    let mut flags = MetricFlags::default();

    if detected.is_empty() && truth.is_empty() {
        flags.trivial = true;
        return Ok(MetricsReport {
            hausdorff: 0.0,
            jaccard: 1.0,
            dice: 1.0,
            iou: 1.0,
            mcc: 1.0,
            precision: 1.0,
            recall: 1.0,
            mse: 0.0,
            d_max: 0.0,
            d_min: 0.0,
            counts,
            flags,
        });
    }

    let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let dice = ratio(2 * tp, detected.len() + truth.len());
    let jaccard = dice / (2.0 - dice);
    let iou = ratio(tp, tp + fp + fn_);
    let precision = ratio(tp, detected.len());
    let recall = ratio(tp, truth.len());

    let (tpf, fpf, tnf, fnf) = (tp as f64, fp as f64, tn as f64, fn_ as f64);
    let den = ((tpf + fpf) * (tpf + fnf) * (tnf + fpf) * (tnf + fnf)).sqrt();
    let mcc = if den > 0.0 {
        (tpf * tnf - fpf * fnf) / den
    } else {
        flags.mcc_undefined = true;
        0.0
    };

    let (mse, d_max, d_min) = if pairs.is_empty() {
        flags.no_pairs = true;
        (f64::INFINITY, f64::INFINITY, f64::INFINITY)
    } else {
        let mse = pairs.iter().map(|p| p.2 * p.2).sum::<f64>() / tp as f64;
        let d_max = pairs.iter().map(|p| p.2).fold(0.0, f64::max);
        let d_min = pairs.iter().map(|p| p.2).fold(f64::INFINITY, f64::min);
        (mse, d_max, d_min)
    };

    Ok(MetricsReport {
        hausdorff: hausdorff(detected, truth),
        jaccard,
        dice,
        iou,
        mcc,
        precision,
        recall,
        mse,
        d_max,
        d_min,
        counts,
        flags,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalOptions {
    /// Correspondence radius in normalized units; defaults to twice the
    /// median ground-truth spacing.
    pub epsilon: Option<f64>,
    pub icp: bool,
    pub max_iters: usize,
    pub conv_tol: f64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            epsilon: None,
            icp: true,
            max_iters: 50,
            conv_tol: 1e-12,
        }
    }
}

/// Full evaluation: shared normalization, ICP alignment, correspondences, scores.
pub fn evaluate(
    detected: &[Point3],
    truth: &[Point3],
    cloud_size: usize,
    options: &EvalOptions,
) -> Result<(MetricsReport, CorrespondenceSet)> {
    let reference = if truth.is_empty() { detected } else { truth };
    let (detected, truth) = if reference.is_empty() {
        (Vec::new(), Vec::new())
    } else {
        let norm = Normalization::of(reference)?;
        (norm.apply(detected), norm.apply(truth))
    };

    let mut alignment_skipped = false;
    let mut transform = RigidTransform::identity();
    if options.icp && !truth.is_empty() {
        match icp_align(&detected, &truth, options.max_iters, options.conv_tol) {
            Ok(r) => transform = r.transform,
            Err(Error::DegenerateAlignment) => alignment_skipped = true,
            Err(e) => return Err(e),
        }
    }
    let aligned: Vec<Point3> = detected.iter().map(|p| transform * p).collect();
    let epsilon = options
        .epsilon
        .or_else(|| default_epsilon(&truth))
        .unwrap_or(f64::INFINITY);
    let mut corr = correspondences(&aligned, &truth, epsilon);
    corr.transform = transform;
    let mut report = score_pairs(&aligned, &truth, &corr.pairs, cloud_size)?;
    report.flags.alignment_skipped = alignment_skipped;
    Ok((report, corr))
}

pub const CSV_HEADER: &str =
    "model,hausdorff,jaccard,iou,mcc,precision,recall,mse_x100,d_max,d_min,tp,fp,tn,fn";

const COLUMNS: [&str; 9] = [
    "Hausdorff",
    "Jaccard",
    "IoU",
    "MCC",
    "Precision",
    "Recall",
    "MSE*100",
    "d_max",
    "d_min",
];

impl MetricsReport {
    /// The nine scores in table order, MSE scaled by 100 for display.
    pub fn table_values(&self) -> [f64; 9] {
        [
            self.hausdorff,
            self.jaccard,
            self.iou,
            self.mcc,
            self.precision,
            self.recall,
            self.mse * 100.0,
            self.d_max,
            self.d_min,
        ]
    }

    pub fn csv_row(&self, model: &str) -> String {
        let c = &self.counts;
        let values: Vec<String> = self.table_values().iter().map(|v| format!("{v:.6}")).collect();
        format!(
            "{model},{},{},{},{},{}",
            values.join(","),
            c.tp,
            c.fp,
            c.tn,
            c.fn_
        )
    }
}

/// Unweighted per-metric means over a batch of reports.
pub fn mean_values(reports: &[MetricsReport]) -> Option<[f64; 9]> {
    if reports.is_empty() {
        return None;
    }
    let mut acc = [0.0; 9];
    for r in reports {
        for (a, v) in acc.iter_mut().zip(r.table_values()) {
            *a += v;
        }
    }
    Some(acc.map(|a| a / reports.len() as f64))
}

/// CSV with one row per model and a trailing `mean` row.
pub fn render_csv(rows: &[(String, MetricsReport)]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{CSV_HEADER}");
    for (name, r) in rows {
        let _ = writeln!(out, "{}", r.csv_row(name));
    }
    let reports: Vec<MetricsReport> = rows.iter().map(|r| r.1).collect();
    if rows.len() > 1 {
        if let Some(mean) = mean_values(&reports) {
            let n = reports.len() as f64;
            let avg = |f: fn(&ConfusionCounts) -> usize| {
                reports.iter().map(|r| f(&r.counts) as f64).sum::<f64>() / n
            };
            let values: Vec<String> = mean.iter().map(|v| format!("{v:.6}")).collect();
            let _ = writeln!(
                out,
                "mean,{},{:.3},{:.3},{:.3},{:.3}",
                values.join(","),
                avg(|c| c.tp),
                avg(|c| c.fp),
                avg(|c| c.tn),
                avg(|c| c.fn_)
            );
        }
    }
    out
}

/// Aligned plain-text table in the same column order as the CSV.
pub fn render_text(rows: &[(String, MetricsReport)]) -> String {
    let width = rows
        .iter()
        .map(|r| r.0.len())
        .chain(std::iter::once(5))
        .max()
        .unwrap_or(5);
    let mut out = String::new();
    let _ = write!(out, "{:<width$}", "model");
    for c in COLUMNS {
        let _ = write!(out, " {c:>10}");
    }
    out.push('\n');
    let mut line = |name: &str, values: [f64; 9]| {
        let _ = write!(out, "{name:<width$}");
        for v in values {
            let _ = write!(out, " {v:>10.4}");
        }
        out.push('\n');
    };
    for (name, r) in rows {
        line(name, r.table_values());
    }
    if rows.len() > 1 {
        let reports: Vec<MetricsReport> = rows.iter().map(|r| r.1).collect();
        if let Some(mean) = mean_values(&reports) {
            line("mean", mean);
        }
    }
    out
}
