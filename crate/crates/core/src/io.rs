//! ASCII XYZ and PLY reading and writing.
//!
//! Both formats carry the optional per-point attributes of a
//! [`LabeledCloud`]: normals, the binary `is_feature` flag plus the full
//! `label_class`, `segment_id` (-1 for points outside every segment) and
//! `ground_truth`. XYZ files name their columns in a `# fields:` comment;
//! without one, lines hold `x y z` or `x y z nx ny nz`.
//!
//! Floats are written in the shortest form that parses back to the same
//! value, so output bytes are deterministic and round trips are exact.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::Vector3;

use crate::classify::FeatureLabel;
use crate::cloud::{Point3, PointCloud};
use crate::error::{Error, Result};
use crate::labeled::LabeledCloud;
use crate::segment::SegmentMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Xyz,
    Ply,
}

impl Format {
    /// Guesses the format from a file extension (`.ply`, else XYZ).
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("ply") => Format::Ply,
            _ => Format::Xyz,
        }
    }
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "xyz" => Ok(Format::Xyz),
            "ply" => Ok(Format::Ply),
            _ => Err(Error::param(format!("unknown format {s:?} (expected xyz or ply)"))),
        }
    }
}

pub fn read_cloud(path: &Path, format: Format) -> Result<LabeledCloud> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    match format {
        Format::Xyz => parse_xyz(&text, path),
        Format::Ply => parse_ply(&text, path),
    }
}

pub fn write_cloud(labeled: &LabeledCloud, path: &Path, format: Format) -> Result<()> {
    let text = match format {
        Format::Xyz => to_xyz(labeled)?,
        Format::Ply => to_ply(labeled)?,
    };
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn label_code(label: FeatureLabel) -> u8 {
    match label {
        FeatureLabel::Feature => 0,
        FeatureLabel::NonFeatureSmooth => 1,
        FeatureLabel::NonFeatureNearEdge => 2,
    }
}

fn label_from_code(code: i64) -> Option<FeatureLabel> {
    match code {
        0 => Some(FeatureLabel::Feature),
        1 => Some(FeatureLabel::NonFeatureSmooth),
        2 => Some(FeatureLabel::NonFeatureNearEdge),
        _ => None,
    }
}

/// Attribute columns present on a cloud, in file order.
fn columns(labeled: &LabeledCloud) -> Vec<&'static str> {
    let mut cols = vec!["x", "y", "z"];
    if labeled.cloud.has_normals() {
        cols.extend(["nx", "ny", "nz"]);
    }
    if labeled.labels.is_some() {
        cols.extend(["is_feature", "label_class"]);
    }
    if labeled.segments.is_some() {
        cols.push("segment_id");
    }
    if labeled.ground_truth.is_some() {
        cols.push("ground_truth");
    }
    cols
}

fn write_row(out: &mut String, labeled: &LabeledCloud, i: usize) {
    let p = labeled.cloud.point(i);
    let _ = write!(out, "{} {} {}", p.x, p.y, p.z);
    if let Some(ns) = labeled.cloud.normals() {
        let n = ns[i];
        let _ = write!(out, " {} {} {}", n.x, n.y, n.z);
    }
    if let Some(labels) = &labeled.labels {
        let _ = write!(out, " {} {}", u8::from(labels[i].is_feature()), label_code(labels[i]));
    }
    if let Some(seg) = &labeled.segments {
        match seg.segment_id[i] {
            Some(s) => {
                let _ = write!(out, " {s}");
            }
            None => out.push_str(" -1"),
        }
    }
    if let Some(gt) = &labeled.ground_truth {
        let _ = write!(out, " {}", u8::from(gt[i]));
    }
    out.push('\n');
}

pub fn to_xyz(labeled: &LabeledCloud) -> Result<String> {
    labeled.validate()?;
    let mut out = String::new();
    let _ = writeln!(out, "# fields: {}", columns(labeled).join(" "));
    for i in 0..labeled.len() {
        write_row(&mut out, labeled, i);
    }
    Ok(out)
}

pub fn to_ply(labeled: &LabeledCloud) -> Result<String> {
    labeled.validate()?;
    let mut out = String::new();
    out.push_str("ply\nformat ascii 1.0\n");
    let _ = writeln!(out, "element vertex {}", labeled.len());
    for c in columns(labeled) {
        let ty = match c {
            "is_feature" | "label_class" | "ground_truth" => "uchar",
            "segment_id" => "int",
            _ => "double",
        };
        let _ = writeln!(out, "property {ty} {c}");
    }
    out.push_str("end_header\n");
    for i in 0..labeled.len() {
        write_row(&mut out, labeled, i);
    }
    Ok(out)
}

/// Collects rows by column name and turns them into a cloud.
struct Columns {
    path: PathBuf,
    names: Vec<String>,
    rows: Vec<(usize, Vec<f64>)>,
}

impl Columns {
    fn find(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    fn error(&self, line: usize, message: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.clone(),
            line,
            message: message.into(),
        }
    }

    fn build(self) -> Result<LabeledCloud> {
        let header_line = self.rows.first().map_or(1, |r| r.0);
        let [x, y, z] = ["x", "y", "z"].map(|c| self.find(c));
        let (Some(x), Some(y), Some(z)) = (x, y, z) else {
            return Err(self.error(header_line, "x, y and z columns are required"));
        };
        let points: Vec<Point3> = self
            .rows
            .iter()
            .map(|(_, r)| Point3::new(r[x], r[y], r[z]))
            .collect();
        let normal_cols = ["nx", "ny", "nz"].map(|c| self.find(c));
        let cloud = match normal_cols {
            [Some(a), Some(b), Some(c)] => {
                let normals = self
                    .rows
                    .iter()
                    .map(|(_, r)| Vector3::new(r[a], r[b], r[c]))
                    .collect();
                PointCloud::with_normals(points, normals)
            }
            [None, None, None] => PointCloud::new(points),
            _ => return Err(self.error(header_line, "normals need all of nx, ny and nz")),
        }
        .map_err(|e| self.error(header_line, e.to_string()))?;

        let integer = |line: usize, v: f64| -> Result<i64> {
            if v.fract() == 0.0 && v.abs() < 2f64.powi(53) {
                Ok(v as i64)
            } else {
                Err(self.error(line, format!("expected an integer, got {v}")))
            }
        };
        let flag = |line: usize, v: f64| -> Result<bool> {
            match integer(line, v)? {
                0 => Ok(false),
                1 => Ok(true),
                other => Err(self.error(line, format!("expected 0 or 1, got {other}"))),
            }
        };

        let labels = if let Some(c) = self.find("label_class") {
            let labels = self
                .rows
                .iter()
                .map(|(line, r)| {
                    label_from_code(integer(*line, r[c])?)
                        .ok_or_else(|| self.error(*line, format!("bad label_class {}", r[c])))
                })
                .collect::<Result<Vec<_>>>()?;
            Some(labels)
        } else if let Some(c) = self.find("is_feature") {
            let labels = self
                .rows
                .iter()
                .map(|(line, r)| {
                    Ok(if flag(*line, r[c])? {
                        FeatureLabel::Feature
                    } else {
                        FeatureLabel::NonFeatureSmooth
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Some(labels)
        } else {
            None
        };

        let segments = match self.find("segment_id") {
            Some(c) => {
                let ids = self
                    .rows
                    .iter()
                    .map(|(line, r)| match integer(*line, r[c])? {
                        -1 => Ok(None),
                        s if s >= 0 => Ok(Some(s as usize)),
                        s => Err(self.error(*line, format!("bad segment id {s}"))),
                    })
                    .collect::<Result<Vec<_>>>()?;
                let num_segments = ids.iter().flatten().map(|s| s + 1).max().unwrap_or(0);
                Some(SegmentMap {
                    segment_id: ids,
                    num_segments,
                })
            }
            None => None,
        };

        let ground_truth = match self.find("ground_truth") {
            Some(c) => Some(
                self.rows
                    .iter()
                    .map(|(line, r)| flag(*line, r[c]))
                    .collect::<Result<Vec<_>>>()?,
            ),
            None => None,
        };

        Ok(LabeledCloud {
            cloud,
            labels,
            segments,
            ground_truth,
        })
    }
}

fn parse_values(
    tokens: &[&str],
    line: usize,
    path: &Path,
) -> Result<Vec<f64>> {
    tokens
        .iter()
        .map(|t| {
            t.parse::<f64>().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                line,
                message: format!("not a number: {t:?}"),
            })
        })
        .collect()
}

pub fn parse_xyz(text: &str, path: &Path) -> Result<LabeledCloud> {
    let mut table = Columns {
        path: path.to_path_buf(),
        names: Vec::new(),
        rows: Vec::new(),
    };
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let trimmed = raw.trim();
        if let Some(comment) = trimmed.strip_prefix('#') {
            if let Some(fields) = comment.trim().strip_prefix("fields:") {
                if table.rows.is_empty() {
                    table.names = fields.split_whitespace().map(String::from).collect();
                }
            }
            continue;
        }
        if trimmed.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = trimmed.split_whitespace().collect();
        if table.names.is_empty() {
            table.names = match tokens.len() {
                3 => ["x", "y", "z"].map(String::from).to_vec(),
                6 => ["x", "y", "z", "nx", "ny", "nz"].map(String::from).to_vec(),
                n => return Err(table.error(line, format!("expected 3 or 6 values, found {n}"))),
            };
        }
        if tokens.len() != table.names.len() {
            return Err(table.error(
                line,
                format!("expected {} values, found {}", table.names.len(), tokens.len()),
            ));
        }
        let values = parse_values(&tokens, line, path)?;
        table.rows.push((line, values));
    }
    if table.names.is_empty() {
        table.names = ["x", "y", "z"].map(String::from).to_vec();
    }
    table.build()
}

const PLY_SCALARS: [&str; 16] = [
    "char", "uchar", "short", "ushort", "int", "uint", "float", "double", "int8", "uint8",
    "int16", "uint16", "int32", "uint32", "float32", "float64",
];

struct PlyElement {
    name: String,
    count: usize,
    properties: Vec<String>,
}

pub fn parse_ply(text: &str, path: &Path) -> Result<LabeledCloud> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let unsupported = |line: usize, message: String| Error::UnsupportedFormat {
        path: path.to_path_buf(),
        line,
        message,
    };

    let mut lines = text.lines().enumerate().map(|(k, l)| (k + 1, l));
    match lines.next() {
        Some((_, l)) if l.trim() == "ply" => {}
        _ => return Err(parse_err(1, "missing 'ply' magic".into())),
    }
    let mut elements: Vec<PlyElement> = Vec::new();
    let mut saw_format = false;
    let mut last_line = 1;
    loop {
        let Some((line, raw)) = lines.next() else {
            return Err(parse_err(last_line, "header ends without end_header".into()));
        };
        last_line = line;
        let tokens: Vec<&str> = raw.split_whitespace().collect();
        match tokens.as_slice() {
            ["end_header"] => break,
            ["comment", ..] | ["obj_info", ..] | [] => {}
            ["format", "ascii", "1.0"] => saw_format = true,
            ["format", ..] => {
                return Err(unsupported(line, format!("{:?} (only ascii 1.0 is read)", raw.trim())));
            }
            ["element", name, count] => {
                let count = count
                    .parse()
                    .map_err(|_| parse_err(line, format!("bad element count {count:?}")))?;
                elements.push(PlyElement {
                    name: name.to_string(),
                    count,
                    properties: Vec::new(),
                });
            }
            ["property", "list", ..] => {
                let element = elements
                    .last_mut()
                    .ok_or_else(|| parse_err(line, "property before any element".into()))?;
                if element.name == "vertex" {
                    return Err(unsupported(line, "list properties on vertices".into()));
                }
                element.properties.push(String::new());
            }
            ["property", ty, name] => {
                if !PLY_SCALARS.contains(ty) {
                    return Err(parse_err(line, format!("unknown property type {ty:?}")));
                }
                let element = elements
                    .last_mut()
                    .ok_or_else(|| parse_err(line, "property before any element".into()))?;
                element.properties.push(name.to_string());
            }
            _ => return Err(parse_err(line, format!("unrecognized header line {:?}", raw.trim()))),
        }
    }
    if !saw_format {
        return Err(parse_err(last_line, "header has no format line".into()));
    }

    let mut table = Columns {
        path: path.to_path_buf(),
        names: Vec::new(),
        rows: Vec::new(),
    };
    let mut have_vertices = false;
    let mut next_data = || loop {
        match lines.next() {
            Some((line, raw)) if raw.trim().is_empty() => last_line = line,
            Some((line, raw)) => {
                last_line = line;
                return Ok((line, raw));
            }
            None => return Err(last_line + 1),
        }
    };
    for element in &elements {
        if element.name != "vertex" {
            for _ in 0..element.count {
                next_data().map_err(|line| {
                    parse_err(line, format!("file ends inside element {:?}", element.name))
                })?;
            }
            continue;
        }
        if have_vertices {
            return Err(parse_err(last_line, "more than one vertex element".into()));
        }
        have_vertices = true;
        table.names = element.properties.clone();
        for v in 0..element.count {
            let (line, raw) = next_data().map_err(|line| {
                parse_err(
                    line,
                    format!("file ends after {v} of {} vertices", element.count),
                )
            })?;
            let tokens: Vec<&str> = raw.split_whitespace().collect();
            if tokens.len() != table.names.len() {
                return Err(parse_err(
                    line,
                    format!("expected {} values, found {}", table.names.len(), tokens.len()),
                ));
            }
            table.rows.push((line, parse_values(&tokens, line, path)?));
        }
    }
    if !have_vertices {
        table.names = ["x", "y", "z"].map(String::from).to_vec();
    }
    table.build()
}
