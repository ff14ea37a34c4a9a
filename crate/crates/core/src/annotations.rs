//! Per-frame object annotations in an extended KITTI-style text format.
//!
//! One object per line, whitespace-separated:
//!
//! ```text
//! class truncated occluded alpha x1 y1 x2 y2 h w l cx cy cz yaw [score]
//! ```
//!
//! `truncated`, `alpha` and the 2D box `x1 y1 x2 y2` are carried through
//! verbatim but ignored by the curation logic. `cx cy cz` is the geometric
//! center of the oriented box in sensor coordinates (meters), `yaw` the
//! rotation about the vertical axis in radians. The trailing `score` is
//! present for detections and absent for ground truth. `occluded` is an
//! integer in `0..=3` (see [`OcclusionLevel`]).
//!
//! Numbers are written in shortest round-trip form, so writing and
//! re-parsing a frame reproduces it exactly.

use crate::pointcloud::Point3;
use serde::Serialize;
use std::f64::consts::PI;
use std::fmt;
use thiserror::Error;

/// Visibility category of an annotated object, ordered from least to most
/// occluded. Label files carry it as the integer `0..=3` in declaration
/// order.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize,
)]
#[serde(rename_all = "snake_case")]
pub enum OcclusionLevel {
    FullyVisible,
    MostlyVisible,
    SeverelyOccluded,
    FullyOccluded,
}

impl OcclusionLevel {
    pub const ALL: [OcclusionLevel; 4] = [
        OcclusionLevel::FullyVisible,
        OcclusionLevel::MostlyVisible,
        OcclusionLevel::SeverelyOccluded,
        OcclusionLevel::FullyOccluded,
    ];

    /// Integer stored in the label-file occlusion slot.
    pub fn index(self) -> u8 {
        match self {
            OcclusionLevel::FullyVisible => 0,
            OcclusionLevel::MostlyVisible => 1,
            OcclusionLevel::SeverelyOccluded => 2,
            OcclusionLevel::FullyOccluded => 3,
        }
    }

    pub fn from_index(value: i64) -> Result<Self, LabelError> {
        match value {
            0 => Ok(OcclusionLevel::FullyVisible),
            1 => Ok(OcclusionLevel::MostlyVisible),
            2 => Ok(OcclusionLevel::SeverelyOccluded),
            3 => Ok(OcclusionLevel::FullyOccluded),
            _ => Err(LabelError::InvalidOcclusion { value }),
        }
    }

    /// Canonical snake_case name, as used in config files and CSV output.
    pub fn name(self) -> &'static str {
        match self {
            OcclusionLevel::FullyVisible => "fully_visible",
            OcclusionLevel::MostlyVisible => "mostly_visible",
            OcclusionLevel::SeverelyOccluded => "severely_occluded",
            OcclusionLevel::FullyOccluded => "fully_occluded",
        }
    }
}

impl fmt::Display for OcclusionLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Parse a human-readable occlusion category. Case-insensitive; spaces and
/// underscores are interchangeable. Accepts the common dataset misspelling
/// "severly occluded" alongside "severely occluded".
pub fn parse_occlusion_name(name: &str) -> Result<OcclusionLevel, LabelError> {
    let normalized = name
        .to_ascii_lowercase()
        .replace('_', " ")
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ");
    match normalized.as_str() {
        "fully visible" => Ok(OcclusionLevel::FullyVisible),
        "mostly visible" => Ok(OcclusionLevel::MostlyVisible),
        "severely occluded" | "severly occluded" => Ok(OcclusionLevel::SeverelyOccluded),
        "fully occluded" => Ok(OcclusionLevel::FullyOccluded),
        _ => Err(LabelError::UnknownOcclusionName { name: name.to_string() }),
    }
}

/// Oriented 3D bounding box: geometric center, dimensions, yaw about the
/// vertical (z) axis. `length` runs along the box's heading, `width` across
/// it. Yaw is kept normalized to `(-pi, pi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Box3D {
    pub center: Point3,
    pub length: f64,
    pub width: f64,
    pub height: f64,
    pub yaw: f64,
}

impl Box3D {
    /// Validating constructor: dimensions must be strictly positive and
    /// finite, center and yaw finite. Yaw is normalized.
    pub fn new(
        center: Point3,
        length: f64,
        width: f64,
        height: f64,
        yaw: f64,
    ) -> Result<Self, LabelError> {
        for (name, value) in [("length", length), ("width", width), ("height", height)] {
            if !value.is_finite() || value <= 0.0 {
                return Err(LabelError::NonPositiveDimension { name, value });
            }
        }
        if !center.has_finite_position() {
            return Err(LabelError::NonFiniteField { field: "center" });
        }
        if !yaw.is_finite() {
            return Err(LabelError::NonFiniteField { field: "yaw" });
        }
        Ok(Box3D { center, length, width, height, yaw: normalize_yaw(yaw) })
    }

    pub fn volume(&self) -> f64 {
        self.length * self.width * self.height
    }
}

/// Wrap an angle into `(-pi, pi]`. Values already in range pass through
/// unchanged, so normalization is idempotent bit-for-bit.
pub fn normalize_yaw(yaw: f64) -> f64 {
    if yaw > -PI && yaw <= PI {
        return yaw;
    }
    let r = yaw.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

/// One annotated object: the unit the filter keeps or discards.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectAnnotation {
    pub class_name: String,
    /// Preserved verbatim from the label line; unused by the filter.
    pub truncated: f64,
    /// Preserved verbatim from the label line; unused by the filter.
    pub alpha: f64,
    /// 2D image-plane box `x1 y1 x2 y2`, preserved verbatim; unused here.
    pub bbox_2d: [f64; 4],
    pub box3d: Box3D,
    pub occlusion: OcclusionLevel,
    /// Detection confidence in `[0, 1]`; absent for ground truth.
    pub score: Option<f64>,
    /// In-box point count, populated by the filter for kept objects.
    pub cached_point_count: Option<usize>,
}

/// All annotations for one frame, plus the sensor position the distance
/// constraint measures from. Boxes are annotated in the sensor frame, so the
/// position defaults to the origin; callers can override it per frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameAnnotations {
    pub frame_id: String,
    pub sensor_position: Point3,
    pub objects: Vec<ObjectAnnotation>,
}

impl FrameAnnotations {
    pub fn new(frame_id: impl Into<String>, objects: Vec<ObjectAnnotation>) -> Self {
        FrameAnnotations {
            frame_id: frame_id.into(),
            sensor_position: Point3::origin(),
            objects,
        }
    }
}

#[derive(Debug, Error)]
pub enum LabelError {
    #[error("malformed line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("invalid occlusion value {value}: must be an integer in 0..=3")]
    InvalidOcclusion { value: i64 },
    #[error("non-positive box dimension: {name} = {value}")]
    NonPositiveDimension { name: &'static str, value: f64 },
    #[error("non-finite value in field {field}")]
    NonFiniteField { field: &'static str },
    #[error("unknown occlusion name {name:?}")]
    UnknownOcclusionName { name: String },
}

impl LabelError {
    fn at_line(self, line: usize) -> LabelError {
        match self {
            LabelError::MalformedLine { .. } => self,
            LabelError::InvalidOcclusion { .. } | LabelError::NonPositiveDimension { .. } => self,
            LabelError::NonFiniteField { field } => LabelError::MalformedLine {
                line,
                reason: format!("non-finite value in field {field}"),
            },
            LabelError::UnknownOcclusionName { .. } => self,
        }
    }
}

const FIELDS_WITHOUT_SCORE: usize = 15;
const FIELDS_WITH_SCORE: usize = 16;

/// Parse a label file. Blank lines are skipped; anything else must be a
/// 15-field ground-truth line or a 16-field detection line (with score).
/// The sensor position defaults to the origin.
pub fn parse_label_file(
    text: &str,
    frame_id: impl Into<String>,
) -> Result<FrameAnnotations, LabelError> {
    let mut objects = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        objects.push(parse_label_line(line, line_no)?);
    }
    Ok(FrameAnnotations::new(frame_id, objects))
}

fn parse_label_line(line: &str, line_no: usize) -> Result<ObjectAnnotation, LabelError> {
    let tokens: Vec<&str> = line.split_whitespace().collect();
    if tokens.len() != FIELDS_WITHOUT_SCORE && tokens.len() != FIELDS_WITH_SCORE {
        return Err(LabelError::MalformedLine {
            line: line_no,
            reason: format!(
                "expected {FIELDS_WITHOUT_SCORE} or {FIELDS_WITH_SCORE} fields, found {}",
                tokens.len()
            ),
        });
    }
    let number = |i: usize| -> Result<f64, LabelError> {
        tokens[i].parse::<f64>().map_err(|_| LabelError::MalformedLine {
            line: line_no,
            reason: format!("non-numeric token {:?} in field {}", tokens[i], i + 1),
        })
    };

    let occlusion_raw: i64 = tokens[2].parse().map_err(|_| LabelError::MalformedLine {
        line: line_no,
        reason: format!("occlusion field must be an integer, found {:?}", tokens[2]),
    })?;
    let occlusion = OcclusionLevel::from_index(occlusion_raw)?;

    let truncated = number(1)?;
    let alpha = number(3)?;
    let bbox_2d = [number(4)?, number(5)?, number(6)?, number(7)?];
    let (h, w, l) = (number(8)?, number(9)?, number(10)?);
    let center = Point3::xyz(number(11)?, number(12)?, number(13)?);
    let yaw = number(14)?;
    let box3d = Box3D::new(center, l, w, h, yaw).map_err(|e| e.at_line(line_no))?;

    let score = if tokens.len() == FIELDS_WITH_SCORE {
        let s = number(15)?;
        if !(0.0..=1.0).contains(&s) {
            return Err(LabelError::MalformedLine {
                line: line_no,
                reason: format!("score {s} outside [0, 1]"),
            });
        }
        Some(s)
    } else {
        None
    };

    Ok(ObjectAnnotation {
        class_name: tokens[0].to_string(),
        truncated,
        alpha,
        bbox_2d,
        box3d,
        occlusion,
        score,
        cached_point_count: None,
    })
}

/// Serialize a frame back to label-file text. Re-parsing the output yields
/// the same objects (the cached point count is in-memory only and is not
/// written).
pub fn write_label_file(annotations: &FrameAnnotations) -> String {
    let mut out = String::new();
    for obj in &annotations.objects {
        let b = &obj.box3d;
        out.push_str(&format!(
            "{} {} {} {} {} {} {} {} {} {} {} {} {} {} {}",
            obj.class_name,
            obj.truncated,
            obj.occlusion.index(),
            obj.alpha,
            obj.bbox_2d[0],
            obj.bbox_2d[1],
            obj.bbox_2d[2],
            obj.bbox_2d[3],
            b.height,
            b.width,
            b.length,
            b.center.x,
            b.center.y,
            b.center.z,
            b.yaw,
        ));
        if let Some(score) = obj.score {
            out.push_str(&format!(" {score}"));
        }
        out.push('\n');
    }
    out
}
