//! The curation pass: three per-object validity constraints and their
//! composition over frames and datasets.
//!
//! An object is kept only if every *enabled* constraint keeps it:
//!
//! * distance — the box center lies within `eta` meters of the sensor
//!   (boundary kept);
//! * point count — at least `delta` cloud points fall inside the box
//!   (boundary kept);
//! * occlusion — the annotated occlusion level is not in the discard set.
//!
//! Constraints are evaluated independently per object; there is no
//! cross-object coupling. Discarded objects are dropped from the output
//! rather than flagged in place, and every object gets a [`FilterVerdict`]
//! recording what was measured and which constraints failed.

use crate::annotations::{write_label_file, FrameAnnotations, OcclusionLevel};
use crate::geometry::{center_distance, center_distance_squared, count_points_in_box};
use crate::pointcloud::PointCloud;
use rayon::iter::{ParallelBridge, ParallelIterator};
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io;
use std::sync::Mutex;
use thiserror::Error;

/// Default distance threshold in meters.
pub const DEFAULT_ETA: f64 = 15.0;
/// Default minimum in-box point count.
pub const DEFAULT_DELTA: usize = 10;

/// Thresholds and switches for the three constraints.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FilterConfig {
    /// Distance threshold in meters; must be positive.
    pub eta: f64,
    /// Minimum number of cloud points inside a box.
    pub delta: usize,
    /// Occlusion levels that cause a discard.
    pub discard_occlusions: BTreeSet<OcclusionLevel>,
    /// Compare the *squared* center distance against `eta` instead of the
    /// distance itself.
    pub use_squared_distance: bool,
    pub enable_distance: bool,
    pub enable_point_count: bool,
    pub enable_occlusion: bool,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            eta: DEFAULT_ETA,
            delta: DEFAULT_DELTA,
            discard_occlusions: BTreeSet::from([OcclusionLevel::FullyOccluded]),
            use_squared_distance: false,
            enable_distance: true,
            enable_point_count: true,
            enable_occlusion: true,
        }
    }
}

impl FilterConfig {
    /// Parse a `key=value` config file. Blank lines and `#` comments are
    /// skipped; keys not listed keep their defaults.
    pub fn from_key_values(text: &str) -> Result<Self, ConfigError> {
        let mut config = FilterConfig::default();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError {
                line: Some(line_no),
                message: format!("expected key=value, found {line:?}"),
            })?;
            config
                .set(key.trim(), value.trim())
                .map_err(|e| ConfigError { line: Some(line_no), ..e })?;
        }
        config.validate()?;
        Ok(config)
    }

    /// Set one option from its textual form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let invalid = |message: String| ConfigError { line: None, message };
        match key {
            "eta" => {
                self.eta = value
                    .parse()
                    .map_err(|_| invalid(format!("eta must be a number, found {value:?}")))?;
            }
            "delta" => {
                self.delta = value.parse().map_err(|_| {
                    invalid(format!("delta must be a nonnegative integer, found {value:?}"))
                })?;
            }
            "discard_occlusions" => {
                let mut set = BTreeSet::new();
                for name in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                    let level = crate::annotations::parse_occlusion_name(name)
                        .map_err(|e| invalid(e.to_string()))?;
                    set.insert(level);
                }
                self.discard_occlusions = set;
            }
            "use_squared_distance" => self.use_squared_distance = parse_bool(value)?,
            "enable_distance" => self.enable_distance = parse_bool(value)?,
            "enable_point_count" => self.enable_point_count = parse_bool(value)?,
            "enable_occlusion" => self.enable_occlusion = parse_bool(value)?,
            _ => return Err(invalid(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !self.eta.is_finite() || self.eta <= 0.0 {
            return Err(ConfigError {
                line: None,
                message: format!("eta must be positive and finite, got {}", self.eta),
            });
        }
        Ok(())
    }

    /// Disable every constraint (the filter becomes the identity).
    pub fn disable_all(&mut self) {
        self.enable_distance = false;
        self.enable_point_count = false;
        self.enable_occlusion = false;
    }

    fn enabled(&self, kind: ConstraintKind) -> bool {
        match kind {
            ConstraintKind::Distance => self.enable_distance,
            ConstraintKind::PointCount => self.enable_point_count,
            ConstraintKind::Occlusion => self.enable_occlusion,
        }
    }
}

fn parse_bool(value: &str) -> Result<bool, ConfigError> {
    match value {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(ConfigError {
            line: None,
            message: format!("expected a boolean, found {value:?}"),
        }),
    }
}

#[derive(Debug, Error)]
#[error("config error{}: {message}", .line.map(|l| format!(" at line {l}")).unwrap_or_default())]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

/// The three constraints, in report order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintKind {
    Distance,
    PointCount,
    Occlusion,
}

impl ConstraintKind {
    pub const ALL: [ConstraintKind; 3] =
        [ConstraintKind::Distance, ConstraintKind::PointCount, ConstraintKind::Occlusion];

    pub fn name(self) -> &'static str {
        match self {
            ConstraintKind::Distance => "distance",
            ConstraintKind::PointCount => "point_count",
            ConstraintKind::Occlusion => "occlusion",
        }
    }
}

impl fmt::Display for ConstraintKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Keep/discard decision for one object, with the measurements behind it.
/// `failed_constraints` records every failing constraint whether or not it
/// is enabled; `kept` considers only the enabled ones.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterVerdict {
    pub kept: bool,
    pub failed_constraints: Vec<ConstraintKind>,
    pub measured_distance: f64,
    pub measured_point_count: usize,
}

/// Keep when the center distance (or its square, when configured) does not
/// exceed `eta`. The boundary value keeps.
pub fn distance_constraint(
    sensor: crate::pointcloud::Point3,
    b: &crate::annotations::Box3D,
    config: &FilterConfig,
) -> bool {
    let measured = if config.use_squared_distance {
        center_distance_squared(sensor, b)
    } else {
        center_distance(sensor, b)
    };
    measured <= config.eta
}

/// Keep when at least `delta` points fall inside the box. The boundary
/// count keeps.
pub fn point_count_constraint(n: usize, config: &FilterConfig) -> bool {
    n >= config.delta
}

/// Keep when the occlusion level is not in the discard set.
pub fn occlusion_constraint(level: OcclusionLevel, config: &FilterConfig) -> bool {
    !config.discard_occlusions.contains(&level)
}

/// Output of [`apply_filters`] for one frame: the kept objects plus one
/// verdict per *input* object, in input order.
#[derive(Debug, Clone, PartialEq)]
pub struct FilteredFrame {
    pub kept: FrameAnnotations,
    pub verdicts: Vec<FilterVerdict>,
}

#[derive(Debug, Error)]
pub enum FilterError {
    #[error("frame mismatch: cloud {cloud:?} vs annotations {annotations:?}")]
    FrameMismatch { cloud: String, annotations: String },
    #[error("frame {frame_id}: {source}")]
    Io {
        frame_id: String,
        #[source]
        source: io::Error,
    },
    #[error("frame {frame_id}: {message}")]
    Frame { frame_id: String, message: String },
}

/// Run all three constraints over one frame. Kept annotations carry their
/// measured in-box point count in `cached_point_count`; input order is
/// preserved among kept objects.
pub fn apply_filters(
    cloud: &PointCloud,
    annotations: &FrameAnnotations,
    config: &FilterConfig,
) -> Result<FilteredFrame, FilterError> {
    if cloud.frame_id != annotations.frame_id {
        return Err(FilterError::FrameMismatch {
            cloud: cloud.frame_id.clone(),
            annotations: annotations.frame_id.clone(),
        });
    }
    let mut kept_objects = Vec::new();
    let mut verdicts = Vec::with_capacity(annotations.objects.len());
    for obj in &annotations.objects {
        let distance = center_distance(annotations.sensor_position, &obj.box3d);
        let point_count = count_points_in_box(cloud, &obj.box3d);

        let mut failed = Vec::new();
        if !distance_constraint(annotations.sensor_position, &obj.box3d, config) {
            failed.push(ConstraintKind::Distance);
        }
        if !point_count_constraint(point_count, config) {
            failed.push(ConstraintKind::PointCount);
        }
        if !occlusion_constraint(obj.occlusion, config) {
            failed.push(ConstraintKind::Occlusion);
        }
        let kept = failed.iter().all(|&kind| !config.enabled(kind));
        if kept {
            let mut kept_obj = obj.clone();
            kept_obj.cached_point_count = Some(point_count);
            kept_objects.push(kept_obj);
        }
        verdicts.push(FilterVerdict {
            kept,
            failed_constraints: failed,
            measured_distance: distance,
            measured_point_count: point_count,
        });
    }
    Ok(FilteredFrame {
        kept: FrameAnnotations {
            frame_id: annotations.frame_id.clone(),
            sensor_position: annotations.sensor_position,
            objects: kept_objects,
        },
        verdicts,
    })
}

/// Object counts for one scope (a frame, a class, or the whole run).
/// An object failing several enabled constraints is counted once per
/// failed constraint, so the per-constraint columns can sum past
/// `discarded`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct FilterTally {
    pub total: usize,
    pub kept: usize,
    pub discarded: usize,
    pub discarded_by_distance: usize,
    pub discarded_by_point_count: usize,
    pub discarded_by_occlusion: usize,
}

impl FilterTally {
    fn add_object(&mut self, verdict: &FilterVerdict, config: &FilterConfig) {
        self.total += 1;
        if verdict.kept {
            self.kept += 1;
            return;
        }
        self.discarded += 1;
        for &kind in &verdict.failed_constraints {
            if !config.enabled(kind) {
                continue;
            }
            match kind {
                ConstraintKind::Distance => self.discarded_by_distance += 1,
                ConstraintKind::PointCount => self.discarded_by_point_count += 1,
                ConstraintKind::Occlusion => self.discarded_by_occlusion += 1,
            }
        }
    }

    fn merge(&mut self, other: &FilterTally) {
        self.total += other.total;
        self.kept += other.kept;
        self.discarded += other.discarded;
        self.discarded_by_distance += other.discarded_by_distance;
        self.discarded_by_point_count += other.discarded_by_point_count;
        self.discarded_by_occlusion += other.discarded_by_occlusion;
    }
}

/// Aggregate, per-class and per-frame tallies for a dataset run.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct FilterReport {
    pub aggregate: FilterTally,
    pub per_class: BTreeMap<String, FilterTally>,
    pub per_frame: BTreeMap<String, FilterTally>,
}

impl FilterReport {
    pub fn from_frame(
        annotations: &FrameAnnotations,
        verdicts: &[FilterVerdict],
        config: &FilterConfig,
    ) -> Self {
        let mut report = FilterReport::default();
        let frame_tally = report.per_frame.entry(annotations.frame_id.clone()).or_default();
        for (obj, verdict) in annotations.objects.iter().zip(verdicts) {
            frame_tally.add_object(verdict, config);
            report.per_class.entry(obj.class_name.clone()).or_default().add_object(verdict, config);
            report.aggregate.add_object(verdict, config);
        }
        report
    }

    pub fn merge(&mut self, other: &FilterReport) {
        self.aggregate.merge(&other.aggregate);
        for (name, tally) in &other.per_class {
            self.per_class.entry(name.clone()).or_default().merge(tally);
        }
        for (name, tally) in &other.per_frame {
            self.per_frame.entry(name.clone()).or_default().merge(tally);
        }
    }

    /// Pretty JSON with keys sorted at every level, for diff-stable output.
    pub fn to_json_string(&self) -> String {
        let value = serde_json::to_value(self).expect("report serializes");
        serde_json::to_string_pretty(&value).expect("report serializes")
    }
}

/// Destination for filtered per-frame output. Implementations serialize
/// their own writes; frames arrive in nondeterministic order under
/// parallelism but each frame's content is deterministic.
pub trait FilterSink: Sync {
    fn write_labels(&self, frame_id: &str, contents: &str) -> io::Result<()>;

    /// Optional audit-trail hook; default drops the verdicts.
    fn write_verdicts(
        &self,
        _frame_id: &str,
        _source: &FrameAnnotations,
        _verdicts: &[FilterVerdict],
    ) -> io::Result<()> {
        Ok(())
    }
}

/// In-memory sink, mainly for tests.
#[derive(Debug, Default)]
pub struct MemorySink {
    files: Mutex<BTreeMap<String, String>>,
}

impl MemorySink {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn into_files(self) -> BTreeMap<String, String> {
        self.files.into_inner().expect("sink lock")
    }
}

impl FilterSink for MemorySink {
    fn write_labels(&self, frame_id: &str, contents: &str) -> io::Result<()> {
        self.files.lock().expect("sink lock").insert(frame_id.to_string(), contents.to_string());
        Ok(())
    }
}

/// Filter a stream of frames, writing one label file per frame through the
/// sink and returning merged tallies. Frames are processed in parallel on
/// the current rayon pool; the report and every written file are
/// deterministic regardless of scheduling.
pub fn filter_dataset<I>(
    frames: I,
    config: &FilterConfig,
    sink: &dyn FilterSink,
) -> Result<FilterReport, FilterError>
where
    I: IntoIterator<Item = Result<(PointCloud, FrameAnnotations), FilterError>>,
    I::IntoIter: Send,
    <I as IntoIterator>::Item: Send,
{
    let per_frame: Vec<(String, FilterReport)> = frames
        .into_iter()
        .par_bridge()
        .map(|item| {
            let (cloud, annotations) = item?;
            let frame_id = annotations.frame_id.clone();
            let filtered = apply_filters(&cloud, &annotations, config)?;
            let tag_io = |source: io::Error| FilterError::Io { frame_id: frame_id.clone(), source };
            sink.write_labels(&frame_id, &write_label_file(&filtered.kept)).map_err(tag_io)?;
            sink.write_verdicts(&frame_id, &annotations, &filtered.verdicts).map_err(tag_io)?;
            let report = FilterReport::from_frame(&annotations, &filtered.verdicts, config);
            Ok((frame_id, report))
        })
        .collect::<Result<_, FilterError>>()?;

    // merge in frame-id order so the report is scheduling-independent
    let mut sorted = per_frame;
    sorted.sort_by(|a, b| a.0.cmp(&b.0));
    let mut merged = FilterReport::default();
    for (_, report) in &sorted {
        merged.merge(report);
    }
    Ok(merged)
}
