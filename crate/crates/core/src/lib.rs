//! Curation and evaluation toolkit for LiDAR 3D-detection datasets.
//!
//! The crate has two halves:
//!
//! * **Curation** — [`filter`] applies three per-object validity constraints
//!   (sensor distance, in-box point count, occlusion level) to annotated
//!   point-cloud frames and splits each frame into kept and discarded
//!   objects, with an auditable verdict per object.
//! * **Evaluation** — [`eval`] matches detections to ground truth by IoU,
//!   builds precision–recall curves and computes average precision.
//!
//! Supporting modules: [`pointcloud`] parses `.bin`/`.xyz` clouds,
//! [`annotations`] parses and writes KITTI-style label files, and
//! [`geometry`] provides oriented-box containment, point counting and
//! BEV/3D IoU.

pub mod annotations;
pub mod eval;
pub mod filter;
pub mod geometry;
pub mod pointcloud;

pub use annotations::{
    parse_label_file, parse_occlusion_name, write_label_file, Box3D, FrameAnnotations,
    LabelError, ObjectAnnotation, OcclusionLevel,
};
pub use eval::{
    average_precision, evaluate, match_detections, pr_curve, ApMode, DetectionLabel, EvalConfig,
    EvalError, EvalResult, IouKind, PRPoint,
};
pub use filter::{
    apply_filters, filter_dataset, ConstraintKind, FilterConfig, FilterError, FilterReport,
    FilterSink, FilterTally, FilterVerdict, FilteredFrame, MemorySink,
};
pub use geometry::{
    bev_iou, box_corners, center_distance, count_points_in_box, iou_3d, point_in_box, BoxCorners,
};
pub use pointcloud::{
    encode_bin, parse_ascii_xyz, parse_bin, CloudParseError, ParseReport, Point3, PointCloud,
};
