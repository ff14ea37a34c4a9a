//! Fixture builders shared by the CLI integration and acceptance tests.
#![allow(dead_code)] // each test target compiles its own subset

use lidarcull::annotations::{
    write_label_file, Box3D, FrameAnnotations, ObjectAnnotation, OcclusionLevel,
};
use lidarcull::pointcloud::{encode_bin, Point3, PointCloud};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn binary() -> &'static str {
    env!("CARGO_BIN_EXE_lidarcull")
}

pub fn run(args: &[&str]) -> Output {
    Command::new(binary()).args(args).output().expect("binary runs")
}

pub fn annotation(
    class: &str,
    box3d: Box3D,
    occlusion: OcclusionLevel,
    score: Option<f64>,
) -> ObjectAnnotation {
    ObjectAnnotation {
        class_name: class.to_string(),
        truncated: 0.0,
        alpha: 0.0,
        bbox_2d: [0.0; 4],
        box3d,
        occlusion,
        score,
        cached_point_count: None,
    }
}

pub fn cube(cx: f64, cy: f64, cz: f64, side: f64, yaw: f64) -> Box3D {
    Box3D::new(Point3::xyz(cx, cy, cz), side, side, side, yaw).unwrap()
}

/// `n` points strictly inside the box, spread along its local axes.
pub fn points_inside(b: &Box3D, n: usize) -> Vec<Point3> {
    let (sin, cos) = b.yaw.sin_cos();
    (0..n)
        .map(|i| {
            let t = (i as f64 + 1.0) / (n as f64 + 1.0); // in (0, 1)
            let lx = (t - 0.5) * 0.9 * b.length;
            let ly = (t - 0.5) * 0.8 * b.width;
            let lz = (t - 0.5) * 0.7 * b.height;
            Point3::new(
                b.center.x + lx * cos - ly * sin,
                b.center.y + lx * sin + ly * cos,
                b.center.z + lz,
                0.5,
            )
        })
        .collect()
}

/// Write `<frame_id>.bin` + `<frame_id>.txt` into `dir`.
pub fn write_frame(dir: &Path, cloud: &PointCloud, annotations: &FrameAnnotations) {
    fs::write(dir.join(format!("{}.bin", cloud.frame_id)), encode_bin(cloud)).unwrap();
    fs::write(
        dir.join(format!("{}.txt", annotations.frame_id)),
        write_label_file(annotations),
    )
    .unwrap();
}

/// A frame with one object per failure mode and one that passes all three
/// constraints under the default thresholds.
pub fn single_failure_frame(frame_id: &str) -> (PointCloud, FrameAnnotations) {
    let near = cube(2.0, 0.0, 0.0, 2.0, 0.3);
    let far = cube(30.0, 0.0, 0.0, 2.0, 0.0);
    let sparse = cube(2.0, 6.0, 0.0, 2.0, 1.1);
    let hidden = cube(2.0, -6.0, 0.0, 2.0, -0.7);

    let mut points = points_inside(&near, 25);
    points.extend(points_inside(&far, 25));
    points.extend(points_inside(&sparse, 4));
    points.extend(points_inside(&hidden, 25));
    points.push(Point3::new(80.0, 80.0, 3.0, 0.1)); // background clutter

    let annotations = FrameAnnotations::new(
        frame_id,
        vec![
            annotation("too_far", far, OcclusionLevel::FullyVisible, None),
            annotation("too_sparse", sparse, OcclusionLevel::MostlyVisible, None),
            annotation("occluded", hidden, OcclusionLevel::FullyOccluded, None),
            annotation("keeper", near, OcclusionLevel::SeverelyOccluded, None),
        ],
    );
    (PointCloud::new(frame_id, points), annotations)
}

/// Materialize `frames` single-failure frames as a dataset directory.
pub fn write_dataset(dir: &Path, frames: usize) -> PathBuf {
    fs::create_dir_all(dir).unwrap();
    for i in 0..frames {
        let (cloud, annotations) = single_failure_frame(&format!("{i:06}"));
        write_frame(dir, &cloud, &annotations);
    }
    dir.to_path_buf()
}

/// Byte-level snapshot of every file under `dir`, keyed by relative path.
pub fn snapshot(dir: &Path) -> std::collections::BTreeMap<String, Vec<u8>> {
    let mut files = std::collections::BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(current) = stack.pop() {
        for entry in fs::read_dir(&current).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let key = path.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                files.insert(key, fs::read(&path).unwrap());
            }
        }
    }
    files
}
