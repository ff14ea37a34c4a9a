//! Synthetic workload generators for the benchmarks.

use lidarcull::annotations::{Box3D, FrameAnnotations, ObjectAnnotation, OcclusionLevel};
use lidarcull::pointcloud::{Point3, PointCloud};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random_box(rng: &mut impl Rng) -> Box3D {
    Box3D::new(
        Point3::xyz(
            rng.gen_range(-40.0..40.0),
            rng.gen_range(-40.0..40.0),
            rng.gen_range(-2.0..2.0),
        ),
        rng.gen_range(0.4..5.0),
        rng.gen_range(0.4..5.0),
        rng.gen_range(0.4..5.0),
        rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI),
    )
    .unwrap()
}

pub fn random_cloud(seed: u64, points: usize) -> PointCloud {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    PointCloud::new(
        "bench",
        (0..points)
            .map(|_| {
                Point3::new(
                    rng.gen_range(-50.0..50.0),
                    rng.gen_range(-50.0..50.0),
                    rng.gen_range(-2.0..3.0),
                    rng.gen_range(0.0..1.0),
                )
            })
            .collect(),
    )
}

pub fn random_frame(seed: u64, points: usize, boxes: usize) -> (PointCloud, FrameAnnotations) {
    let cloud = random_cloud(seed, points);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5EED);
    let objects: Vec<ObjectAnnotation> = (0..boxes)
        .map(|i| ObjectAnnotation {
            class_name: format!("class{}", i % 4),
            truncated: 0.0,
            alpha: 0.0,
            bbox_2d: [0.0; 4],
            box3d: random_box(&mut rng),
            occlusion: OcclusionLevel::ALL[i % 4],
            score: None,
            cached_point_count: None,
        })
        .collect();
    (cloud, FrameAnnotations::new("bench", objects))
}
