//! Oriented-box geometry: containment, per-box point counting,
//! sensor-to-box distance, and rectangle/box overlap (BEV and 3D IoU).
//!
//! Boxes rotate about the vertical axis only, so every 3D computation
//! factors into a rotated-rectangle problem in the ground plane and an
//! interval problem along z. BEV overlap is computed by clipping one
//! rectangle against the other (Sutherland–Hodgman on convex input) and
//! taking the shoelace area of the result.

use crate::annotations::Box3D;
use crate::pointcloud::{Point3, PointCloud};

/// Tolerance for the point-on-edge decision during polygon clipping.
/// Rectangles are convex, so clipping is robust at this scale.
const CLIP_EPS: f64 = 1e-9;

/// The eight vertices of a box. Indices 0–3 are the bottom face,
/// counter-clockwise when viewed from above, starting at the corner that
/// lies at local (+length/2, +width/2); indices 4–7 are the top face in the
/// same x-y order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxCorners(pub [Point3; 8]);

/// Footprint corners in the ground plane, counter-clockwise.
pub fn bev_corners(b: &Box3D) -> [[f64; 2]; 4] {
    let (sin, cos) = b.yaw.sin_cos();
    let (hl, hw) = (b.length * 0.5, b.width * 0.5);
    let rotate = |x: f64, y: f64| {
        [b.center.x + x * cos - y * sin, b.center.y + x * sin + y * cos]
    };
    [rotate(hl, hw), rotate(-hl, hw), rotate(-hl, -hw), rotate(hl, -hw)]
}

/// Compute the eight world-space corners of a box.
pub fn box_corners(b: &Box3D) -> BoxCorners {
    let bev = bev_corners(b);
    let hh = b.height * 0.5;
    let mut corners = [Point3::origin(); 8];
    for (i, [x, y]) in bev.iter().enumerate() {
        corners[i] = Point3::xyz(*x, *y, b.center.z - hh);
        corners[i + 4] = Point3::xyz(*x, *y, b.center.z + hh);
    }
    BoxCorners(corners)
}

/// Euclidean distance between the sensor position and the box center.
pub fn center_distance(sensor: Point3, b: &Box3D) -> f64 {
    center_distance_squared(sensor, b).sqrt()
}

/// Squared Euclidean distance between the sensor position and the box
/// center.
pub fn center_distance_squared(sensor: Point3, b: &Box3D) -> f64 {
    let dx = sensor.x - b.center.x;
    let dy = sensor.y - b.center.y;
    let dz = sensor.z - b.center.z;
    dx * dx + dy * dy + dz * dz
}

/// Boundary-inclusive containment: `p` is inside `b` iff its box-frame
/// coordinates satisfy |x| <= length/2, |y| <= width/2, |z| <= height/2.
pub fn point_in_box(p: Point3, b: &Box3D) -> bool {
    let dz = p.z - b.center.z;
    if dz.abs() > b.height * 0.5 {
        return false;
    }
    let dx = p.x - b.center.x;
    let dy = p.y - b.center.y;
    let (sin, cos) = b.yaw.sin_cos();
    let local_x = dx * cos + dy * sin;
    let local_y = -dx * sin + dy * cos;
    local_x.abs() <= b.length * 0.5 && local_y.abs() <= b.width * 0.5
}

/// Number of cloud points inside the box (boundary inclusive). Equivalent
/// to filtering the cloud through [`point_in_box`]; hoists the rotation and
/// adds a cheap radius reject for large clouds.
pub fn count_points_in_box(cloud: &PointCloud, b: &Box3D) -> usize {
    let (sin, cos) = b.yaw.sin_cos();
    let (hl, hw, hh) = (b.length * 0.5, b.width * 0.5, b.height * 0.5);
    // Any contained point has |dx|, |dy| <= hypot(hl, hw).
    let radius = hl.hypot(hw);
    let c = b.center;
    cloud
        .points
        .iter()
        .filter(|p| {
            let dz = p.z - c.z;
            if dz.abs() > hh {
                return false;
            }
            let dx = p.x - c.x;
            let dy = p.y - c.y;
            if dx.abs() > radius || dy.abs() > radius {
                return false;
            }
            let local_x = dx * cos + dy * sin;
            let local_y = -dx * sin + dy * cos;
            local_x.abs() <= hl && local_y.abs() <= hw
        })
        .count()
}

/// Intersection-over-union of the two yaw-rotated footprint rectangles.
pub fn bev_iou(a: &Box3D, b: &Box3D) -> f64 {
    let inter = bev_intersection_area(a, b);
    let union = a.length * a.width + b.length * b.width - inter;
    if union <= 0.0 {
        return 0.0;
    }
    (inter / union).clamp(0.0, 1.0)
}

/// 3D IoU for upright boxes: BEV intersection area times vertical overlap,
/// over the union of the two volumes. Disjoint z extents give 0 regardless
/// of BEV overlap.
pub fn iou_3d(a: &Box3D, b: &Box3D) -> f64 {
    let (ha, hb) = (a.height * 0.5, b.height * 0.5);
    let z_lo = (a.center.z - ha).max(b.center.z - hb);
    let z_hi = (a.center.z + ha).min(b.center.z + hb);
    let dz = z_hi - z_lo;
    if dz <= 0.0 {
        return 0.0;
    }
    let inter = bev_intersection_area(a, b) * dz;
    let union = a.volume() + b.volume() - inter;
    if union <= 0.0 {
        return 0.0;
    }
    (inter / union).clamp(0.0, 1.0)
}

fn bev_intersection_area(a: &Box3D, b: &Box3D) -> f64 {
    let clipped = clip_convex(&bev_corners(a), &bev_corners(b));
    polygon_area(&clipped)
}

/// Signed test: is `q` on the inner (left) side of the directed edge
/// `a -> b` of a counter-clockwise polygon? Points within CLIP_EPS of the
/// edge count as inside.
fn inside_edge(q: [f64; 2], a: [f64; 2], b: [f64; 2]) -> bool {
    (b[0] - a[0]) * (q[1] - a[1]) - (b[1] - a[1]) * (q[0] - a[0]) >= -CLIP_EPS
}

fn edge_intersection(s: [f64; 2], e: [f64; 2], a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    let d1 = [e[0] - s[0], e[1] - s[1]];
    let d2 = [b[0] - a[0], b[1] - a[1]];
    let denom = d1[0] * d2[1] - d1[1] * d2[0];
    if denom.abs() < 1e-12 {
        // Near-parallel edges only reach here on sign flips within
        // tolerance; either endpoint is on the clip line.
        return e;
    }
    let t = ((a[0] - s[0]) * d2[1] - (a[1] - s[1]) * d2[0]) / denom;
    [s[0] + t * d1[0], s[1] + t * d1[1]]
}

/// Sutherland–Hodgman clip of a convex subject polygon against a convex
/// counter-clockwise clip polygon.
fn clip_convex(subject: &[[f64; 2]], clip: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut output: Vec<[f64; 2]> = subject.to_vec();
    for i in 0..clip.len() {
        if output.is_empty() {
            break;
        }
        let a = clip[i];
        let b = clip[(i + 1) % clip.len()];
        let input = std::mem::take(&mut output);
        for j in 0..input.len() {
            let s = input[(j + input.len() - 1) % input.len()];
            let e = input[j];
            let e_in = inside_edge(e, a, b);
            let s_in = inside_edge(s, a, b);
            if e_in {
                if !s_in {
                    output.push(edge_intersection(s, e, a, b));
                }
                output.push(e);
            } else if s_in {
                output.push(edge_intersection(s, e, a, b));
            }
        }
    }
    output
}

/// Shoelace area of a simple polygon.
fn polygon_area(poly: &[[f64; 2]]) -> f64 {
    if poly.len() < 3 {
        return 0.0;
    }
    let mut twice_area = 0.0;
    for i in 0..poly.len() {
        let [x0, y0] = poly[i];
        let [x1, y1] = poly[(i + 1) % poly.len()];
        twice_area += x0 * y1 - x1 * y0;
    }
    twice_area.abs() * 0.5
}
