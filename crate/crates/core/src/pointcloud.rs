//! Point-cloud frames and parsers for the two on-disk cloud formats.
//!
//! `.bin` files are headerless packed records of four little-endian `f32`s
//! per point (`x y z intensity`), the de-facto layout for LiDAR dumps.
//! `.xyz` files are whitespace-separated text with 3 or 4 numbers per line
//! and `#` comments.
//!
//! Points whose `x`, `y` or `z` is NaN or infinite are dropped during
//! parsing and tallied in a [`ParseReport`] instead of failing the frame;
//! real captures contain invalid returns.

use thiserror::Error;

/// Bytes per `.bin` record: four little-endian `f32`s.
pub const BIN_RECORD_SIZE: usize = 16;

/// One LiDAR return. Coordinates in meters, intensity as delivered by the
/// sensor (commonly in `[0, 1]`, but raw counts occur).
///
/// The same type doubles as a plain 3D position (box centers, sensor poses),
/// in which case `intensity` is zero and ignored by all geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub intensity: f64,
}

impl Point3 {
    pub fn new(x: f64, y: f64, z: f64, intensity: f64) -> Self {
        Point3 { x, y, z, intensity }
    }

    /// Position-only constructor; intensity set to zero.
    pub fn xyz(x: f64, y: f64, z: f64) -> Self {
        Point3 { x, y, z, intensity: 0.0 }
    }

    pub fn origin() -> Self {
        Point3::xyz(0.0, 0.0, 0.0)
    }

    /// True when all of `x`, `y`, `z` are finite. Intensity is not checked.
    pub fn has_finite_position(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

/// One sensor frame's worth of points, in file order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloud {
    /// Opaque identifier, typically the file stem.
    pub frame_id: String,
    pub points: Vec<Point3>,
}

impl PointCloud {
    pub fn new(frame_id: impl Into<String>, points: Vec<Point3>) -> Self {
        PointCloud { frame_id: frame_id.into(), points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Tally of what a parse saw and what it dropped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ParseReport {
    /// Records (or data lines) present in the input.
    pub total_records: usize,
    /// Points dropped because x/y/z contained NaN or an infinity.
    pub dropped_non_finite: usize,
}

#[derive(Debug, Error)]
pub enum CloudParseError {
    /// Binary input length is not a multiple of the record size.
    #[error("truncated record: {len} bytes is not a multiple of {record_size}")]
    TruncatedRecord { len: usize, record_size: usize },
    /// A text line had the wrong number of tokens or a non-numeric token.
    #[error("malformed line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },
}

/// Parse a packed binary cloud. Empty input yields an empty cloud; a length
/// that is not a multiple of 16 is a [`CloudParseError::TruncatedRecord`].
pub fn parse_bin(
    bytes: &[u8],
    frame_id: impl Into<String>,
) -> Result<(PointCloud, ParseReport), CloudParseError> {
    if !bytes.len().is_multiple_of(BIN_RECORD_SIZE) {
        return Err(CloudParseError::TruncatedRecord {
            len: bytes.len(),
            record_size: BIN_RECORD_SIZE,
        });
    }
    let mut report = ParseReport { total_records: bytes.len() / BIN_RECORD_SIZE, ..Default::default() };
    let mut points = Vec::with_capacity(report.total_records);
    for record in bytes.chunks_exact(BIN_RECORD_SIZE) {
        let field = |i: usize| {
            f32::from_le_bytes([record[4 * i], record[4 * i + 1], record[4 * i + 2], record[4 * i + 3]])
        };
        let p = Point3::new(
            field(0) as f64,
            field(1) as f64,
            field(2) as f64,
            field(3) as f64,
        );
        if p.has_finite_position() {
            points.push(p);
        } else {
            report.dropped_non_finite += 1;
        }
    }
    Ok((PointCloud::new(frame_id, points), report))
}

/// Serialize a cloud back to the packed binary layout. Inverse of
/// [`parse_bin`] whenever no point was dropped.
pub fn encode_bin(cloud: &PointCloud) -> Vec<u8> {
    let mut out = Vec::with_capacity(cloud.points.len() * BIN_RECORD_SIZE);
    for p in &cloud.points {
        out.extend_from_slice(&(p.x as f32).to_le_bytes());
        out.extend_from_slice(&(p.y as f32).to_le_bytes());
        out.extend_from_slice(&(p.z as f32).to_le_bytes());
        out.extend_from_slice(&(p.intensity as f32).to_le_bytes());
    }
    out
}

/// Parse whitespace-separated text: 3 or 4 numbers per line (intensity
/// defaults to 0), `#` comments and blank lines skipped, LF or CRLF.
pub fn parse_ascii_xyz(
    text: &str,
    frame_id: impl Into<String>,
) -> Result<(PointCloud, ParseReport), CloudParseError> {
    let mut points = Vec::new();
    let mut report = ParseReport::default();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        report.total_records += 1;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != 3 && tokens.len() != 4 {
            return Err(CloudParseError::MalformedLine {
                line: line_no,
                reason: format!("expected 3 or 4 fields, found {}", tokens.len()),
            });
        }
        let mut values = [0.0f64; 4];
        for (i, tok) in tokens.iter().enumerate() {
            values[i] = tok.parse::<f64>().map_err(|_| CloudParseError::MalformedLine {
                line: line_no,
                reason: format!("non-numeric token {tok:?}"),
            })?;
        }
        let p = Point3::new(values[0], values[1], values[2], values[3]);
        if p.has_finite_position() {
            points.push(p);
        } else {
            report.dropped_non_finite += 1;
        }
    }
    Ok((PointCloud::new(frame_id, points), report))
}
