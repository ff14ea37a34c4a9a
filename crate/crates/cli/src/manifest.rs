//! Dataset manifests: which cloud file pairs with which label file.
//!
//! A manifest is either a text file of `cloud<TAB>label[<TAB>x,y,z]` lines
//! (paths relative to the manifest's directory, optional per-frame sensor
//! position) or a directory, in which case every `*.bin` is paired with the
//! same-stem `.txt` label file next to it. Frame ids are cloud file stems.

use crate::error::CliError;
use lidarcull::annotations::{parse_label_file, FrameAnnotations};
use lidarcull::filter::FilterError;
use lidarcull::pointcloud::{parse_ascii_xyz, parse_bin, Point3, PointCloud};
use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone)]
pub struct ManifestEntry {
    pub frame_id: String,
    pub cloud: PathBuf,
    pub labels: PathBuf,
    pub sensor_position: Option<Point3>,
}

#[derive(Debug, Clone, Default)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
}

fn stem_of(path: &Path) -> Result<String, CliError> {
    path.file_stem()
        .and_then(|s| s.to_str())
        .map(|s| s.to_string())
        .ok_or_else(|| CliError::Frame(format!("cannot derive a frame id from {}", path.display())))
}

impl DatasetManifest {
    /// Load from a manifest file or scan a directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let manifest = if path.is_dir() {
            Self::from_dir(path)?
        } else {
            Self::from_file(path)?
        };
        let mut seen = BTreeSet::new();
        for entry in &manifest.entries {
            if !seen.insert(entry.frame_id.clone()) {
                return Err(CliError::Frame(format!("duplicate frame id {:?}", entry.frame_id)));
            }
        }
        Ok(manifest)
    }

    fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Frame(format!("cannot read manifest {}: {e}", path.display())))?;
        let root = path.parent().unwrap_or_else(|| Path::new("."));
        let mut entries = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim_end();
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let columns: Vec<&str> = line.split('\t').collect();
            if columns.len() < 2 || columns.len() > 3 {
                return Err(CliError::Frame(format!(
                    "manifest line {}: expected cloud<TAB>label[<TAB>x,y,z], found {} column(s)",
                    idx + 1,
                    columns.len()
                )));
            }
            let cloud = root.join(columns[0].trim());
            let labels = root.join(columns[1].trim());
            let sensor_position = match columns.get(2) {
                Some(pose) => Some(parse_sensor_position(pose, idx + 1)?),
                None => None,
            };
            entries.push(ManifestEntry {
                frame_id: stem_of(&cloud)?,
                cloud,
                labels,
                sensor_position,
            });
        }
        Ok(DatasetManifest { entries })
    }

    fn from_dir(dir: &Path) -> Result<Self, CliError> {
        let mut clouds: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(|e| CliError::Frame(format!("cannot scan {}: {e}", dir.display())))?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .filter(|p| p.extension().and_then(|e| e.to_str()) == Some("bin"))
            .collect();
        clouds.sort();
        let mut entries = Vec::new();
        for cloud in clouds {
            let labels = cloud.with_extension("txt");
            entries.push(ManifestEntry {
                frame_id: stem_of(&cloud)?,
                cloud,
                labels,
                sensor_position: None,
            });
        }
        Ok(DatasetManifest { entries })
    }

    /// Every referenced file must exist before any output is written.
    pub fn validate_files_exist(&self) -> Result<(), CliError> {
        for entry in &self.entries {
            for path in [&entry.cloud, &entry.labels] {
                if !path.is_file() {
                    return Err(CliError::Frame(format!(
                        "frame {}: missing file {}",
                        entry.frame_id,
                        path.display()
                    )));
                }
            }
        }
        Ok(())
    }
}

fn parse_sensor_position(text: &str, line: usize) -> Result<Point3, CliError> {
    let parts: Vec<&str> = text.trim().split(',').collect();
    if parts.len() != 3 {
        return Err(CliError::Frame(format!(
            "manifest line {line}: sensor position must be x,y,z"
        )));
    }
    let mut values = [0.0f64; 3];
    for (slot, part) in values.iter_mut().zip(&parts) {
        *slot = part.trim().parse().map_err(|_| {
            CliError::Frame(format!("manifest line {line}: bad sensor coordinate {part:?}"))
        })?;
    }
    Ok(Point3::xyz(values[0], values[1], values[2]))
}

/// Read and parse one frame pair. `.bin` clouds are binary records,
/// anything else is treated as `.xyz` text.
pub fn load_frame(entry: &ManifestEntry) -> Result<(PointCloud, FrameAnnotations), FilterError> {
    let frame = |message: String| FilterError::Frame {
        frame_id: entry.frame_id.clone(),
        message,
    };
    let cloud = if entry.cloud.extension().and_then(|e| e.to_str()) == Some("bin") {
        let bytes = fs::read(&entry.cloud)
            .map_err(|e| frame(format!("cannot read {}: {e}", entry.cloud.display())))?;
        parse_bin(&bytes, &entry.frame_id).map_err(|e| frame(e.to_string()))?.0
    } else {
        let text = fs::read_to_string(&entry.cloud)
            .map_err(|e| frame(format!("cannot read {}: {e}", entry.cloud.display())))?;
        parse_ascii_xyz(&text, &entry.frame_id).map_err(|e| frame(e.to_string()))?.0
    };
    let text = fs::read_to_string(&entry.labels)
        .map_err(|e| frame(format!("cannot read {}: {e}", entry.labels.display())))?;
    let mut annotations =
        parse_label_file(&text, &entry.frame_id).map_err(|e| frame(e.to_string()))?;
    if let Some(position) = entry.sensor_position {
        annotations.sensor_position = position;
    }
    Ok((cloud, annotations))
}

/// Label-only manifest for evaluation: a directory of `*.txt` files, or a
/// manifest file whose lines are `label` or `cloud<TAB>label`.
pub fn load_label_frames(path: &Path) -> Result<BTreeMap<String, FrameAnnotations>, CliError> {
    let mut pairs: Vec<(String, PathBuf)> = Vec::new();
    if path.is_dir() {
        let mut files: Vec<PathBuf> = fs::read_dir(path)
            .map_err(|e| CliError::Frame(format!("cannot scan {}: {e}", path.display())))?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .filter(|p| p.extension().and_then(|e| e.to_str()) == Some("txt"))
            .collect();
        files.sort();
        for file in files {
            pairs.push((stem_of(&file)?, file));
        }
    } else {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Frame(format!("cannot read manifest {}: {e}", path.display())))?;
        let root = path.parent().unwrap_or_else(|| Path::new("."));
        for raw in text.lines() {
            let line = raw.trim_end();
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let columns: Vec<&str> = line.split('\t').collect();
            let labels = root.join(columns.last().expect("split yields a column").trim());
            let frame_id = if columns.len() >= 2 {
                stem_of(&root.join(columns[0].trim()))?
            } else {
                stem_of(&labels)?
            };
            pairs.push((frame_id, labels));
        }
    }

    let mut frames = BTreeMap::new();
    for (frame_id, file) in pairs {
        let text = fs::read_to_string(&file).map_err(|e| {
            CliError::Frame(format!("frame {frame_id}: cannot read {}: {e}", file.display()))
        })?;
        let annotations = parse_label_file(&text, &frame_id)
            .map_err(|e| CliError::Frame(format!("frame {frame_id}: {e}")))?;
        if frames.insert(frame_id.clone(), annotations).is_some() {
            return Err(CliError::Frame(format!("duplicate frame id {frame_id:?}")));
        }
    }
    Ok(frames)
}
