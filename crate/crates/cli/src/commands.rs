//! Implementations of the `filter`, `stats` and `eval` subcommands.

use crate::error::CliError;
use crate::manifest::{load_frame, load_label_frames, DatasetManifest};
use crate::{EvalArgs, FilterArgs, StatsArgs};
use lidarcull::annotations::FrameAnnotations;
use lidarcull::filter::{filter_dataset, FilterConfig, FilterSink, FilterVerdict};
use lidarcull::geometry::{center_distance, count_points_in_box};
use lidarcull::{evaluate, EvalConfig};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

/// Sink writing one `<frame_id>.txt` per frame, remembering what it created
/// so a failed run can be rolled back. Verdict rows are buffered and
/// rendered once, sorted, after the run succeeds.
struct DirSink {
    dir: PathBuf,
    created: Mutex<Vec<PathBuf>>,
    verdicts: Mutex<Vec<VerdictRow>>,
    collect_verdicts: bool,
}

struct VerdictRow {
    frame_id: String,
    object_index: usize,
    class_name: String,
    verdict: FilterVerdict,
}

impl DirSink {
    fn new(dir: &Path, collect_verdicts: bool) -> Self {
        DirSink {
            dir: dir.to_path_buf(),
            created: Mutex::new(Vec::new()),
            verdicts: Mutex::new(Vec::new()),
            collect_verdicts,
        }
    }

    fn track(&self, path: PathBuf) {
        self.created.lock().expect("sink lock").push(path);
    }

    fn write_tracked(&self, path: PathBuf, contents: &str) -> io::Result<()> {
        fs::write(&path, contents)?;
        self.track(path);
        Ok(())
    }

    /// Remove everything this run managed to write.
    fn rollback(&self) {
        let created = self.created.lock().expect("sink lock");
        for path in created.iter() {
            let _ = fs::remove_file(path);
        }
        let _ = fs::remove_dir(&self.dir); // only if now empty
    }

    fn verdicts_csv(&self) -> String {
        let mut rows = self.verdicts.lock().expect("sink lock");
        rows.sort_by(|a, b| {
            a.frame_id.cmp(&b.frame_id).then(a.object_index.cmp(&b.object_index))
        });
        let mut out =
            String::from("frame_id,object_index,class,kept,failed_constraints,distance,point_count\n");
        for row in rows.iter() {
            let failed = row
                .verdict
                .failed_constraints
                .iter()
                .map(|k| k.name())
                .collect::<Vec<_>>()
                .join("|");
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                row.frame_id,
                row.object_index,
                row.class_name,
                row.verdict.kept,
                failed,
                row.verdict.measured_distance,
                row.verdict.measured_point_count,
            ));
        }
        out
    }
}

impl FilterSink for DirSink {
    fn write_labels(&self, frame_id: &str, contents: &str) -> io::Result<()> {
        self.write_tracked(self.dir.join(format!("{frame_id}.txt")), contents)
    }

    fn write_verdicts(
        &self,
        frame_id: &str,
        source: &FrameAnnotations,
        verdicts: &[FilterVerdict],
    ) -> io::Result<()> {
        if !self.collect_verdicts {
            return Ok(());
        }
        let mut rows = self.verdicts.lock().expect("sink lock");
        for (object_index, (obj, verdict)) in source.objects.iter().zip(verdicts).enumerate() {
            rows.push(VerdictRow {
                frame_id: frame_id.to_string(),
                object_index,
                class_name: obj.class_name.clone(),
                verdict: verdict.clone(),
            });
        }
        Ok(())
    }
}

pub fn build_filter_config(args: &FilterArgs) -> Result<FilterConfig, CliError> {
    let mut config = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| {
                CliError::Config(format!("cannot read config {}: {e}", path.display()))
            })?;
            FilterConfig::from_key_values(&text).map_err(|e| CliError::Config(e.to_string()))?
        }
        None => FilterConfig::default(),
    };
    if let Some(eta) = args.eta {
        config.eta = eta;
    }
    if let Some(delta) = args.delta {
        config.delta = delta;
    }
    if let Some(list) = &args.discard_occlusions {
        config
            .set("discard_occlusions", list)
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    if args.disable_distance {
        config.enable_distance = false;
    }
    if args.disable_point_count {
        config.enable_point_count = false;
    }
    if args.disable_occlusion {
        config.enable_occlusion = false;
    }
    if args.disable_all {
        config.disable_all();
    }
    config.validate().map_err(|e| CliError::Config(e.to_string()))?;
    Ok(config)
}

pub fn cmd_filter(args: &FilterArgs) -> Result<(), CliError> {
    let config = build_filter_config(args)?;
    let manifest = DatasetManifest::load(&args.manifest)?;
    manifest.validate_files_exist()?;
    log::info!("filtering {} frame(s) into {}", manifest.entries.len(), args.output.display());

    fs::create_dir_all(&args.output)
        .map_err(|e| CliError::Frame(format!("cannot create {}: {e}", args.output.display())))?;
    let sink = DirSink::new(&args.output, args.verdicts);

    let frames = manifest.entries.iter().map(load_frame);
    let report = match filter_dataset(frames, &config, &sink) {
        Ok(report) => report,
        Err(e) => {
            sink.rollback();
            return Err(e.into());
        }
    };

    let finish = || -> io::Result<()> {
        if args.verdicts {
            sink.write_tracked(args.output.join("verdicts.csv"), &sink.verdicts_csv())?;
        }
        let report_json = serde_json::json!({
            "config": serde_json::to_value(&config).expect("config serializes"),
            "aggregate": serde_json::to_value(report.aggregate).expect("report serializes"),
            "per_class": serde_json::to_value(&report.per_class).expect("report serializes"),
            "per_frame": serde_json::to_value(&report.per_frame).expect("report serializes"),
        });
        let mut text = serde_json::to_string_pretty(&report_json).expect("report serializes");
        text.push('\n');
        sink.write_tracked(args.output.join("report.json"), &text)
    };
    if let Err(e) = finish() {
        sink.rollback();
        return Err(CliError::Frame(format!("cannot write report: {e}")));
    }

    println!(
        "kept {} of {} object(s) across {} frame(s); report: {}",
        report.aggregate.kept,
        report.aggregate.total,
        report.per_frame.len(),
        args.output.join("report.json").display(),
    );
    Ok(())
}

pub fn cmd_stats(args: &StatsArgs) -> Result<(), CliError> {
    let manifest = DatasetManifest::load(&args.manifest)?;
    manifest.validate_files_exist()?;

    let mut out = String::from("frame_id,class,distance,point_count,occlusion\n");
    for entry in &manifest.entries {
        let (cloud, annotations) = load_frame(entry)?;
        for obj in &annotations.objects {
            let distance = center_distance(annotations.sensor_position, &obj.box3d);
            let count = count_points_in_box(&cloud, &obj.box3d);
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                annotations.frame_id,
                obj.class_name,
                distance,
                count,
                obj.occlusion.name(),
            ));
        }
    }
    print!("{out}");
    Ok(())
}

pub fn cmd_eval(args: &EvalArgs) -> Result<(), CliError> {
    let config = EvalConfig {
        iou_threshold: args.iou_threshold,
        iou_kind: args.iou_kind.into(),
        ap_mode: args.ap_mode.into(),
    };
    config.validate().map_err(CliError::from)?;

    let gt_frames = load_label_frames(&args.gt)?;
    let det_frames = load_label_frames(&args.det)?;
    log::info!(
        "evaluating {} detection frame(s) against {} ground-truth frame(s)",
        det_frames.len(),
        gt_frames.len()
    );
    let result = evaluate(&gt_frames, &det_frames, &config)?;

    let summary = lidarcull::eval::summary_text(&result, &config);
    if let Some(dir) = &args.output {
        fs::create_dir_all(dir)
            .map_err(|e| CliError::Frame(format!("cannot create {}: {e}", dir.display())))?;
        let write = |name: &str, contents: &str| {
            fs::write(dir.join(name), contents)
                .map_err(|e| CliError::Frame(format!("cannot write {name}: {e}")))
        };
        write("summary.txt", &summary)?;
        write("pr_curve.csv", &lidarcull::eval::pr_curve_csv(&result.curve))?;
    }
    print!("{summary}");
    Ok(())
}
