use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use log::{info, warn};
use mapcore::config::{Intervals, PipelineConfig};
use mapcore::dedup::{dedup_with, Linkage};
use mapcore::detections::{load_detections, save_detections};
use mapcore::eval::{self, CoordErrorTable, ErrorRow, Pooling};
use mapcore::geojson::{self, load_records, load_references, to_pretty};
use mapcore::locate::{process_image, DepthAggregate, ImageResult, LocateOptions};
use mapcore::matching::{match_annotations, match_database, MatchOptions, MatchResult, Reference};
use mapcore::raster::{
    load_cloud, load_depth, load_labels, load_meta, save_depth, save_labels, save_meta, save_ply, DepthMap,
    RecordingMeta,
};
use mapcore::sim::{random_survey, render_depth, SurveyConfig};
use mapcore::{Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::args::{Aggregate, LinkageArg, Mode, PoolingArg};
use crate::report;

fn require<'a>(value: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
    value
        .as_deref()
        .ok_or_else(|| Error::InvalidParameter(format!("--{flag} is required")))
}

/// Files are produced in memory first and written only once everything
/// succeeded, so a failing run leaves no partial output.
#[derive(Default)]
struct Outputs {
    files: Vec<(PathBuf, Vec<u8>)>,
}

impl Outputs {
    fn text(&mut self, path: PathBuf, text: String) {
        self.files.push((path, text.into_bytes()));
    }

    fn json(&mut self, path: PathBuf, value: &impl Serialize) {
        self.text(path, to_pretty(value));
    }

    fn write(self) -> Result<()> {
        for (path, bytes) in self.files {
            if let Some(dir) = path.parent() {
                std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
            }
            std::fs::write(&path, bytes).map_err(|e| io_error(&path, e))?;
            info!("wrote {}", path.display());
        }
        Ok(())
    }
}

fn io_error(path: &Path, e: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source: e,
    }
}

fn create_out_dir(out: &Path) -> Result<()> {
    std::fs::create_dir_all(out).map_err(|e| io_error(out, e))
}

/// Adds a generation timestamp unless suppressed.
fn stamp(doc: &mut Value, cfg: &PipelineConfig) {
    if !cfg.no_timestamp {
        if let Value::Object(m) = doc {
            m.insert(
                "timestamp".into(),
                json!(chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)),
            );
        }
    }
}

fn pool(cfg: &PipelineConfig) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("worker pool: {e}")))
}

fn sorted_meta(path: &Path) -> Result<Vec<RecordingMeta>> {
    let mut metas = load_meta(path)?;
    metas.sort_by(|a, b| a.image_id.cmp(&b.image_id));
    Ok(metas)
}

fn depth_path(dir: &Path, image_id: &str, cfg: &PipelineConfig) -> PathBuf {
    dir.join(format!("{image_id}.{}", cfg.depth_format.extension()))
}

fn load_checked_depth(path: &Path, meta: &RecordingMeta, cfg: &PipelineConfig) -> Result<DepthMap> {
    let dm = load_depth(path, cfg.valid_range)?;
    let expected = (meta.intrinsics.width(), meta.intrinsics.height());
    if dm.dimensions() != expected {
        return Err(Error::Format {
            path: path.to_path_buf(),
            message: format!("raster is {:?}, metadata says {expected:?}", dm.dimensions()),
        });
    }
    Ok(dm)
}

pub fn locate(cfg: &PipelineConfig, aggregate: Aggregate) -> Result<()> {
    let meta_path = require(&cfg.meta, "meta")?;
    let depth_dir = require(&cfg.depth_dir, "depth-dir")?;
    let det_path = require(&cfg.detections, "detections")?;
    let out = require(&cfg.out, "out")?;
    let metas = sorted_meta(meta_path)?;
    let mut dets = load_detections(det_path)?;
    let known: std::collections::HashSet<&str> = metas.iter().map(|m| m.image_id.as_str()).collect();
    if let Some(unknown) = dets.keys().find(|k| !known.contains(k.as_str())) {
        return Err(Error::Format {
            path: det_path.to_path_buf(),
            message: format!("detections for image {unknown:?}, which has no metadata"),
        });
    }
    let opts = LocateOptions {
        earth: cfg.earth()?,
        aggregate: match aggregate {
            Aggregate::Mean => DepthAggregate::Mean,
            Aggregate::Median => DepthAggregate::Median,
        },
        ..LocateOptions::default()
    };
    let jobs: Vec<(RecordingMeta, Vec<_>)> = metas
        .into_iter()
        .map(|m| {
            let d = dets.remove(&m.image_id).unwrap_or_default();
            (m, d)
        })
        .collect();
    let results: Vec<ImageResult> = pool(cfg)?.install(|| {
        jobs.par_iter()
            .map(|(meta, dets)| {
                if dets.is_empty() {
                    return Ok(ImageResult::default());
                }
                let dm = load_checked_depth(&depth_path(depth_dir, &meta.image_id, cfg), meta, cfg)?;
                process_image(meta, &dm, dets, &opts)
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let mut records = Vec::new();
    let mut skipped = Vec::new();
    for r in results {
        records.extend(r.records);
        skipped.extend(
            r.skipped
                .into_iter()
                .map(|s| json!({"image_id": s.image_id, "detection": s.detection, "reason": s.reason})),
        );
    }
    info!("located {} objects, skipped {}", records.len(), skipped.len());

    let mut doc = geojson::records_to_geojson(&records);
    stamp(&mut doc, cfg);
    let mut skipped_doc = json!({"skipped": skipped});
    stamp(&mut skipped_doc, cfg);
    let mut o = Outputs::default();
    o.json(out.join("records.geojson"), &doc);
    o.json(out.join("skipped.json"), &skipped_doc);
    create_out_dir(out)?;
    o.write()
}

fn find_cloud(dir: &Path, image_id: &str) -> Result<PathBuf> {
    ["ply", "xyz"]
        .iter()
        .map(|ext| dir.join(format!("{image_id}.{ext}")))
        .find(|p| p.exists())
        .ok_or_else(|| {
            io_error(
                &dir.join(format!("{image_id}.ply")),
                std::io::Error::new(std::io::ErrorKind::NotFound, "no .ply or .xyz point cloud"),
            )
        })
}

#[derive(Serialize, Deserialize)]
pub struct EvalDepthDoc {
    pub pooling: Pooling,
    pub bins: Vec<f64>,
    pub images: usize,
    pub skipped_images: Vec<String>,
    pub rows: Vec<ErrorRow>,
}

pub fn eval_depth(cfg: &PipelineConfig, pooling: PoolingArg) -> Result<()> {
    let meta_path = require(&cfg.meta, "meta")?;
    let depth_dir = require(&cfg.depth_dir, "depth-dir")?;
    let out = require(&cfg.out, "out")?;
    if cfg.truth_dir.is_some() == cfg.cloud_dir.is_some() {
        return Err(Error::InvalidParameter(
            "exactly one of --truth-dir and --cloud-dir is required".into(),
        ));
    }
    let metas = sorted_meta(meta_path)?;
    let per_image: Vec<(String, Result<eval::ErrorReport>)> = pool(cfg)?.install(|| {
        metas
            .par_iter()
            .map(|meta| -> Result<(String, Result<eval::ErrorReport>)> {
                let id = &meta.image_id;
                let pred = load_checked_depth(&depth_path(depth_dir, id, cfg), meta, cfg)?;
                let truth = match (&cfg.truth_dir, &cfg.cloud_dir) {
                    (Some(dir), _) => load_checked_depth(&depth_path(dir, id, cfg), meta, cfg)?,
                    (None, Some(dir)) => {
                        let cloud = load_cloud(&find_cloud(dir, id)?)?;
                        eval::project_cloud(&cloud, &meta.intrinsics, cfg.valid_range)
                    }
                    (None, None) => unreachable!(),
                };
                let labels = match &cfg.labels_dir {
                    Some(dir) => Some(load_labels(&dir.join(format!("{id}.png")))?),
                    None => None,
                };
                Ok((
                    id.clone(),
                    eval::depth_errors(&pred, &truth, labels.as_ref(), &cfg.bins),
                ))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let mut reports = Vec::new();
    let mut skipped_images = Vec::new();
    for (id, r) in per_image {
        match r {
            Ok(r) => reports.push(r),
            Err(Error::EmptyReport) => {
                warn!("{id}: no pixel valid in both maps");
                skipped_images.push(id);
            }
            Err(e) => return Err(e),
        }
    }
    let pooling = match pooling {
        PoolingArg::Pixel => Pooling::PerPixel,
        PoolingArg::Image => Pooling::PerImage,
    };
    let rows = eval::aggregate(&reports, pooling)?;
    let doc = EvalDepthDoc {
        pooling,
        bins: cfg.bins.edges().to_vec(),
        images: reports.len(),
        skipped_images,
        rows,
    };
    let mut value = serde_json::to_value(&doc).expect("report serializes");
    stamp(&mut value, cfg);
    let mut o = Outputs::default();
    o.json(out.join("eval_depth.json"), &value);
    o.text(out.join("eval_depth.csv"), rows_csv(&doc.rows));
    create_out_dir(out)?;
    o.write()
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn rows_csv(rows: &[ErrorRow]) -> String {
    let mut s = String::from("group,bin,count,mae_m,are,median_are\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.group,
            r.bin,
            r.count,
            opt(r.mae_m),
            opt(r.are),
            opt(r.median_are)
        ));
    }
    s
}

pub fn dedup(cfg: &PipelineConfig, linkage: LinkageArg) -> Result<()> {
    let records_path = require(&cfg.records, "records")?;
    let out = require(&cfg.out, "out")?;
    let records = load_records(records_path)?;
    let linkage = match linkage {
        LinkageArg::Transitive => Linkage::Transitive,
        LinkageArg::Strict => Linkage::StrictDiameter,
    };
    let merged = dedup_with(&records, cfg.radius, linkage, &cfg.earth()?)?;
    info!("{} records merged into {}", records.len(), merged.len());
    let mut doc = geojson::records_to_geojson(&merged);
    stamp(&mut doc, cfg);
    let mut o = Outputs::default();
    o.json(out.join("dedup.geojson"), &doc);
    create_out_dir(out)?;
    o.write()
}

pub fn run_match(cfg: &PipelineConfig, mode: Mode, intervals: Option<Intervals>) -> Result<()> {
    let records_path = require(&cfg.records, "records")?;
    let refs_path = require(&cfg.refs, "refs")?;
    let out = require(&cfg.out, "out")?;
    let records = load_records(records_path)?;
    let refs = load_references(refs_path)?;
    let opts = MatchOptions {
        max_dist_m: cfg.max_dist,
        intervals: intervals.unwrap_or_else(Intervals::sign_intervals),
        earth: cfg.earth()?,
    };
    let result = match mode {
        Mode::Annotations => match_annotations(&records, &refs, &opts)?,
        Mode::Database => match_database(&records, &refs, cfg.radius, cfg.bearing_tol, &opts)?,
    };
    info!(
        "matched {} of {} references ({:.1}%)",
        result.summary.matched,
        result.summary.references,
        100.0 * result.summary.found_fraction
    );
    let mut value = serde_json::to_value(&result).expect("match result serializes");
    stamp(&mut value, cfg);
    let mut o = Outputs::default();
    o.json(out.join("match.json"), &value);
    o.text(out.join("match.csv"), pairs_csv(&result));
    create_out_dir(out)?;
    o.write()
}

fn pairs_csv(m: &MatchResult) -> String {
    let mut s = String::from("pred_id,ref_id,class,distance_m,est_cam_dist_m,true_cam_dist_m\n");
    for p in &m.pairs {
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            csv_field(&p.pred_id),
            csv_field(&p.ref_id),
            csv_field(&p.class),
            p.distance_m,
            p.est_cam_dist_m,
            opt(p.true_cam_dist_m)
        ));
    }
    s
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub struct SimArgs {
    pub seed: u64,
    pub images: usize,
    pub per_image: usize,
    pub noise: f64,
    pub width: u32,
    pub height: u32,
    pub focal: f64,
}

pub fn simulate(cfg: &PipelineConfig, a: SimArgs) -> Result<()> {
    let out = require(&cfg.out, "out")?;
    if !(a.noise.is_finite() && a.noise >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "noise must be non-negative, got {}",
            a.noise
        )));
    }
    let survey = SurveyConfig {
        seed: a.seed,
        images: a.images,
        billboards_per_image: a.per_image,
        width: a.width,
        height: a.height,
        focal_px: a.focal,
        ..SurveyConfig::default()
    };
    let mut specs = random_survey(&survey)?;
    for s in &mut specs {
        s.depth_noise = a.noise;
        s.earth = cfg.earth()?;
        s.valid_range = cfg.valid_range;
        s.validate()?;
    }
    let scenes = pool(cfg)?.install(|| specs.par_iter().map(render_depth).collect::<Result<Vec<_>>>())?;

    let stage = tempdir_in(out)?;
    let result = (|| -> Result<()> {
        let fmt = cfg.depth_format;
        let mut dets = BTreeMap::new();
        let mut truth = Vec::new();
        for (spec, scene) in specs.iter().zip(&scenes) {
            let id = &spec.meta.image_id;
            for d in &scene.diagnostics {
                warn!("{id}: {d}");
            }
            let put = |sub: &str, name: String| -> Result<PathBuf> {
                let dir = stage.join(sub);
                std::fs::create_dir_all(&dir).map_err(|e| io_error(&dir, e))?;
                Ok(dir.join(name))
            };
            let ext = fmt.extension();
            save_depth(&put("depth", format!("{id}.{ext}"))?, &scene.depth, fmt)?;
            save_depth(&put("depth_pinhole", format!("{id}.{ext}"))?, &scene.pinhole_depth, fmt)?;
            save_labels(&put("labels", format!("{id}.png"))?, &scene.labels)?;
            save_labels(&put("labels_pinhole", format!("{id}.png"))?, &scene.pinhole_labels)?;
            save_ply(&put("cloud", format!("{id}.ply"))?, &scene.cloud)?;
            dets.insert(id.clone(), scene.detections.clone());
            truth.extend(scene.truth.iter().map(|t| Reference {
                id: t.id.clone(),
                class: t.class.clone(),
                point: t.point,
            }));
        }
        let metas: Vec<RecordingMeta> = specs.iter().map(|s| s.meta.clone()).collect();
        save_meta(&stage.join("meta.csv"), &metas)?;
        save_detections(&stage.join("detections.jsonl"), &dets)?;
        geojson::save_references_csv(&stage.join("refs.csv"), &truth)?;
        let mut doc = geojson::references_to_geojson(&truth);
        stamp(&mut doc, cfg);
        std::fs::write(stage.join("truth.geojson"), to_pretty(&doc)).map_err(|e| io_error(&stage, e))?;
        let mut manifest = json!({
            "seed": a.seed,
            "images": a.images,
            "billboards_per_image": a.per_image,
            "noise": a.noise,
            "width": a.width,
            "height": a.height,
            "focal_px": a.focal,
            "depth_format": fmt.extension(),
            "billboards": truth.len(),
        });
        stamp(&mut manifest, cfg);
        std::fs::write(stage.join("simulation.json"), to_pretty(&manifest)).map_err(|e| io_error(&stage, e))?;
        publish(&stage, out)
    })();
    let _ = std::fs::remove_dir_all(&stage);
    if result.is_ok() {
        info!("simulated {} images into {}", specs.len(), out.display());
    }
    result
}

/// Staging directory next to `out`, so the final moves stay on one filesystem.
fn tempdir_in(out: &Path) -> Result<PathBuf> {
    create_out_dir(out)?;
    let stage = out.join(format!(".staging-{}", std::process::id()));
    if stage.exists() {
        std::fs::remove_dir_all(&stage).map_err(|e| io_error(&stage, e))?;
    }
    create_out_dir(&stage)?;
    Ok(stage)
}

fn publish(stage: &Path, out: &Path) -> Result<()> {
    for entry in std::fs::read_dir(stage).map_err(|e| io_error(stage, e))? {
        let entry = entry.map_err(|e| io_error(stage, e))?;
        let target = out.join(entry.file_name());
        if target.is_dir() {
            std::fs::remove_dir_all(&target).map_err(|e| io_error(&target, e))?;
        }
        std::fs::rename(entry.path(), &target).map_err(|e| io_error(&target, e))?;
    }
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

pub fn report(
    cfg: &PipelineConfig,
    eval_json: Option<&Path>,
    match_json: Option<&Path>,
    intervals: Option<Intervals>,
    svg: Option<&Path>,
) -> Result<()> {
    if eval_json.is_none() && match_json.is_none() {
        return Err(Error::InvalidParameter("report needs --eval and/or --match".into()));
    }
    if svg.is_some() && match_json.is_none() {
        return Err(Error::InvalidParameter("--svg needs --match".into()));
    }
    let depth: Option<EvalDepthDoc> = eval_json.map(read_json).transpose()?;
    let matched: Option<MatchResult> = match_json.map(read_json).transpose()?;
    let intervals = intervals.unwrap_or_else(Intervals::sign_intervals);
    let table: Option<CoordErrorTable> = matched
        .as_ref()
        .map(|m| eval::coord_error_stats_from_matches(m, &intervals));

    let mut text = String::new();
    if let Some(d) = &depth {
        text.push_str(&report::depth_table(d));
    }
    if let (Some(m), Some(t)) = (&matched, &table) {
        if !text.is_empty() {
            text.push('\n');
        }
        text.push_str(&report::match_table(m, t));
    }
    print!("{text}");

    let mut o = Outputs::default();
    if let (Some(path), Some(t)) = (svg, &table) {
        o.text(
            path.to_path_buf(),
            eval::boxplot_svg(t, "Coordinate error by camera distance"),
        );
    }
    if let Some(out) = &cfg.out {
        o.text(out.join("report.txt"), text.clone());
        let mut summary = Map::new();
        if let Some(t) = &table {
            summary.insert(
                "coordinate_errors".into(),
                serde_json::to_value(t).expect("table serializes"),
            );
        }
        if let Some(d) = &depth {
            summary.insert(
                "depth_errors".into(),
                serde_json::to_value(&d.rows).expect("rows serialize"),
            );
        }
        let mut v = Value::Object(summary);
        stamp(&mut v, cfg);
        o.json(out.join("report.json"), &v);
        create_out_dir(out)?;
    }
    o.write()
}
