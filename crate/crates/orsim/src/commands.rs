//! The five subcommands. Each reads its inputs, runs the core pipeline and
//! writes a single output file at the end.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use orsim_core::boosting::{positive_crop, train_detector, BoostedModel, NegativeImage, StageReport};
use orsim_core::detector::{detect, detection_order, nms, two_step_nms, Detection};
use orsim_core::evalkit::{evaluate, synth_corpus, AnnotatedBox};
use orsim_core::geometry::Rect;
use orsim_core::imaging::RasterImage;
use orsim_core::pyramid::{calibration_data, fit_lambda, LambdaTable};

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::formats::{self, DetectionRecord, EvalCounts};
use crate::io;

fn required<'a>(value: &'a Option<PathBuf>, key: &str) -> Result<&'a Path> {
    value.as_deref().ok_or_else(|| CliError::Config(format!("`{key}` is not set")))
}

fn output(out: Option<&Path>, configured: &Option<PathBuf>, key: &str) -> Result<PathBuf> {
    match out {
        Some(p) => Ok(p.to_path_buf()),
        None => required(configured, key).map(Path::to_path_buf),
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

/// Images of `dir` with their identifiers, gray replicated to RGB.
fn load_dir(dir: &Path) -> Result<Vec<(String, RasterImage)>> {
    io::list_images(dir)?.iter().map(|p| Ok((io::image_id(p), io::load_rgb(p)?))).collect()
}

pub fn load_model(path: &Path) -> Result<BoostedModel> {
    Ok(formats::read_model(&read_file(path)?, path)?.0)
}

pub fn load_lambda(path: &Path) -> Result<LambdaTable> {
    Ok(formats::read_lambda(&read_file(path)?, path)?.0)
}

/// Fit the lambda table on `calibration_images`.
pub fn calibrate(cfg: &RunConfig, out: Option<&Path>) -> Result<PathBuf> {
    let dest = output(out, &cfg.lambda_table, "lambda_table")?;
    let images: Vec<RasterImage> =
        load_dir(required(&cfg.calibration_images, "calibration_images")?)?.into_iter().map(|(_, i)| i).collect();
    let data = calibration_data(&images, &cfg.calibration_scales, &cfg.channel_config()?)?;
    let table = fit_lambda(&data)?;
    for e in &table.entries {
        eprintln!("{:<20} lambda {:>9.5}  R2 {:.4}", e.group.name(), e.lambda, e.r2);
    }
    write_file(&dest, &formats::write_lambda(&table, &data, &cfg.provenance()))?;
    Ok(dest)
}

fn group_boxes(boxes: Vec<AnnotatedBox>) -> BTreeMap<String, Vec<Rect>> {
    let mut by_id: BTreeMap<String, Vec<Rect>> = BTreeMap::new();
    for b in boxes {
        by_id.entry(b.image_id).or_default().push(b.rect);
    }
    by_id
}

fn print_stage(r: &StageReport) {
    if r.skipped {
        eprintln!("stage {}: skipped ({})", r.stage, r.stopped_early.as_deref().unwrap_or("no reason"));
        return;
    }
    eprintln!(
        "stage {}: {} trees, {} positives, {} negatives ({} mined), eps first {:.3e} last {:.3e}, exp loss {:.6e}",
        r.stage, r.weak_count, r.positives, r.negatives, r.mined, r.first_error, r.last_error, r.loss
    );
    if let Some(why) = &r.stopped_early {
        eprintln!("stage {}: stopped early: {why}", r.stage);
    }
}

/// Train a detector on `train_images` with boxes from `train_annotations`.
pub fn train(cfg: &RunConfig, out: Option<&Path>) -> Result<PathBuf> {
    let dest = output(out, &cfg.model, "model")?;
    let ann_path = required(&cfg.train_annotations, "train_annotations")?;
    let mut boxes = group_boxes(formats::read_annotations(&read_file(ann_path)?, ann_path)?);
    let lambda = load_lambda(required(&cfg.lambda_table, "lambda_table")?)?;
    let images = load_dir(required(&cfg.train_images, "train_images")?)?;
    let (channels, window) = (cfg.channel_config()?, cfg.window()?);

    let mut positives = Vec::new();
    let mut pool = Vec::with_capacity(images.len());
    for (id, image) in images {
        let truths = boxes.remove(&id).unwrap_or_default();
        for t in &truths {
            positives.push(positive_crop(&image, t, &window, &channels)?);
        }
        pool.push(NegativeImage { image, exclusions: truths });
    }
    if let Some(id) = boxes.keys().next() {
        return Err(CliError::Config(format!("annotations mention `{id}`, which has no image")));
    }
    let (model, reports) = train_detector(&positives, &pool, &channels, &window, &lambda, &cfg.train_params())?;
    reports.iter().for_each(print_stage);
    write_file(&dest, &formats::write_model(&model, &cfg.provenance()))?;
    Ok(dest)
}

/// Detections of `model` on one image after (two-step) NMS, best first.
pub fn detect_image(img: &RasterImage, model: &BoostedModel, cfg: &RunConfig) -> Result<Vec<Detection>> {
    let raw = detect(img, model, &cfg.detect_params())?;
    let mut kept =
        if cfg.two_step_nms { two_step_nms(&raw, cfg.nms_overlap, cfg.nms_containment) } else { nms(&raw, cfg.nms_overlap) };
    kept.sort_by(detection_order);
    Ok(kept)
}

/// Run the model over `detect_images`.
pub fn detect_dir(cfg: &RunConfig, out: Option<&Path>) -> Result<PathBuf> {
    let dest = output(out, &cfg.detections, "detections")?;
    let model = load_model(required(&cfg.model, "model")?)?;
    let mut records = Vec::new();
    for path in io::list_images(required(&cfg.detect_images, "detect_images")?)? {
        let id = io::image_id(&path);
        for d in detect_image(&io::load_rgb(&path)?, &model, cfg)? {
            records.push(DetectionRecord { image_id: id.clone(), rect: d.rect, score: d.score });
        }
    }
    write_file(&dest, &formats::write_detections(&records, &cfg.provenance()))?;
    Ok(dest)
}

/// PR curve path that accompanies a metrics report.
pub fn pr_path(metrics: &Path) -> PathBuf {
    metrics.with_extension("pr.csv")
}

/// Score `detections` against `annotations`; writes the report and the PR
/// curve next to it.
pub fn eval(cfg: &RunConfig, out: Option<&Path>) -> Result<PathBuf> {
    let dest = output(out, &cfg.metrics, "metrics")?;
    let det_path = required(&cfg.detections, "detections")?;
    let ann_path = required(&cfg.annotations, "annotations")?;
    let dets = formats::read_detections(&read_file(det_path)?, det_path)?;
    let truths = group_boxes(formats::read_annotations(&read_file(ann_path)?, ann_path)?);

    let mut per_image: BTreeMap<String, (Vec<Detection>, Vec<Rect>)> = BTreeMap::new();
    for (id, rects) in truths {
        per_image.entry(id).or_default().1 = rects;
    }
    let n_dets = dets.len();
    for d in dets {
        per_image.entry(d.image_id).or_default().0.push(Detection { rect: d.rect, score: d.score, level: 0 });
    }
    let pairs: Vec<(Vec<Detection>, Vec<Rect>)> = per_image.into_values().collect();
    let counts = EvalCounts { images: pairs.len(), truths: pairs.iter().map(|p| p.1.len()).sum(), detections: n_dets };
    let curve = evaluate(&pairs, cfg.match_iou)?;
    eprintln!("AP {:.4}  AR {:.4}  AF {:.4}  (IoU > {})", curve.ap, curve.ar, curve.af, cfg.match_iou);
    let prov = cfg.provenance();
    write_file(&pr_path(&dest), &formats::write_pr_csv(&curve, cfg.match_iou, &prov))?;
    write_file(&dest, &formats::write_metrics(&curve, cfg.match_iou, counts, &prov))?;
    Ok(dest)
}

/// Write a synthetic corpus: PNG images plus `annotations.txt`.
pub fn synth(cfg: &RunConfig, out: Option<&Path>) -> Result<PathBuf> {
    let dir = output(out, &cfg.synth_dir, "synth_dir")?;
    let corpus = synth_corpus(&cfg.synth_spec(), cfg.synth_count, cfg.seed)?;
    fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    let mut boxes = Vec::new();
    for s in &corpus {
        io::save_png(&s.image, &dir.join(format!("{}.png", s.id)))?;
        boxes.extend(s.truths.iter().cloned());
    }
    write_file(&dir.join("annotations.txt"), &formats::write_annotations(&boxes, &cfg.provenance()))?;
    Ok(dir)
}
