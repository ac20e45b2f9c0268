//! Line-oriented records: annotations, detections, PR curves and metrics.

use std::fmt::Write as _;
use std::path::Path;

use orsim_core::evalkit::{AnnotatedBox, PrCurve};
use orsim_core::geometry::Rect;

use super::write_provenance;
use crate::config::Provenance;
use crate::error::{CliError, Result};

/// One detection line: `image_id x y w h score`.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionRecord {
    pub image_id: String,
    pub rect: Rect,
    pub score: f64,
}

/// Non-comment lines with their 1-based numbers, split on whitespace.
fn records(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(n, l)| {
        let l = l.trim();
        (!l.is_empty() && !l.starts_with('#')).then(|| (n + 1, l.split_whitespace().collect()))
    })
}

fn parse_f64(path: &Path, line: usize, token: &str) -> Result<f64> {
    token
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| CliError::parse(path, line, format!("`{token}` is not a finite number")))
}

fn parse_rect(path: &Path, line: usize, t: &[&str]) -> Result<Rect> {
    let r = Rect::new(parse_f64(path, line, t[0])?, parse_f64(path, line, t[1])?, parse_f64(path, line, t[2])?, parse_f64(path, line, t[3])?);
    if !(r.w > 0.0 && r.h > 0.0) {
        return Err(CliError::parse(path, line, "box width and height must be positive"));
    }
    Ok(r)
}

/// Parse `image_id x y w h label` lines; `#` starts a comment line.
pub fn read_annotations(text: &str, path: &Path) -> Result<Vec<AnnotatedBox>> {
    records(text)
        .map(|(n, t)| {
            if t.len() != 6 {
                return Err(CliError::parse(path, n, "expected `image_id x y w h label`"));
            }
            Ok(AnnotatedBox { image_id: t[0].to_string(), rect: parse_rect(path, n, &t[1..5])?, label: t[5].to_string() })
        })
        .collect()
}

pub fn write_annotations(boxes: &[AnnotatedBox], provenance: &Provenance) -> String {
    let mut s = String::from("# orsim-annotations v1\n");
    header_comments(&mut s, provenance);
    s.push_str("# image_id x y w h label\n");
    for b in boxes {
        let r = &b.rect;
        let _ = writeln!(s, "{} {:.3} {:.3} {:.3} {:.3} {}", b.image_id, r.x, r.y, r.w, r.h, b.label);
    }
    s
}

fn header_comments(s: &mut String, provenance: &Provenance) {
    let mut p = String::new();
    write_provenance(&mut p, provenance);
    for line in p.lines() {
        let _ = writeln!(s, "# {line}");
    }
}

/// Parse `image_id x y w h score` lines.
pub fn read_detections(text: &str, path: &Path) -> Result<Vec<DetectionRecord>> {
    records(text)
        .map(|(n, t)| {
            if t.len() != 6 {
                return Err(CliError::parse(path, n, "expected `image_id x y w h score`"));
            }
            Ok(DetectionRecord {
                image_id: t[0].to_string(),
                rect: parse_rect(path, n, &t[1..5])?,
                score: parse_f64(path, n, t[5])?,
            })
        })
        .collect()
}

/// Detections in the given order, boxes to 2 decimals and scores to 4.
pub fn write_detections(dets: &[DetectionRecord], provenance: &Provenance) -> String {
    let mut s = String::from("# orsim-detections v1\n");
    header_comments(&mut s, provenance);
    s.push_str("# image_id x y w h score\n");
    for d in dets {
        let r = &d.rect;
        let _ = writeln!(s, "{} {:.2} {:.2} {:.2} {:.2} {:.4}", d.image_id, r.x, r.y, r.w, r.h, d.score);
    }
    s
}

/// PR curve as `threshold,recall,precision` rows followed by an `AP,AR,AF`
/// summary.
pub fn write_pr_csv(curve: &PrCurve, iou: f64, provenance: &Provenance) -> String {
    let mut s = String::from("# orsim-pr v1\n");
    header_comments(&mut s, provenance);
    let _ = writeln!(s, "# iou_threshold {iou}\n# interpolation all-points");
    s.push_str("threshold,recall,precision\n");
    for p in &curve.points {
        let _ = writeln!(s, "{:.6},{:.6},{:.6}", p.threshold, p.recall, p.precision);
    }
    let _ = writeln!(s, "AP,AR,AF\n{:.6},{:.6},{:.6}", curve.ap, curve.ar, curve.af);
    s
}

/// Summary counts that go with a metrics report.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvalCounts {
    pub images: usize,
    pub truths: usize,
    pub detections: usize,
}

pub fn write_metrics(curve: &PrCurve, iou: f64, counts: EvalCounts, provenance: &Provenance) -> String {
    let mut s = String::from("orsim-metrics v1\n");
    write_provenance(&mut s, provenance);
    let _ = writeln!(s, "iou_threshold {iou}");
    s.push_str("interpolation all-points\noperating_point f1-max\n");
    let _ = writeln!(s, "images {}\ntruths {}\ndetections {}", counts.images, counts.truths, counts.detections);
    let _ = writeln!(s, "AP {:.6}\nAR {:.6}\nAF {:.6}", curve.ap, curve.ar, curve.af);
    let _ = writeln!(s, "no_detections {}", curve.no_detections);
    s
}
