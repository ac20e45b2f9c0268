use std::path::Path;

use orsim::formats::{read_annotations, read_detections, write_annotations, write_detections, DetectionRecord};
use orsim::{Provenance, RunConfig};
use orsim_core::evalkit::AnnotatedBox;
use orsim_core::geometry::Rect;
use proptest::prelude::*;

fn prov() -> Provenance {
    Provenance { config_sha256: "a".repeat(64), seed: 9 }
}

fn id() -> impl Strategy<Value = String> {
    "[a-z][a-z0-9_]{0,8}"
}

/// Values with few enough decimals to survive the fixed-precision writers.
fn coord(scale: f64) -> impl Strategy<Value = f64> {
    (1u32..100_000).prop_map(move |v| v as f64 / scale)
}

proptest! {
    #[test]
    fn annotations_round_trip(boxes in prop::collection::vec((id(), coord(1000.0), coord(1000.0), coord(1000.0), coord(1000.0), "[a-z]{1,6}"), 0..20)) {
        let boxes: Vec<AnnotatedBox> = boxes
            .into_iter()
            .map(|(image_id, x, y, w, h, label)| AnnotatedBox { image_id, rect: Rect::new(x, y, w, h), label })
            .collect();
        let text = write_annotations(&boxes, &prov());
        prop_assert_eq!(read_annotations(&text, Path::new("a")).unwrap(), boxes);
    }

    #[test]
    fn detections_round_trip(dets in prop::collection::vec((id(), coord(100.0), coord(100.0), coord(100.0), coord(100.0), coord(10000.0)), 0..20)) {
        let dets: Vec<DetectionRecord> = dets
            .into_iter()
            .map(|(image_id, x, y, w, h, score)| DetectionRecord { image_id, rect: Rect::new(x, y, w, h), score })
            .collect();
        let text = write_detections(&dets, &prov());
        let again = read_detections(&text, Path::new("d")).unwrap();
        prop_assert_eq!(again.clone(), dets);
        prop_assert_eq!(write_detections(&again, &prov()), text);
    }

    #[test]
    fn config_hash_ignores_paths_and_seed(seed in any::<u64>(), dir in "[a-z]{1,8}") {
        let base = RunConfig::parse("sigma = 5\n", Path::new(".")).unwrap();
        let moved = RunConfig::parse(&format!("sigma = 5\nseed = {seed}\nmodel = {dir}/m.txt\n"), Path::new("/tmp")).unwrap();
        prop_assert_eq!(base.hash(), moved.hash());
        let other = RunConfig::parse("sigma = 4\n", Path::new(".")).unwrap();
        prop_assert_ne!(base.hash(), other.hash());
    }
}
