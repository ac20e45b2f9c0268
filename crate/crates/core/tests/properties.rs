use orsim_core::boosting::{boost, train_tree, QuantizedSet, Score, MAX_DEPTH};
use orsim_core::detector::{nms, two_step_nms, Detection};
use orsim_core::evalkit::{evaluate, match_detections};
use orsim_core::geometry::Rect;
use proptest::prelude::*;

fn rect() -> impl Strategy<Value = Rect> {
    (0.0..100.0f64, 0.0..100.0f64, 1.0..40.0f64, 1.0..40.0f64).prop_map(|(x, y, w, h)| Rect::new(x, y, w, h))
}

fn detections(max: usize) -> impl Strategy<Value = Vec<Detection>> {
    prop::collection::vec((rect(), 0u8..20), 0..max)
        .prop_map(|v| v.into_iter().map(|(rect, s)| Detection { rect, score: s as f64 / 10.0, level: 0 }).collect())
}

proptest! {
    #[test]
    fn iou_is_symmetric_and_bounded(a in rect(), b in rect()) {
        let (ab, ba) = (a.iou(&b), b.iou(&a));
        prop_assert!((ab - ba).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert!((a.iou(&a) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn nms_keeps_separated_subset(dets in detections(30), overlap in 0.1..0.9f64) {
        let kept = nms(&dets, overlap);
        for (i, k) in kept.iter().enumerate() {
            prop_assert!(dets.contains(k));
            for other in &kept[i + 1..] {
                prop_assert!(k.rect.iou(&other.rect) <= overlap);
            }
        }
        // every dropped box overlaps some survivor
        for d in &dets {
            prop_assert!(kept.contains(d) || kept.iter().any(|k| k.rect.iou(&d.rect) > overlap));
        }
        let twice = two_step_nms(&dets, overlap, 0.65);
        prop_assert!(twice.iter().all(|d| kept.contains(d)));
    }

    #[test]
    fn ap_ignores_detection_order(dets in detections(15), truths in prop::collection::vec(rect(), 1..10), seed in any::<u64>()) {
        let mut shuffled = dets.clone();
        let n = shuffled.len();
        if n > 1 {
            shuffled.rotate_left((seed % n as u64) as usize);
        }
        let a = evaluate(&[(dets, truths.clone())], 0.5).unwrap();
        let b = evaluate(&[(shuffled, truths)], 0.5).unwrap();
        prop_assert!((0.0..=1.0).contains(&a.ap));
        prop_assert_eq!(a.ap, b.ap);
        prop_assert_eq!(a.ar, b.ar);
    }

    #[test]
    fn matching_is_one_to_one(dets in detections(20), truths in prop::collection::vec(rect(), 0..10)) {
        let m = match_detections(&dets, &truths, 0.5).unwrap();
        let tp = m.true_positive.iter().filter(|&&t| t).count();
        let matched = m.truth_matched.iter().filter(|&&t| t).count();
        prop_assert_eq!(tp, matched);
        prop_assert_eq!(m.false_negatives(), truths.len() - matched);
    }

    #[test]
    fn quantized_bins_follow_value_order(rows in prop::collection::vec(prop::collection::vec(-5.0..5.0f32, 3), 2..60)) {
        let q = QuantizedSet::from_rows(&rows).unwrap();
        for f in 0..3 {
            for a in 0..rows.len() {
                for b in 0..rows.len() {
                    if rows[a][f] < rows[b][f] {
                        prop_assert!(q.bin(a, f) <= q.bin(b, f));
                    }
                }
            }
        }
    }

    #[test]
    fn trees_stay_shallow_and_weighted_error_is_bounded(
        rows in prop::collection::vec(prop::collection::vec(0.0..1.0f32, 4), 8..80),
        flips in prop::collection::vec(any::<bool>(), 80),
    ) {
        let labels: Vec<i8> = rows.iter().zip(&flips).map(|(r, &f)| if (r[0] > 0.5) ^ f { 1 } else { -1 }).collect();
        prop_assume!(labels.contains(&1) && labels.contains(&-1));
        let q = QuantizedSet::from_rows(&rows).unwrap();
        let w = vec![1.0 / rows.len() as f64; rows.len()];
        let fit = train_tree(&q, &labels, &w, MAX_DEPTH).unwrap();
        prop_assert!(fit.tree.depth() <= MAX_DEPTH);
        prop_assert!(fit.error <= 0.5 + 1e-12);
        for (i, r) in rows.iter().enumerate() {
            prop_assert_eq!(fit.tree.predict(r), fit.predict_sample(&q, i));
        }
    }

    #[test]
    fn cascade_never_changes_accepted_scores(
        rows in prop::collection::vec(prop::collection::vec(0.0..1.0f32, 5), 20..60),
        probes in prop::collection::vec(prop::collection::vec(0.0..1.0f32, 5), 1..40),
    ) {
        let labels: Vec<i8> = rows.iter().map(|r| if r[1] + r[2] > 1.0 { 1 } else { -1 }).collect();
        prop_assume!(labels.contains(&1) && labels.contains(&-1));
        let q = QuantizedSet::from_rows(&rows).unwrap();
        let mut ens = boost(&q, &labels, vec![1.0; rows.len()], 16).unwrap().ensemble;
        let pos: Vec<&[f32]> = rows.iter().zip(&labels).filter(|(_, &y)| y > 0).map(|(r, _)| r.as_slice()).collect();
        ens.calibrate_cascade(pos.iter().copied(), 0.0, 0.0);
        for p in &pos {
            if ens.score_full(|f| p[f]) > 0.0 {
                prop_assert!(ens.score_with(|f| p[f]).accepted().is_some());
            }
        }
        for p in &probes {
            if let Score::Accepted(s) = ens.score_with(|f| p[f]) {
                prop_assert_eq!(s, ens.score_full(|f| p[f]));
            }
        }
    }
}
