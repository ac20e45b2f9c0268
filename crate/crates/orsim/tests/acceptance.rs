//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`harness = false`) so the verdict lines are always
//! printed; the process exits 0 either way. Pass criterion numbers as arguments to run a subset, e.g.
//! `cargo test -p orsim --test acceptance -- 1 4`.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use orsim_core::aggregate::WindowSpec;
use orsim_core::boosting::{
    boost, positive_crop, train_detector, BoostedModel, Ensemble, NegativeImage, QuantizedSet, Score, TrainParams,
};
use orsim_core::channels::frequency::{FamilySet, FrequencyFeatureConfig};
use orsim_core::channels::ChannelStack;
use orsim_core::detector::{two_step_nms, DetectParams, Detection, DEFAULT_CONTAINMENT, DEFAULT_OVERLAP};
use orsim_core::evalkit::{evaluate, match_detections, synth_corpus, SynthImage, SynthSpec};
use orsim_core::features::{compute_full, ChannelConfig, ChannelGroup};
use orsim_core::geometry::Rect;
use orsim_core::imaging::{ColorSpace, RasterImage};
use orsim_core::pyramid::{build_pyramid, calibrate_lambda, calibration_data, fit_lambda, group_means, LambdaTable, PyramidParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn channel_config() -> ChannelConfig {
    let freq = FrequencyFeatureConfig::new(4, 6.0, 5, FamilySet::ALL).unwrap();
    ChannelConfig::new(ColorSpace::Luv, freq, 4).unwrap()
}

fn window() -> WindowSpec {
    WindowSpec::new(32, 28, 4, 17, 17).unwrap()
}

fn cores() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Wall-clock budget stated for an 8-core desktop, scaled to this machine.
fn budget(eight_core: Duration) -> Duration {
    eight_core.mul_f64((8.0 / cores() as f64).max(1.0))
}

/// Frequency (harmonic) channels of the full-resolution stack.
fn frequency_planes(img: &RasterImage, cfg: &ChannelConfig) -> ChannelStack {
    let full = compute_full(img, cfg).unwrap();
    let groups = cfg.channel_groups();
    let mut out = ChannelStack::new(full.width(), full.height());
    for (i, g) in groups.iter().enumerate() {
        if matches!(g, ChannelGroup::F1 | ChannelGroup::F2 | ChannelGroup::F3) {
            out.push(full.names()[i].clone(), full.channel(i).to_vec()).unwrap();
        }
    }
    out
}

fn rotate_plane(plane: &[f64], w: usize, h: usize, quarter_turns: usize) -> Vec<f64> {
    let mut img = RasterImage::new(w, h, 1, plane.to_vec()).unwrap();
    for _ in 0..quarter_turns % 4 {
        img = img.rotate90();
    }
    img.into_data()
}

fn criterion_1() -> Verdict {
    let start = Instant::now();
    let cfg = channel_config();
    let spec = SynthSpec { width: 129, height: 129, ..SynthSpec::cars() };
    let corpus = synth_corpus(&spec, 20, 101).unwrap();
    let (n, lo) = (129usize, 32usize);
    let mut worst = 0.0f64;
    for s in &corpus {
        let base = frequency_planes(&s.image, &cfg);
        let mut rotated = s.image.clone();
        for k in 1..4 {
            rotated = rotated.rotate90();
            let feats = frequency_planes(&rotated, &cfg);
            for c in 0..base.len() {
                let back = rotate_plane(feats.channel(c), n, n, 4 - k);
                let orig = base.channel(c);
                for y in lo..lo + 65 {
                    for x in lo..lo + 65 {
                        worst = worst.max((back[y * n + x] - orig[y * n + x]).abs());
                    }
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let limit = 60.0;
    verdict(worst < 1e-6 && secs < limit, format!("max abs deviation {worst:.3e} (< 1e-6), {secs:.1} s (< {limit:.0} s)"))
}

fn gaussian_composite(rng: &mut ChaCha8Rng, n: usize) -> Vec<(f64, f64, f64, f64)> {
    let c = (n - 1) as f64 / 2.0;
    (0..5)
        .map(|_| {
            let r = rng.random_range(4.0..22.0);
            let t = rng.random_range(0.0..std::f64::consts::TAU);
            let sigma = rng.random_range(6.0..12.0);
            let amp = rng.random_range(-0.4..0.4);
            (c + r * t.cos(), c + r * t.sin(), sigma, amp)
        })
        .collect()
}

fn render_blobs(blobs: &[(f64, f64, f64, f64)], n: usize) -> RasterImage {
    RasterImage::from_fn(n, n, 3, |_, x, y| {
        0.5 + blobs
            .iter()
            .map(|&(bx, by, s, a)| {
                let d2 = (x as f64 - bx).powi(2) + (y as f64 - by).powi(2);
                a * (-d2 / (2.0 * s * s)).exp()
            })
            .sum::<f64>()
    })
    .unwrap()
}

/// Rotate about the image center by `deg` with bilinear interpolation;
/// samples outside the source take the value 0.5.
fn rotate_bilinear(img: &RasterImage, deg: f64) -> RasterImage {
    let (w, h) = (img.width(), img.height());
    let (cx, cy) = ((w - 1) as f64 / 2.0, (h - 1) as f64 / 2.0);
    let (s, c) = deg.to_radians().sin_cos();
    RasterImage::from_fn(w, h, img.channels(), |ch, x, y| {
        let (dx, dy) = (x as f64 - cx, y as f64 - cy);
        let sx = c * dx + s * dy + cx;
        let sy = -s * dx + c * dy + cy;
        let (x0, y0) = (sx.floor(), sy.floor());
        let (fx, fy) = (sx - x0, sy - y0);
        let at = |xi: f64, yi: f64| {
            if xi < 0.0 || yi < 0.0 || xi >= w as f64 || yi >= h as f64 {
                0.5
            } else {
                img.get(ch, xi as usize, yi as usize)
            }
        };
        (1.0 - fy) * ((1.0 - fx) * at(x0, y0) + fx * at(x0 + 1.0, y0))
            + fy * ((1.0 - fx) * at(x0, y0 + 1.0) + fx * at(x0 + 1.0, y0 + 1.0))
    })
    .unwrap()
}

/// Relative L2 error of the channels whose names start with `prefix`.
fn relative_l2(a: &ChannelStack, b: &ChannelStack, at: usize, prefix: &str) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for c in (0..a.len()).filter(|&c| a.names()[c].starts_with(prefix)) {
        let (u, v) = (a.channel(c)[at], b.channel(c)[at]);
        num += (u - v) * (u - v);
        den += u * u;
    }
    (num / den).sqrt()
}

fn criterion_2() -> Verdict {
    let cfg = channel_config();
    let n = 129;
    let center = (n / 2) * n + n / 2;
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let composites: Vec<RasterImage> = (0..8).map(|_| render_blobs(&gaussian_composite(&mut rng, n), n)).collect();
    let originals: Vec<ChannelStack> = composites.iter().map(|img| frequency_planes(img, &cfg)).collect();
    let mut parts = Vec::new();
    let mut pass = true;
    for alpha in [15.0, 30.0, 45.0, 60.0, 75.0] {
        let mut errs = [Vec::new(), Vec::new(), Vec::new(), Vec::new()];
        for (img, a) in composites.iter().zip(&originals) {
            let b = frequency_planes(&rotate_bilinear(img, alpha), &cfg);
            for (e, prefix) in errs.iter_mut().zip(["F", "F1", "F2", "F3"]) {
                e.push(relative_l2(a, &b, center, prefix));
            }
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let max = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
        pass &= mean(&errs[0]) < 0.02;
        parts.push(format!(
            "{alpha}°: {:.2}% (max {:.2}%; F1 {:.2}%, F2 {:.2}%, F3 {:.2}%)",
            100.0 * mean(&errs[0]),
            100.0 * max(&errs[0]),
            100.0 * mean(&errs[1]),
            100.0 * mean(&errs[2]),
            100.0 * mean(&errs[3])
        ));
    }
    verdict(pass, format!("mean relative L2 error over 8 composites (< 2%): {}", parts.join(", ")))
}

fn criterion_3() -> Verdict {
    let start = Instant::now();
    let cfg = channel_config();
    let corpus = synth_corpus(&SynthSpec::cars(), 50, 303).unwrap();
    let images: Vec<RasterImage> = corpus.into_iter().map(|s| s.image).collect();
    let scales: Vec<f64> = (0..5).map(|i| (-(i as f64) / 4.0).exp2()).collect();
    let data = calibration_data(&images, &scales, &cfg).unwrap();
    let table = fit_lambda(&data).unwrap();
    let mut pass = true;
    let mut fits = Vec::new();
    for e in &table.entries {
        pass &= e.r2 >= 0.9;
        fits.push(format!("{} λ={:.3} R²={:.3}", e.group.name(), e.lambda, e.r2));
    }

    // mean-statistic deviation of approximated mid-octave levels
    let groups = cfg.channel_groups();
    let (mut dev_sum, mut dev_n) = ([0.0f64; 5], [0usize; 5]);
    let exact_params = PyramidParams { approximate: false, ..PyramidParams::default() };
    for img in &images {
        let fast = build_pyramid(img, &cfg, &table, PyramidParams::default(), &window()).unwrap();
        let exact = build_pyramid(img, &cfg, &table, exact_params, &window()).unwrap();
        for (lf, le) in fast.levels.iter().zip(&exact.levels) {
            let index = (-lf.scale.log2() * 8.0).round() as i64;
            if !lf.approximated || index % 8 != 4 {
                continue;
            }
            let (mf, me) = (group_means(&lf.agg.stack, &groups), group_means(&le.agg.stack, &groups));
            for g in 0..5 {
                if let (Some(a), Some(b)) = (mf[g], me[g]) {
                    dev_sum[g] += (a - b).abs() / b;
                    dev_n[g] += 1;
                }
            }
        }
    }
    let mut devs = Vec::new();
    for g in ChannelGroup::ALL {
        let i = g.index();
        if dev_n[i] > 0 {
            let d = dev_sum[i] / dev_n[i] as f64;
            pass &= d <= 0.15;
            devs.push(format!("{} {:.2}%", g.name(), 100.0 * d));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let limit = 300.0;
    pass &= secs < limit;
    verdict(
        pass,
        format!(
            "fits (R² >= 0.9): {}; mid-octave deviation (<= 15%): {}; {secs:.0} s (< {limit:.0} s)",
            fits.join(", "),
            devs.join(", ")
        ),
    )
}

fn random_rows(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<Vec<f32>> {
    (0..n).map(|_| (0..d).map(|_| rng.random::<f32>()).collect()).collect()
}

fn criterion_4() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let rows = random_rows(&mut rng, 600, 12);
    // noisy labels keep every round's weak learner imperfect
    let labels: Vec<i8> = rows
        .iter()
        .map(|r| {
            let clean = r[0] + 0.5 * r[1] - 0.4 * r[2] > 0.55;
            if clean ^ (rng.random::<f64>() < 0.15) {
                1
            } else {
                -1
            }
        })
        .collect();
    let data = QuantizedSet::from_rows(&rows).unwrap();
    let w0 = vec![1.0; rows.len()];
    let out = boost(&data, &labels, w0, 2048).unwrap();
    let mut monotone = out.rounds.len() == 2048;
    let mut prev = 1.0f64;
    let mut post_dev = 0.0f64;
    for r in &out.rounds {
        monotone &= r.loss <= prev;
        prev = r.loss;
        post_dev = post_dev.max((r.post_error - 0.5).abs());
    }

    let sep_rows = random_rows(&mut rng, 500, 6);
    let sep_labels: Vec<i8> =
        sep_rows.iter().map(|r| if (r[0] > 0.3 && r[1] > 0.6) || r[2] > 0.8 { 1 } else { -1 }).collect();
    let sep = QuantizedSet::from_rows(&sep_rows).unwrap();
    let sep_out = boost(&sep, &sep_labels, vec![1.0; sep_rows.len()], 8).unwrap();
    let zero_at = sep_out.rounds.iter().position(|r| r.train_error == 0.0);
    verdict(
        monotone && post_dev <= 1e-9 && zero_at.is_some(),
        format!(
            "{} rounds, loss non-increasing: {monotone}; max |post-round error - 0.5| = {post_dev:.2e}; separable set error 0 after round {}",
            out.rounds.len(),
            zero_at.map_or("never".to_string(), |r| (r + 1).to_string())
        ),
    )
}

fn criterion_5() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let rows = random_rows(&mut rng, 1000, 16);
    let labels: Vec<i8> = rows.iter().map(|r| if r[3] + r[7] * r[7] + 0.2 * r[11] > 0.9 { 1 } else { -1 }).collect();
    let data = QuantizedSet::from_rows(&rows).unwrap();
    let mut ens: Ensemble = boost(&data, &labels, vec![1.0; rows.len()], 128).unwrap().ensemble;
    let positives: Vec<&Vec<f32>> = rows.iter().zip(&labels).filter(|(_, &y)| y > 0).map(|(r, _)| r).collect();
    let threshold = 0.0;
    let margin = 0.1 * ens.alphas()[0];
    ens.calibrate_cascade(positives.iter().map(|r| r.as_slice()), threshold, margin);

    let rejected_positives = positives
        .iter()
        .filter(|r| ens.score_full(|f| r[f]) > threshold && matches!(ens.score_with(|f| r[f]), Score::Rejected { .. }))
        .count();
    let mut off = ens.clone();
    off.disable_cascade();
    let probes = random_rows(&mut rng, 10_000, 16);
    let (mut accepted, mut mismatched, mut rejected) = (0, 0, 0);
    for p in &probes {
        match ens.score_with(|f| p[f]) {
            Score::Accepted(s) => {
                accepted += 1;
                if Some(s) != off.score_with(|f| p[f]).accepted() {
                    mismatched += 1;
                }
            }
            Score::Rejected { .. } => rejected += 1,
        }
    }
    verdict(
        rejected_positives == 0 && mismatched == 0,
        format!(
            "training positives rejected by the cascade: {rejected_positives}; 10k probes: {accepted} accepted ({mismatched} score mismatches), {rejected} rejected"
        ),
    )
}

/// Reference AP: enumerate every distinct score threshold, match the
/// detections at or above it from scratch and integrate the precision
/// envelope over recall.
fn brute_force_ap(images: &[(Vec<Detection>, Vec<Rect>)], iou: f64) -> f64 {
    let n_truths: usize = images.iter().map(|i| i.1.len()).sum();
    let mut thresholds: Vec<f64> = images.iter().flat_map(|i| i.0.iter().map(|d| d.score)).collect();
    thresholds.sort_by(|a, b| b.total_cmp(a));
    thresholds.dedup();
    let mut curve = Vec::new();
    for &t in &thresholds {
        let (mut tp, mut total) = (0usize, 0usize);
        for (dets, truths) in images {
            let mut kept: Vec<&Detection> = dets.iter().filter(|d| d.score >= t).collect();
            kept.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.rect.x.total_cmp(&b.rect.x)).then(a.rect.y.total_cmp(&b.rect.y)));
            let mut used = vec![false; truths.len()];
            for d in kept {
                total += 1;
                let best = (0..truths.len())
                    .filter(|&j| !used[j] && d.rect.iou(&truths[j]) > iou)
                    .max_by(|&a, &b| d.rect.iou(&truths[a]).total_cmp(&d.rect.iou(&truths[b])).then(b.cmp(&a)));
                if let Some(j) = best {
                    used[j] = true;
                    tp += 1;
                }
            }
        }
        curve.push((tp as f64 / n_truths as f64, tp as f64 / total as f64));
    }
    let mut ap = 0.0;
    let mut prev = 0.0;
    for k in 0..curve.len() {
        let best = curve[k..].iter().map(|c| c.1).fold(0.0, f64::max);
        ap += (curve[k].0 - prev) * best;
        prev = curve[k].0;
    }
    ap
}

fn criterion_6() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n_img = rng.random_range(1..4);
        let mut images = Vec::new();
        for _ in 0..n_img {
            let truths: Vec<Rect> = (0..rng.random_range(1..=20))
                .map(|_| Rect::new(rng.random_range(0.0..200.0), rng.random_range(0.0..200.0), rng.random_range(8.0..30.0), rng.random_range(8.0..30.0)))
                .collect();
            let dets: Vec<Detection> = (0..rng.random_range(0..=20))
                .map(|_| {
                    let rect = if rng.random::<f64>() < 0.6 {
                        let t = truths[rng.random_range(0..truths.len())];
                        Rect::new(t.x + rng.random_range(-6.0..6.0), t.y + rng.random_range(-6.0..6.0), t.w, t.h)
                    } else {
                        Rect::new(rng.random_range(0.0..200.0), rng.random_range(0.0..200.0), 20.0, 20.0)
                    };
                    // coarse scores produce ties
                    Detection { rect, score: (rng.random::<f64>() * 10.0).round() / 10.0, level: 0 }
                })
                .collect();
            images.push((dets, truths));
        }
        let got = evaluate(&images, 0.5).unwrap().ap;
        worst = worst.max((got - brute_force_ap(&images, 0.5)).abs());
    }
    let edge_det = [Detection { rect: Rect::new(0.0, 0.0, 10.0, 10.0), score: 1.0, level: 0 }];
    let edge_truth = [Rect::new(0.0, 0.0, 10.0, 20.0)];
    let edge_iou = edge_det[0].rect.iou(&edge_truth[0]);
    let edge_fp = !match_detections(&edge_det, &edge_truth, 0.5).unwrap().true_positive[0];
    verdict(
        worst <= 1e-12 && edge_iou == 0.5 && edge_fp,
        format!("max |AP - brute force| over 100 configurations = {worst:.1e}; IoU = {edge_iou} counted as FP: {edge_fp}"),
    )
}

struct EndToEnd {
    model: BoostedModel,
    rotated: Vec<SynthImage>,
    ap_rotated: f64,
    ap_axis: f64,
    seconds: f64,
}

fn ap_on(model: &BoostedModel, test: &[SynthImage], params: &DetectParams) -> f64 {
    let pairs: Vec<(Vec<Detection>, Vec<Rect>)> = test
        .iter()
        .map(|s| {
            let raw = orsim_core::detector::detect(&s.image, model, params).unwrap();
            (two_step_nms(&raw, DEFAULT_OVERLAP, DEFAULT_CONTAINMENT), s.truths.iter().map(|t| t.rect).collect())
        })
        .collect();
    evaluate(&pairs, 0.5).unwrap().ap
}

/// Reduced training schedule for the end-to-end run (see README).
fn e2e_params() -> TrainParams {
    TrainParams { schedule: vec![32, 128, 256], seed: 7, ..TrainParams::default() }
}

fn end_to_end() -> EndToEnd {
    let start = Instant::now();
    let (cfg, win) = (channel_config(), window());
    let spec = SynthSpec::cars();
    let train = synth_corpus(&spec, 300, 7007).unwrap();
    let calib: Vec<RasterImage> = train.iter().take(20).map(|s| s.image.clone()).collect();
    let scales: Vec<f64> = (0..5).map(|i| (-(i as f64) / 4.0).exp2()).collect();
    let lambda: LambdaTable = calibrate_lambda(&calib, &scales, &cfg).unwrap();
    let mut crops = Vec::new();
    let mut pool = Vec::new();
    for s in &train {
        let truths: Vec<Rect> = s.truths.iter().map(|t| t.rect).collect();
        for t in &truths {
            crops.push(positive_crop(&s.image, t, &win, &cfg).unwrap());
        }
        pool.push(NegativeImage { image: s.image.clone(), exclusions: truths });
    }
    drop(train);
    let (model, reports) = train_detector(&crops, &pool, &cfg, &win, &lambda, &e2e_params()).unwrap();
    for r in &reports {
        eprintln!(
            "  stage {}: {} trees, {} pos / {} neg ({} mined), first eps {:.2e}, skipped {}",
            r.stage, r.weak_count, r.positives, r.negatives, r.mined, r.first_error, r.skipped
        );
    }
    drop(pool);
    let rotated = synth_corpus(&spec, 100, 9009).unwrap();
    let axis = synth_corpus(&SynthSpec { rotation: (0.0, 0.0), ..spec }, 100, 9009).unwrap();
    let params = DetectParams::default();
    let ap_rotated = ap_on(&model, &rotated, &params);
    let ap_axis = ap_on(&model, &axis, &params);
    EndToEnd { model, rotated, ap_rotated, ap_axis, seconds: start.elapsed().as_secs_f64() }
}

fn criterion_7(e: &EndToEnd) -> Verdict {
    let limit = budget(Duration::from_secs(15 * 60)).as_secs_f64();
    let gap = (e.ap_rotated - e.ap_axis).abs();
    verdict(
        e.ap_rotated >= 0.90 && gap <= 0.03 && e.seconds < limit,
        format!(
            "AP rotated {:.4} (>= 0.90), AP axis-aligned {:.4}, gap {:.2} points (<= 3); {:.0} s on {} core(s) (< {limit:.0} s)",
            e.ap_rotated,
            e.ap_axis,
            100.0 * gap,
            e.seconds,
            cores()
        ),
    )
}

fn run_cli(args: &[&str]) -> bool {
    let out = Command::new(env!("CARGO_BIN_EXE_orsim")).args(args).output().expect("run orsim");
    if !out.status.success() {
        eprintln!("  orsim {args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    }
    out.status.success()
}

fn pipeline(dir: &Path, shared: &Path) -> Option<Vec<(String, Vec<u8>)>> {
    let config = dir.join("run.cfg");
    let text = format!(
        "schedule = 8,32\nn_random_negatives = 600\nhard_negative_cap = 300\nmax_negatives = 1000\nn_octaves = 2\n\
         calibration_images = {0}/train\ntrain_images = {0}/train\ntrain_annotations = {0}/train/annotations.txt\n\
         lambda_table = lambda.txt\nmodel = model.txt\ndetect_images = {0}/test\ndetections = detections.txt\n\
         annotations = {0}/test/annotations.txt\nmetrics = metrics.txt\n",
        shared.display()
    );
    std::fs::write(&config, text).unwrap();
    let c = config.to_str().unwrap();
    let ok = run_cli(&["calibrate", "--config", c, "--seed", "11"])
        && run_cli(&["train", "--config", c, "--seed", "11"])
        && run_cli(&["detect", "--config", c, "--seed", "11"])
        && run_cli(&["eval", "--config", c, "--seed", "11"]);
    if !ok {
        return None;
    }
    let files = ["lambda.txt", "model.txt", "detections.txt", "metrics.txt", "metrics.pr.csv"];
    Some(files.iter().map(|f| (f.to_string(), std::fs::read(dir.join(f)).unwrap())).collect())
}

fn criterion_8() -> Verdict {
    let root = tempfile::tempdir().unwrap();
    let data = root.path().join("data");
    std::fs::create_dir_all(&data).unwrap();
    let synth_cfg = data.join("synth.cfg");
    std::fs::write(&synth_cfg, "synth_count = 24\n").unwrap();
    let made = ["train", "test"].iter().enumerate().all(|(i, split)| {
        let seed = (21 + i).to_string();
        let out = data.join(split);
        run_cli(&["synth", "--config", synth_cfg.to_str().unwrap(), "--seed", &seed, "--out", out.to_str().unwrap()])
    });
    if !made {
        return verdict(false, "synthetic corpus generation failed");
    }
    let runs: Vec<_> = ["a", "b"]
        .iter()
        .map(|r| {
            let dir = root.path().join(r);
            std::fs::create_dir_all(&dir).unwrap();
            pipeline(&dir, &data)
        })
        .collect();
    match (&runs[0], &runs[1]) {
        (Some(a), Some(b)) => {
            let differing: Vec<&str> = a.iter().zip(b).filter(|(x, y)| x.1 != y.1).map(|(x, _)| x.0.as_str()).collect();
            verdict(
                differing.is_empty(),
                format!("{} output files compared, differing: {:?}", a.len(), differing),
            )
        }
        _ => verdict(false, "a pipeline run failed"),
    }
}

fn criterion_9(e: &EndToEnd) -> Verdict {
    let spec = SynthSpec { width: 640, height: 640, objects: (10, 20), distractors: 40, ..SynthSpec::cars() };
    let big = synth_corpus(&spec, 2, 9119).unwrap();
    let fast_params = DetectParams::default();
    let exact_params =
        DetectParams { pyramid: PyramidParams { approximate: false, ..PyramidParams::default() }, ..DetectParams::default() };
    let time = |p: &DetectParams| {
        let t = Instant::now();
        for s in &big {
            orsim_core::detector::detect(&s.image, &e.model, p).unwrap();
        }
        t.elapsed().as_secs_f64()
    };
    let (fast, exact) = (time(&fast_params), time(&exact_params));
    let ap_exact = ap_on(&e.model, &e.rotated, &exact_params);
    let drop = e.ap_rotated - ap_exact;
    verdict(
        exact / fast >= 3.0 && -drop <= 0.01,
        format!(
            "640x640: fast {fast:.1} s vs exact {exact:.1} s = {:.2}x (>= 3x); AP fast {:.4} vs exact {ap_exact:.4}, degradation {:.2} points (<= 1)",
            exact / fast,
            e.ap_rotated,
            -100.0 * drop
        ),
    )
}

fn main() {
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let wanted = |n: u32| selected.is_empty() || selected.contains(&n);
    let mut results: Vec<(u32, Verdict)> = Vec::new();
    let simple: [(u32, fn() -> Verdict); 6] =
        [(1, criterion_1), (2, criterion_2), (3, criterion_3), (4, criterion_4), (5, criterion_5), (6, criterion_6)];
    for (n, f) in simple {
        if wanted(n) {
            results.push((n, f()));
            report(results.last().unwrap());
        }
    }
    if wanted(7) || wanted(9) {
        let e = end_to_end();
        if wanted(7) {
            results.push((7, criterion_7(&e)));
            report(results.last().unwrap());
        }
        if wanted(8) {
            results.push((8, criterion_8()));
            report(results.last().unwrap());
        }
        if wanted(9) {
            results.push((9, criterion_9(&e)));
            report(results.last().unwrap());
        }
    } else if wanted(8) {
        results.push((8, criterion_8()));
        report(results.last().unwrap());
    }
    println!("\nacceptance summary:");
    for (n, v) in &results {
        println!("criterion {n}: {}", if v.pass { "PASS" } else { "FAIL" });
    }
    let failed = results.iter().filter(|(_, v)| !v.pass).count();
    // Verdicts are reported, not enforced, so one failing criterion does not
    // hide the rest of the workspace's test results.
    println!("{failed} of {} criteria failed", results.len());
}

fn report((n, v): &(u32, Verdict)) {
    println!("criterion {n}: {} - {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
}
