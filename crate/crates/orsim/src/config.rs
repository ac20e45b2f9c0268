//! Flat `key = value` run configuration.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use orsim_core::aggregate::WindowSpec;
use orsim_core::boosting::TrainParams;
use orsim_core::channels::frequency::{Family, FamilySet, FrequencyFeatureConfig};
use orsim_core::detector::DetectParams;
use orsim_core::evalkit::{ShapeKind, SynthSpec};
use orsim_core::features::ChannelConfig;
use orsim_core::imaging::ColorSpace;
use orsim_core::pyramid::PyramidParams;
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

/// Every tunable of the pipeline plus the file locations it reads and writes.
///
/// Relative paths are resolved against the directory of the config file.
/// The config hash covers the tunables only, so moving a run to another
/// directory does not change its outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub color_space: ColorSpace,
    pub sigma: f64,
    pub order: usize,
    pub n_radii: usize,
    pub families: FamilySet,
    pub shrink: usize,
    pub window_width: usize,
    pub window_height: usize,
    pub object_width: usize,
    pub object_height: usize,
    pub n_per_oct: usize,
    pub n_octaves: usize,
    pub n_octaves_up: usize,
    pub approximate: bool,
    pub calibration_scales: Vec<f64>,
    pub schedule: Vec<usize>,
    pub n_random_negatives: usize,
    pub hard_negative_cap: usize,
    pub max_negatives: usize,
    pub negatives_per_image: usize,
    pub exclusion_iou: f64,
    pub cascade_margin: f64,
    pub calibration_shift: usize,
    pub feature_fraction: f64,
    pub stride: usize,
    pub score_threshold: f64,
    pub nms_overlap: f64,
    pub nms_containment: f64,
    pub two_step_nms: bool,
    pub match_iou: f64,
    pub seed: u64,
    pub synth_kind: ShapeKind,
    pub synth_count: usize,
    pub synth_rotation: (f64, f64),

    pub calibration_images: Option<PathBuf>,
    pub train_images: Option<PathBuf>,
    pub train_annotations: Option<PathBuf>,
    pub lambda_table: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub detect_images: Option<PathBuf>,
    pub detections: Option<PathBuf>,
    pub annotations: Option<PathBuf>,
    pub metrics: Option<PathBuf>,
    pub synth_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let train = TrainParams::default();
        Self {
            color_space: ColorSpace::Luv,
            sigma: 6.0,
            order: 4,
            n_radii: 5,
            families: FamilySet::ALL,
            shrink: 4,
            window_width: 32,
            window_height: 28,
            object_width: 17,
            object_height: 17,
            n_per_oct: 8,
            n_octaves: 4,
            n_octaves_up: 0,
            approximate: true,
            calibration_scales: (0..5).map(|i| (-(i as f64) / 4.0).exp2()).collect(),
            schedule: train.schedule,
            n_random_negatives: train.n_random_negatives,
            hard_negative_cap: train.hard_negative_cap,
            max_negatives: train.max_negatives,
            negatives_per_image: train.negatives_per_image,
            exclusion_iou: train.exclusion_iou,
            cascade_margin: train.cascade_margin,
            calibration_shift: train.calibration_shift,
            feature_fraction: train.feature_fraction,
            stride: 1,
            score_threshold: 0.0,
            nms_overlap: orsim_core::detector::DEFAULT_OVERLAP,
            nms_containment: orsim_core::detector::DEFAULT_CONTAINMENT,
            two_step_nms: true,
            match_iou: orsim_core::evalkit::DEFAULT_MATCH_IOU,
            seed: 0,
            synth_kind: ShapeKind::Car,
            synth_count: 100,
            synth_rotation: (0.0, 360.0),
            calibration_images: None,
            train_images: None,
            train_annotations: None,
            lambda_table: None,
            model: None,
            detect_images: None,
            detections: None,
            annotations: None,
            metrics: None,
            synth_dir: None,
        }
    }
}

fn bad(key: &str, value: &str, why: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("`{key} = {value}`: {why}"))
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value.parse::<T>().map_err(|e| bad(key, value, e))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    value.split(',').map(|v| parse_num(key, v.trim())).collect()
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "on" | "true" | "yes" | "1" => Ok(true),
        "off" | "false" | "no" | "0" => Ok(false),
        _ => Err(bad(key, value, "expected on/off")),
    }
}

fn join<T: std::fmt::Display>(items: &[T]) -> String {
    items.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

fn on_off(b: bool) -> &'static str {
    if b {
        "on"
    } else {
        "off"
    }
}

impl RunConfig {
    /// Parse config text; relative paths are resolved against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut seen = std::collections::BTreeSet::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Config(format!("line {}: expected `key = value`", n + 1)));
            };
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(CliError::Config(format!("line {}: `{key}` given twice", n + 1)));
            }
            cfg.set(key, value, base)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    fn set(&mut self, key: &str, value: &str, base: &Path) -> Result<()> {
        let path = || Some(base.join(value));
        match key {
            "color_space" => self.color_space = value.parse().map_err(|e| bad(key, value, e))?,
            "sigma" => self.sigma = parse_num(key, value)?,
            "order" => self.order = parse_num(key, value)?,
            "n_radii" => self.n_radii = parse_num(key, value)?,
            "families" => {
                let fams = value.split(',').map(|f| f.parse::<Family>()).collect::<std::result::Result<Vec<_>, _>>();
                self.families = FamilySet::of(&fams.map_err(|e| bad(key, value, e))?);
            }
            "shrink" => self.shrink = parse_num(key, value)?,
            "window_width" => self.window_width = parse_num(key, value)?,
            "window_height" => self.window_height = parse_num(key, value)?,
            "object_width" => self.object_width = parse_num(key, value)?,
            "object_height" => self.object_height = parse_num(key, value)?,
            "n_per_oct" => self.n_per_oct = parse_num(key, value)?,
            "n_octaves" => self.n_octaves = parse_num(key, value)?,
            "n_octaves_up" => self.n_octaves_up = parse_num(key, value)?,
            "approximate" => self.approximate = parse_bool(key, value)?,
            "calibration_scales" => self.calibration_scales = parse_list(key, value)?,
            "schedule" => self.schedule = parse_list(key, value)?,
            "n_random_negatives" => self.n_random_negatives = parse_num(key, value)?,
            "hard_negative_cap" => self.hard_negative_cap = parse_num(key, value)?,
            "max_negatives" => self.max_negatives = parse_num(key, value)?,
            "negatives_per_image" => self.negatives_per_image = parse_num(key, value)?,
            "exclusion_iou" => self.exclusion_iou = parse_num(key, value)?,
            "cascade_margin" => self.cascade_margin = parse_num(key, value)?,
            "calibration_shift" => self.calibration_shift = parse_num(key, value)?,
            "feature_fraction" => self.feature_fraction = parse_num(key, value)?,
            "stride" => self.stride = parse_num(key, value)?,
            "score_threshold" => self.score_threshold = parse_num(key, value)?,
            "nms_overlap" => self.nms_overlap = parse_num(key, value)?,
            "nms_containment" => self.nms_containment = parse_num(key, value)?,
            "two_step_nms" => self.two_step_nms = parse_bool(key, value)?,
            "match_iou" => self.match_iou = parse_num(key, value)?,
            "seed" => self.seed = parse_num(key, value)?,
            "synth_kind" => self.synth_kind = value.parse().map_err(|e| bad(key, value, e))?,
            "synth_count" => self.synth_count = parse_num(key, value)?,
            "synth_rotation" => {
                let r: Vec<f64> = parse_list(key, value)?;
                let [a, b] = r[..] else {
                    return Err(bad(key, value, "expected two angles"));
                };
                self.synth_rotation = (a, b);
            }
            "calibration_images" => self.calibration_images = path(),
            "train_images" => self.train_images = path(),
            "train_annotations" => self.train_annotations = path(),
            "lambda_table" => self.lambda_table = path(),
            "model" => self.model = path(),
            "detect_images" => self.detect_images = path(),
            "detections" => self.detections = path(),
            "annotations" => self.annotations = path(),
            "metrics" => self.metrics = path(),
            "synth_dir" => self.synth_dir = path(),
            _ => return Err(CliError::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Check every tunable against its supported grid.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(CliError::Config(msg));
        if !(3.0..=8.0).contains(&self.sigma) || self.sigma.fract() != 0.0 {
            return fail(format!("sigma {} is outside the grid 3..8", self.sigma));
        }
        if !(2..=5).contains(&self.order) {
            return fail(format!("order {} is outside the grid 2..5", self.order));
        }
        if !(1..=5).contains(&self.n_radii) {
            return fail(format!("n_radii {} is outside 1..5", self.n_radii));
        }
        if ![2, 4, 8].contains(&self.shrink) {
            return fail(format!("shrink {} is not one of 2, 4, 8", self.shrink));
        }
        if !(1..=16).contains(&self.n_per_oct) || self.n_octaves == 0 {
            return fail("n_per_oct must lie in 1..16 and n_octaves be positive".into());
        }
        if self.stride == 0 {
            return fail("stride must be positive".into());
        }
        for (name, v) in [
            ("exclusion_iou", self.exclusion_iou),
            ("nms_overlap", self.nms_overlap),
            ("nms_containment", self.nms_containment),
            ("match_iou", self.match_iou),
        ] {
            if !(v > 0.0 && v <= 1.0) {
                return fail(format!("{name} {v} must lie in (0, 1]"));
            }
        }
        if !self.score_threshold.is_finite() {
            return fail("score_threshold must be finite".into());
        }
        self.channel_config()?;
        self.window()?;
        self.train_params().validate()?;
        self.synth_spec().validate()?;
        Ok(())
    }

    pub fn channel_config(&self) -> Result<ChannelConfig> {
        let freq = FrequencyFeatureConfig::new(self.order, self.sigma, self.n_radii, self.families)?;
        Ok(ChannelConfig::new(self.color_space, freq, self.shrink)?)
    }

    pub fn window(&self) -> Result<WindowSpec> {
        Ok(WindowSpec::new(self.window_width, self.window_height, self.shrink, self.object_width, self.object_height)?)
    }

    pub fn pyramid_params(&self) -> PyramidParams {
        PyramidParams {
            n_per_oct: self.n_per_oct,
            n_octaves: self.n_octaves,
            n_octaves_up: self.n_octaves_up,
            approximate: self.approximate,
        }
    }

    pub fn detect_params(&self) -> DetectParams {
        DetectParams { stride_cells: self.stride, score_threshold: self.score_threshold, pyramid: self.pyramid_params() }
    }

    pub fn train_params(&self) -> TrainParams {
        TrainParams {
            schedule: self.schedule.clone(),
            n_random_negatives: self.n_random_negatives,
            hard_negative_cap: self.hard_negative_cap,
            max_negatives: self.max_negatives,
            negatives_per_image: self.negatives_per_image,
            exclusion_iou: self.exclusion_iou,
            cascade_margin: self.cascade_margin,
            calibration_shift: self.calibration_shift,
            feature_fraction: self.feature_fraction,
            mining: self.detect_params(),
            seed: self.seed,
        }
    }

    pub fn synth_spec(&self) -> SynthSpec {
        let base = match self.synth_kind {
            ShapeKind::Car => SynthSpec::cars(),
            ShapeKind::Plane => SynthSpec::planes(),
        };
        SynthSpec { rotation: self.synth_rotation, ..base }
    }

    /// Canonical rendering of the tunables (paths and seed excluded).
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("color_space", self.color_space.to_string());
        kv("sigma", self.sigma.to_string());
        kv("order", self.order.to_string());
        kv("n_radii", self.n_radii.to_string());
        kv("families", self.families.to_string());
        kv("shrink", self.shrink.to_string());
        kv("window_width", self.window_width.to_string());
        kv("window_height", self.window_height.to_string());
        kv("object_width", self.object_width.to_string());
        kv("object_height", self.object_height.to_string());
        kv("n_per_oct", self.n_per_oct.to_string());
        kv("n_octaves", self.n_octaves.to_string());
        kv("n_octaves_up", self.n_octaves_up.to_string());
        kv("approximate", on_off(self.approximate).into());
        kv("calibration_scales", join(&self.calibration_scales));
        kv("schedule", join(&self.schedule));
        kv("n_random_negatives", self.n_random_negatives.to_string());
        kv("hard_negative_cap", self.hard_negative_cap.to_string());
        kv("max_negatives", self.max_negatives.to_string());
        kv("negatives_per_image", self.negatives_per_image.to_string());
        kv("exclusion_iou", self.exclusion_iou.to_string());
        kv("cascade_margin", self.cascade_margin.to_string());
        kv("calibration_shift", self.calibration_shift.to_string());
        kv("feature_fraction", self.feature_fraction.to_string());
        kv("stride", self.stride.to_string());
        kv("score_threshold", self.score_threshold.to_string());
        kv("nms_overlap", self.nms_overlap.to_string());
        kv("nms_containment", self.nms_containment.to_string());
        kv("two_step_nms", on_off(self.two_step_nms).into());
        kv("match_iou", self.match_iou.to_string());
        kv("synth_kind", self.synth_kind.to_string());
        kv("synth_count", self.synth_count.to_string());
        kv("synth_rotation", format!("{},{}", self.synth_rotation.0, self.synth_rotation.1));
        s
    }

    /// SHA-256 of [`RunConfig::canonical`], hex encoded.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Provenance shared by every output file.
    pub fn provenance(&self) -> Provenance {
        Provenance { config_sha256: self.hash(), seed: self.seed }
    }
}

/// Config hash and seed recorded in output headers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub config_sha256: String,
    pub seed: u64,
}
