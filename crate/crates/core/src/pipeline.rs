//! Frame-by-frame texture reconstruction driver and its configuration.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exposure::{ExposureMode, ExposureNormalizer};
use crate::fusion::{
    extract_increment_into, BorderBlender, merge_map, IncrementPatch, MergeMode, MergeStats, TextureAccumulator,
};
use crate::matcher::MatcherParams;
use crate::plane::RgbImage;
use crate::raster::{
    debug, discontinuity_mask, focus_camera, rasterize_texture_space_into, render_biased_depth, RasterConfig, TexelSampleMap,
    TexelDiagnostics,
};
use crate::scene_io::{load_mesh, load_sequence, Mesh, PinholeCamera, RigidPose};

pub const TEXTURE_FILE: &str = "texture.png";
pub const FRAMES_REPORT_FILE: &str = "frames.jsonl";

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub mesh: PathBuf,
    pub sequence: PathBuf,
    pub out: PathBuf,
    pub merge_mode: MergeMode,
    pub exposure: ExposureMode,
    /// Feather patch borders before merging.
    pub blend: bool,
    pub raster: RasterConfig,
    pub matcher: MatcherParams,
    /// Write per-frame depth, mask and texel-validity images.
    pub dump_debug: bool,
    /// Write per-frame merge maps.
    pub dump_merge_maps: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            mesh: PathBuf::new(),
            sequence: PathBuf::new(),
            out: PathBuf::new(),
            merge_mode: MergeMode::Argmax,
            exposure: ExposureMode::FirstFrame,
            blend: true,
            raster: RasterConfig::default(),
            matcher: MatcherParams::default(),
            dump_debug: false,
            dump_merge_maps: false,
        }
    }
}

/// Keys accepted by [`PipelineConfig::set`], mirroring the CLI flags.
pub const CONFIG_KEYS: &[&str] = &[
    "mesh",
    "sequence",
    "out",
    "texture-size",
    "merge-mode",
    "exposure",
    "blend",
    "depth-resolution",
    "edge-depth-fraction",
    "edge-dilation",
    "v-black",
    "v-white",
    "s-white",
    "s-min",
    "hue-distance",
    "inlier-threshold",
    "max-candidates",
    "detection-radius",
    "dump-debug",
    "dump-merge-maps",
];

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value `{value}` for `{key}`")))
}

fn parse_finite<T: std::str::FromStr + Into<f64> + Copy>(key: &str, value: &str) -> Result<T> {
    let v: T = parse_value(key, value)?;
    if !v.into().is_finite() {
        return Err(Error::Config(format!("`{key}` must be finite")));
    }
    Ok(v)
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(Error::Config(format!("invalid boolean `{value}` for `{key}`"))),
    }
}

impl PipelineConfig {
    /// Sets one option by its flag name (without leading dashes).
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        match key.as_str() {
            "mesh" => self.mesh = PathBuf::from(value),
            "sequence" => self.sequence = PathBuf::from(value),
            "out" => self.out = PathBuf::from(value),
            "texture-size" => self.raster.texture_size = parse_value(&key, value)?,
            "merge-mode" => self.merge_mode = value.parse()?,
            "exposure" => self.exposure = value.parse()?,
            "blend" => self.blend = parse_bool(&key, value)?,
            "depth-resolution" => self.raster.depth_resolution_r = parse_finite(&key, value)?,
            "edge-depth-fraction" => self.raster.edge_depth_fraction = parse_finite(&key, value)?,
            "edge-dilation" => self.raster.edge_dilation_px = parse_value(&key, value)?,
            "v-black" => self.matcher.thresholds.v_black = parse_finite(&key, value)?,
            "v-white" => self.matcher.thresholds.v_white = parse_finite(&key, value)?,
            "s-white" => self.matcher.thresholds.s_white = parse_finite(&key, value)?,
            "s-min" => self.matcher.thresholds.s_min = parse_finite(&key, value)?,
            "hue-distance" => self.matcher.max_hue_distance_deg = parse_finite(&key, value)?,
            "inlier-threshold" => self.matcher.inlier_threshold = parse_finite(&key, value)?,
            "max-candidates" => self.matcher.max_candidates = parse_value(&key, value)?,
            "detection-radius" => self.matcher.detection_radius_m = parse_finite(&key, value)?,
            "dump-debug" => self.dump_debug = parse_bool(&key, value)?,
            "dump-merge-maps" => self.dump_merge_maps = parse_bool(&key, value)?,
            other => return Err(Error::Config(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    /// Applies a `key = value` (or `key value`) file. `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (key, value) in parse_config_text(text)? {
            self.set(&key, &value)?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        self.apply_text(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.raster.texture_size;
        if !n.is_power_of_two() || !(64..=4096).contains(&n) {
            return Err(Error::Config(format!("texture size must be a power of two in [64, 4096], got {n}")));
        }
        self.raster.validate()?;
        self.matcher.validate()
    }
}

/// Splits config text into `(key, value)` pairs without interpreting them.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = match line.split_once('=') {
            Some((k, v)) => (k.trim(), v.trim()),
            None => match line.split_once(char::is_whitespace) {
                Some((k, v)) => (k.trim(), v.trim()),
                None => return Err(Error::parse("config", i + 1, format!("missing value for `{line}`"))),
            },
        };
        if key.is_empty() || value.is_empty() {
            return Err(Error::parse("config", i + 1, "expected `key = value`"));
        }
        out.push((key.to_string(), value.to_string()));
    }
    Ok(out)
}

/// Wall-clock milliseconds spent in each stage of one frame.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct StageTimings {
    pub exposure_ms: f64,
    pub depth_ms: f64,
    pub mask_ms: f64,
    pub texel_ms: f64,
    pub extract_ms: f64,
    pub blend_ms: f64,
    pub merge_ms: f64,
    pub total_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrameReport {
    pub index: usize,
    /// Reason the frame contributed nothing, if it was skipped.
    pub skipped: Option<String>,
    pub covered: usize,
    pub valid: usize,
    pub backfacing: usize,
    pub outside_frame: usize,
    pub occluded: usize,
    pub masked: usize,
    pub merged: usize,
    pub timings: StageTimings,
}

impl FrameReport {
    fn skipped(index: usize, reason: String, timings: StageTimings) -> Self {
        FrameReport {
            index,
            skipped: Some(reason),
            covered: 0,
            valid: 0,
            backfacing: 0,
            outside_frame: 0,
            occluded: 0,
            masked: 0,
            merged: 0,
            timings,
        }
    }
}

/// Intermediate rasters of the last processed frame.
#[derive(Debug, Clone)]
pub struct FrameArtifacts {
    pub depth: crate::raster::DepthBuffer,
    pub mask: crate::raster::DiscontinuityMask,
    pub samples: crate::raster::TexelSampleMap,
    pub patch: crate::fusion::IncrementPatch,
}

/// Stateful reconstruction: feed frames in order with [`Reconstructor::process`].
#[derive(Debug, Clone)]
pub struct Reconstructor {
    mesh: Mesh,
    raster: RasterConfig,
    blend: bool,
    exposure: ExposureNormalizer,
    accumulator: TextureAccumulator,
    keep_artifacts: bool,
    last: Option<FrameArtifacts>,
    // Per-frame buffers, reused across frames.
    samples: TexelSampleMap,
    patch: IncrementPatch,
    blender: BorderBlender,
}

fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

impl Reconstructor {
    pub fn new(mesh: Mesh, raster: RasterConfig, mode: MergeMode, exposure: ExposureMode, blend: bool) -> Self {
        let accumulator = TextureAccumulator::new(raster.texture_size, mode);
        Reconstructor {
            mesh,
            raster,
            blend,
            exposure: ExposureNormalizer::new(exposure),
            accumulator,
            keep_artifacts: false,
            last: None,
            samples: TexelSampleMap::empty(0),
            patch: IncrementPatch::empty(0),
            blender: BorderBlender::default(),
        }
    }

    /// Retain the intermediate rasters of each frame for inspection.
    pub fn keep_artifacts(&mut self, keep: bool) {
        self.keep_artifacts = keep;
    }

    pub fn last_artifacts(&self) -> Option<&FrameArtifacts> {
        self.last.as_ref()
    }

    pub fn accumulator(&self) -> &TextureAccumulator {
        &self.accumulator
    }

    pub fn into_accumulator(self) -> TextureAccumulator {
        self.accumulator
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    /// Runs every stage for one frame. Frames whose geometry cannot be
    /// processed are reported as skipped rather than failing.
    pub fn process(&mut self, index: usize, image: RgbImage, camera: &PinholeCamera, pose: &RigidPose) -> Result<FrameReport> {
        let start = Instant::now();
        let mut t = StageTimings::default();
        if image.width() != camera.width || image.height() != camera.height {
            return Err(Error::SizeMismatch {
                got_w: image.width(),
                got_h: image.height(),
                want_w: camera.width,
                want_h: camera.height,
            });
        }

        let s = Instant::now();
        let frame = self.exposure.apply(image)?;
        t.exposure_ms = ms_since(s);

        let s = Instant::now();
        let focused = match focus_camera(camera, &self.mesh, pose) {
            Ok(c) => c,
            Err(e) => {
                log::warn!("frame {index} skipped: {e}");
                t.total_ms = ms_since(start);
                return Ok(FrameReport::skipped(index, e.to_string(), t));
            }
        };
        let depth = render_biased_depth(&self.mesh, &focused, pose, &self.raster);
        t.depth_ms = ms_since(s);

        let s = Instant::now();
        let mask = discontinuity_mask(&depth, self.mesh.diameter(), &self.raster);
        t.mask_ms = ms_since(s);

        let s = Instant::now();
        rasterize_texture_space_into(&mut self.samples, &self.mesh, camera, pose, &depth, &mask, &self.raster);
        t.texel_ms = ms_since(s);

        let s = Instant::now();
        extract_increment_into(&mut self.patch, &frame, &self.samples);
        t.extract_ms = ms_since(s);

        let s = Instant::now();
        if self.blend {
            self.blender.apply(&mut self.patch);
        }
        t.blend_ms = ms_since(s);

        let s = Instant::now();
        let MergeStats { updated, .. } = self.accumulator.merge(&self.patch);
        t.merge_ms = ms_since(s);
        t.total_ms = ms_since(start);

        let d: TexelDiagnostics = self.samples.diagnostics;
        let report = FrameReport {
            index,
            skipped: None,
            covered: d.covered,
            valid: d.valid,
            backfacing: d.backfacing,
            outside_frame: d.outside_frame,
            occluded: d.occluded,
            masked: d.masked,
            merged: updated,
            timings: t,
        };
        self.last = self.keep_artifacts.then(|| FrameArtifacts {
            depth,
            mask,
            samples: self.samples.clone(),
            patch: self.patch.clone(),
        });
        Ok(report)
    }
}

#[derive(Debug, Clone)]
pub struct ReconstructionResult {
    pub accumulator: TextureAccumulator,
    pub frames: Vec<FrameReport>,
}

impl ReconstructionResult {
    pub fn skipped_count(&self) -> usize {
        self.frames.iter().filter(|f| f.skipped.is_some()).count()
    }
}

/// Loads the mesh and sequence named in `cfg`, processes every frame in
/// order and, if `cfg.out` is set, writes the texture, its score map and a
/// per-frame report there.
pub fn run_reconstruction(cfg: &PipelineConfig) -> Result<ReconstructionResult> {
    cfg.validate()?;
    let mesh = load_mesh(&cfg.mesh)?;
    let sequence = load_sequence(&cfg.sequence)?;
    let out = (!cfg.out.as_os_str().is_empty()).then_some(cfg.out.as_path());
    if let Some(dir) = out {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut rec = Reconstructor::new(mesh, cfg.raster, cfg.merge_mode, cfg.exposure, cfg.blend);
    rec.keep_artifacts(cfg.dump_debug || cfg.dump_merge_maps);
    let mut frames = Vec::with_capacity(sequence.len());

    for record in sequence {
        let record = record?;
        let before = cfg.dump_merge_maps.then(|| rec.accumulator().texture());
        let report = rec.process(record.index, record.image, &record.camera, &record.pose)?;
        log::info!(
            "frame {}: {} valid texels, {} merged, {:.2} ms",
            report.index,
            report.valid,
            report.merged,
            report.timings.total_ms
        );
        let dumping = cfg.dump_debug || cfg.dump_merge_maps;
        if let (Some(dir), None, true) = (out, &report.skipped, dumping) {
            let art = rec.last_artifacts().expect("artifacts kept");
            if cfg.dump_debug {
                dump_debug(dir, report.index, art)?;
            }
            if let Some(base) = before {
                let map = merge_map(&art.patch, &base);
                map.save_png(&dir.join(format!("merge_{:06}.png", report.index)))?;
            }
        }
        frames.push(report);
    }

    let accumulator = rec.into_accumulator();
    if let Some(dir) = out {
        accumulator.save(&dir.join(TEXTURE_FILE))?;
        let path = dir.join(FRAMES_REPORT_FILE);
        let text: String = frames
            .iter()
            .map(|f| serde_json::to_string(f).expect("report serializes") + "\n")
            .collect();
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    }
    Ok(ReconstructionResult { accumulator, frames })
}

fn dump_debug(dir: &Path, index: usize, art: &FrameArtifacts) -> Result<()> {
    debug::save_depth_png(&dir.join(format!("depth_{index:06}.png")), &art.depth)?;
    debug::save_mask_png(&dir.join(format!("mask_{index:06}.png")), &art.mask)?;
    let valid = art.samples.valid_mask().map(|&v| if v { 1.0 } else { 0.0 });
    crate::plane::save_gray_png(&dir.join(format!("texels_{index:06}.png")), &valid)
}
