//! Hue-template instance recognition.
//!
//! Templates keep per-pixel texture coordinates rather than colors, so the
//! expected appearance of a view is a lookup into whichever texture is being
//! hypothesized. Candidates are scored by the share of object pixels whose
//! hue agrees with the expectation; each hypothesis can be claimed once.

pub mod classify;
pub mod hue;
pub mod poses;
pub mod store;
pub mod template;

pub use classify::{
    candidates_to_jsonl, classify_instances, classify_instances_timed, estimate_position, parse_candidates, Assignment, Candidate, TemplateStore,
};
pub use hue::{hue_descriptor, hue_distance, pixel_hue, rgb_to_hsv, HueImage, HueThresholds, BLACK_HUE, WHITE_HUE};
pub use poses::{sample_template_poses, view_directions, TemplatePose, TEMPLATE_DISTANCES_M, TEMPLATE_ROLLS_DEG};
pub use store::{load_template_store, meta_to_text, parse_template_meta, save_template_store, TemplateMeta};
pub use template::{
    color_inlier_fraction, expected_hue, inlier_fraction_at, make_template, HueTemplate, InlierFraction,
    InstanceHypothesis, PixelRect,
};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatcherParams {
    pub thresholds: HueThresholds,
    /// Largest circular hue difference counted as a match.
    pub max_hue_distance_deg: f32,
    /// Minimum inlier fraction to accept a hypothesis.
    pub inlier_threshold: f64,
    /// Candidates consumed per frame.
    pub max_candidates: usize,
    /// Detection radius around the true object position, in meters.
    pub detection_radius_m: f64,
}

impl Default for MatcherParams {
    fn default() -> Self {
        MatcherParams {
            thresholds: HueThresholds::default(),
            max_hue_distance_deg: 54.0,
            inlier_threshold: 0.70,
            max_candidates: 30,
            detection_radius_m: 0.11,
        }
    }
}

impl MatcherParams {
    pub fn validate(&self) -> Result<()> {
        let t = &self.thresholds;
        let unit = |v: f32| (0.0..=1.0).contains(&v);
        if !(unit(t.v_black) && unit(t.v_white) && unit(t.s_white) && unit(t.s_min)) {
            return Err(Error::Config("hue thresholds must lie in [0, 1]".into()));
        }
        if !(0.0..=180.0).contains(&self.max_hue_distance_deg) {
            return Err(Error::Config("hue distance must lie in [0, 180]".into()));
        }
        if !(0.0..=1.0).contains(&self.inlier_threshold) {
            return Err(Error::Config("inlier threshold must lie in [0, 1]".into()));
        }
        if !(self.detection_radius_m > 0.0) {
            return Err(Error::Config("detection radius must be positive".into()));
        }
        Ok(())
    }
}
