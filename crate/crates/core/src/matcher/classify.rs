use std::time::Instant;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcher::hue::HueImage;
use crate::matcher::poses::TEMPLATE_DISTANCES_M;
use crate::matcher::template::{expected_hue, inlier_fraction_at, HueTemplate, InstanceHypothesis};
use crate::matcher::MatcherParams;
use crate::scene_io::PinholeCamera;

/// One detector proposal: template `template_id` placed with its bbox
/// top-left at pixel `(x, y)` of frame `frame`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Candidate {
    #[serde(default)]
    pub frame: usize,
    pub template_id: usize,
    pub x: i64,
    pub y: i64,
    #[serde(default)]
    pub score: f64,
    /// Index into [`TEMPLATE_DISTANCES_M`].
    #[serde(default)]
    pub depth_bin: Option<usize>,
}

/// Parses JSON-lines candidates; blank lines are skipped.
pub fn parse_candidates(text: &str) -> Result<Vec<Candidate>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let c: Candidate = serde_json::from_str(line).map_err(|e| Error::parse("candidates", i + 1, e.to_string()))?;
        if !c.score.is_finite() {
            return Err(Error::parse("candidates", i + 1, "score must be finite"));
        }
        if let Some(bin) = c.depth_bin {
            if bin >= TEMPLATE_DISTANCES_M.len() {
                return Err(Error::parse("candidates", i + 1, format!("depth_bin {bin} out of range")));
            }
        }
        out.push(c);
    }
    Ok(out)
}

pub fn candidates_to_jsonl(candidates: &[Candidate]) -> String {
    candidates
        .iter()
        .map(|c| serde_json::to_string(c).expect("candidate serializes") + "\n")
        .collect()
}

/// Templates addressed by their index.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TemplateStore {
    pub templates: Vec<HueTemplate>,
}

impl TemplateStore {
    pub fn new(templates: Vec<HueTemplate>) -> Self {
        TemplateStore { templates }
    }

    pub fn get(&self, id: usize) -> Option<&HueTemplate> {
        self.templates.get(id)
    }

    pub fn len(&self) -> usize {
        self.templates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.templates.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    /// Position of the candidate in the input list.
    pub candidate_index: usize,
    pub candidate: Candidate,
    pub texture_id: String,
    pub fraction: f64,
}

/// Scans candidates in order and gives each the best remaining hypothesis
/// whose inlier fraction reaches the threshold; an assigned hypothesis is
/// removed. Stops when every hypothesis is assigned. At most
/// `params.max_candidates` candidates are consumed; candidates naming an
/// unknown template or lying outside the frame are passed over.
pub fn classify_instances(
    frame_hue: &HueImage,
    candidates: &[Candidate],
    store: &TemplateStore,
    hypotheses: &[InstanceHypothesis],
    params: &MatcherParams,
) -> Vec<Assignment> {
    classify(frame_hue, candidates, store, hypotheses, params, None)
}

/// [`classify_instances`] that also records the wall-clock milliseconds of
/// every expected-hue lookup plus inlier count.
pub fn classify_instances_timed(
    frame_hue: &HueImage,
    candidates: &[Candidate],
    store: &TemplateStore,
    hypotheses: &[InstanceHypothesis],
    params: &MatcherParams,
) -> (Vec<Assignment>, Vec<f64>) {
    let mut times = Vec::new();
    let out = classify(frame_hue, candidates, store, hypotheses, params, Some(&mut times));
    (out, times)
}

fn classify(
    frame_hue: &HueImage,
    candidates: &[Candidate],
    store: &TemplateStore,
    hypotheses: &[InstanceHypothesis],
    params: &MatcherParams,
    mut times: Option<&mut Vec<f64>>,
) -> Vec<Assignment> {
    let mut remaining: Vec<bool> = vec![true; hypotheses.len()];
    let mut out = Vec::new();
    for (ci, cand) in candidates.iter().enumerate().take(params.max_candidates) {
        if !remaining.iter().any(|&r| r) {
            break;
        }
        let inside = cand.x >= 0
            && cand.y >= 0
            && (cand.x as usize) < frame_hue.width()
            && (cand.y as usize) < frame_hue.height();
        let Some(template) = store.get(cand.template_id).filter(|_| inside) else {
            log::debug!("skipping candidate {ci}: unknown template or outside frame");
            continue;
        };
        let mut best: Option<(usize, f64)> = None;
        for (hi, hyp) in hypotheses.iter().enumerate() {
            if !remaining[hi] {
                continue;
            }
            let start = Instant::now();
            let expected = expected_hue(template, hyp, &params.thresholds);
            let f = inlier_fraction_at(frame_hue, cand.x, cand.y, &expected, &template.mask, params.max_hue_distance_deg);
            if let Some(t) = times.as_deref_mut() {
                t.push(start.elapsed().as_secs_f64() * 1e3);
            }
            if f.is_degenerate() || f.fraction < params.inlier_threshold {
                continue;
            }
            if best.map_or(true, |(_, b)| f.fraction > b) {
                best = Some((hi, f.fraction));
            }
        }
        if let Some((hi, fraction)) = best {
            remaining[hi] = false;
            out.push(Assignment {
                candidate_index: ci,
                candidate: cand.clone(),
                texture_id: hypotheses[hi].texture_id.clone(),
                fraction,
            });
        }
    }
    out
}

/// Object origin in camera coordinates implied by a candidate: the
/// template anchor shifted to the candidate position, back-projected at the
/// depth bin distance (or the template's own origin depth without one).
pub fn estimate_position(candidate: &Candidate, template: &HueTemplate, camera: &PinholeCamera) -> Vector3<f64> {
    let z = candidate
        .depth_bin
        .and_then(|b| TEMPLATE_DISTANCES_M.get(b).copied())
        .unwrap_or_else(|| template.origin_depth());
    let u = candidate.x as f64 + template.anchor[0];
    let v = candidate.y as f64 + template.anchor[1];
    Vector3::new((u - camera.cx) / camera.fx * z, (v - camera.cy) / camera.fy * z, z)
}
