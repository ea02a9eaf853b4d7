//! Detection evaluation and timing summaries.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcher::{
    classify_instances_timed, estimate_position, hue_descriptor, load_template_store, parse_candidates, Candidate,
    InstanceHypothesis, MatcherParams, TemplateStore,
};
use crate::pipeline::FrameReport;
use crate::plane::RgbImage;
use crate::scene_io::{load_sequence, PinholeCamera};

/// True object instance: origin position in camera coordinates (meters).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundTruth {
    pub frame: usize,
    pub texture_id: String,
    pub position: [f64; 3],
}

pub fn parse_ground_truth(text: &str) -> Result<Vec<GroundTruth>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let g: GroundTruth = serde_json::from_str(line).map_err(|e| Error::parse("ground truth", i + 1, e.to_string()))?;
        if !g.position.iter().all(|v| v.is_finite()) {
            return Err(Error::parse("ground truth", i + 1, "position must be finite"));
        }
        out.push(g);
    }
    Ok(out)
}

pub fn ground_truth_to_jsonl(records: &[GroundTruth]) -> String {
    records
        .iter()
        .map(|g| serde_json::to_string(g).expect("ground truth serializes") + "\n")
        .collect()
}

/// One accepted candidate and how it scored against the ground truth.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Detection {
    pub frame: usize,
    pub candidate_index: usize,
    pub template_id: usize,
    pub x: i64,
    pub y: i64,
    pub texture_id: String,
    pub fraction: f64,
    pub position: [f64; 3],
    pub true_positive: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct EvalReport {
    pub frames: usize,
    pub ground_truth_instances: usize,
    pub candidates: usize,
    /// Candidates within the per-frame cap.
    pub candidates_considered: usize,
    pub assignments: usize,
    pub true_positives: usize,
    /// `true_positives / ground_truth_instances` (0 without ground truth).
    pub true_positive_rate: f64,
    /// Share of assignments that are true positives (1 without assignments).
    pub assignment_accuracy: f64,
    pub classify_ms: Vec<f64>,
    pub lookup_ms: Vec<f64>,
    pub detections: Vec<Detection>,
}

/// Classifies each frame's candidates (in file order, capped per frame) and
/// scores the assignments: a detection is a true positive when its
/// estimated position lies within the detection radius of a ground-truth
/// instance carrying the same texture id. Every candidate and ground-truth
/// frame must be among `frames`.
pub fn run_detection_eval<I>(
    frames: I,
    camera: &PinholeCamera,
    ground_truth: &[GroundTruth],
    candidates: &[Candidate],
    store: &TemplateStore,
    hypotheses: &[InstanceHypothesis],
    params: &MatcherParams,
) -> Result<EvalReport>
where
    I: IntoIterator<Item = Result<(usize, RgbImage)>>,
{
    params.validate()?;
    let mut by_frame: BTreeMap<usize, Vec<Candidate>> = BTreeMap::new();
    for c in candidates {
        by_frame.entry(c.frame).or_default().push(c.clone());
    }
    let mut gt_by_frame: BTreeMap<usize, Vec<&GroundTruth>> = BTreeMap::new();
    for g in ground_truth {
        gt_by_frame.entry(g.frame).or_default().push(g);
    }

    let mut report = EvalReport {
        ground_truth_instances: ground_truth.len(),
        candidates: candidates.len(),
        ..EvalReport::default()
    };
    let mut seen = BTreeSet::new();
    for frame in frames {
        let (index, image) = frame?;
        seen.insert(index);
        report.frames += 1;
        let cands = by_frame.get(&index).map(Vec::as_slice).unwrap_or(&[]);
        report.candidates_considered += cands.len().min(params.max_candidates);
        let start = Instant::now();
        let hue = hue_descriptor(&image, &params.thresholds);
        let (assignments, lookups) = classify_instances_timed(&hue, cands, store, hypotheses, params);
        report.classify_ms.push(start.elapsed().as_secs_f64() * 1e3);
        report.lookup_ms.extend(lookups);

        let truths = gt_by_frame.get(&index).map(Vec::as_slice).unwrap_or(&[]);
        let mut matched = vec![false; truths.len()];
        for a in assignments {
            let template = store.get(a.candidate.template_id).expect("classified candidates have templates");
            let p = estimate_position(&a.candidate, template, camera);
            let hit = truths.iter().enumerate().position(|(k, g)| {
                !matched[k]
                    && g.texture_id == a.texture_id
                    && (p - nalgebra::Vector3::from(g.position)).norm() <= params.detection_radius_m
            });
            if let Some(k) = hit {
                matched[k] = true;
                report.true_positives += 1;
            }
            report.assignments += 1;
            report.detections.push(Detection {
                frame: index,
                candidate_index: a.candidate_index,
                template_id: a.candidate.template_id,
                x: a.candidate.x,
                y: a.candidate.y,
                texture_id: a.texture_id,
                fraction: a.fraction,
                position: [p.x, p.y, p.z],
                true_positive: hit.is_some(),
            });
        }
    }

    let missing: Vec<usize> = by_frame
        .keys()
        .chain(gt_by_frame.keys())
        .filter(|f| !seen.contains(f))
        .copied()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if !missing.is_empty() {
        return Err(Error::FrameMismatch(format!(
            "candidates or ground truth reference frames {missing:?} that are not in the sequence"
        )));
    }

    report.true_positive_rate = if report.ground_truth_instances > 0 {
        report.true_positives as f64 / report.ground_truth_instances as f64
    } else {
        0.0
    };
    report.assignment_accuracy = if report.assignments > 0 {
        report.true_positives as f64 / report.assignments as f64
    } else {
        1.0
    };
    Ok(report)
}

/// File-based entry point: a sequence directory, JSON-lines ground truth
/// and candidates, a template store directory and `(texture_id, png)` pairs.
pub fn run_detection_eval_files(
    sequence: &Path,
    ground_truth: &Path,
    candidates: &Path,
    templates: &Path,
    hypotheses: &[(String, std::path::PathBuf)],
    params: &MatcherParams,
) -> Result<EvalReport> {
    let read = |p: &Path| std::fs::read_to_string(p).map_err(|e| Error::io(p, e));
    let gt = parse_ground_truth(&read(ground_truth)?)?;
    let cands = parse_candidates(&read(candidates)?)?;
    let store = load_template_store(templates)?;
    let hyps = hypotheses
        .iter()
        .map(|(id, path)| InstanceHypothesis::new(id.clone(), RgbImage::load_png(path)?))
        .collect::<Result<Vec<_>>>()?;
    let seq = load_sequence(sequence)?;
    let camera = *seq.camera();
    let frames = seq.map(|r| r.map(|f| (f.index, f.image)));
    run_detection_eval(frames, &camera, &gt, &cands, &store, &hyps, params)
}

/// Writes the detections as JSON lines.
pub fn detections_to_jsonl(report: &EvalReport) -> String {
    report
        .detections
        .iter()
        .map(|d| serde_json::to_string(d).expect("detection serializes") + "\n")
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimingSummary {
    pub count: usize,
    pub mean_ms: f64,
    pub median_ms: f64,
    pub max_ms: f64,
}

/// `None` for an empty sample.
pub fn summarize(samples: &[f64]) -> Option<TimingSummary> {
    if samples.is_empty() {
        return None;
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    };
    Some(TimingSummary {
        count: n,
        mean_ms: sorted.iter().sum::<f64>() / n as f64,
        median_ms: median,
        max_ms: sorted[n - 1],
    })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct TimingTable {
    pub accumulate: Option<TimingSummary>,
    pub lookup: Option<TimingSummary>,
}

/// Summarizes per-frame accumulate times (skipped frames excluded) and
/// per-template lookup times.
pub fn report_timings(frames: &[FrameReport], lookup_ms: &[f64]) -> TimingTable {
    let accumulate: Vec<f64> = frames
        .iter()
        .filter(|f| f.skipped.is_none())
        .map(|f| f.timings.total_ms)
        .collect();
    TimingTable {
        accumulate: summarize(&accumulate),
        lookup: summarize(lookup_ms),
    }
}

/// Milliseconds with at least three significant digits.
pub fn format_ms(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v:.3}");
    }
    let decimals = (2 - v.abs().log10().floor() as i32).max(0) as usize;
    format!("{v:.decimals$}")
}

impl TimingTable {
    pub fn is_empty(&self) -> bool {
        self.accumulate.is_none() && self.lookup.is_none()
    }

    /// Plain-text table; rows appear only for non-empty samples.
    pub fn to_text(&self) -> String {
        let mut out = String::from("stage       count  mean_ms  median_ms  max_ms\n");
        for (name, row) in [("accumulate", self.accumulate), ("lookup", self.lookup)] {
            if let Some(s) = row {
                out.push_str(&format!(
                    "{name:<10}  {:>5}  {:>7}  {:>9}  {:>6}\n",
                    s.count,
                    format_ms(s.mean_ms),
                    format_ms(s.median_ms),
                    format_ms(s.max_ms)
                ));
            }
        }
        out
    }
}

/// Reads a `frames.jsonl` report written by the reconstruction driver.
pub fn parse_frame_reports(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let v: serde_json::Value = serde_json::from_str(line).map_err(|e| Error::parse("frame report", i + 1, e.to_string()))?;
        if v.get("skipped").map_or(false, |s| !s.is_null()) {
            continue;
        }
        let ms = v
            .get("timings")
            .and_then(|t| t.get("total_ms"))
            .and_then(serde_json::Value::as_f64)
            .ok_or_else(|| Error::parse("frame report", i + 1, "missing timings.total_ms"))?;
        out.push(ms);
    }
    Ok(out)
}
