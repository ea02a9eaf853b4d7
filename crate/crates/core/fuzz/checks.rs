//! Per-target properties, shared by the fuzz binaries and the seed replay
//! test. Each returns whether the input was accepted and panics when an
//! accepted input breaks a property.

#![allow(dead_code)]

use livetex::eval::{ground_truth_to_jsonl, parse_frame_reports, parse_ground_truth};
use livetex::matcher::{candidates_to_jsonl, meta_to_text, parse_candidates, parse_template_meta};
use livetex::pipeline::{parse_config_text, PipelineConfig};
use livetex::scene_io::{parse_camera, parse_obj, parse_poses, poses_to_text, to_obj};
use livetex::RgbImage;

fn text(data: &[u8]) -> Option<&str> {
    std::str::from_utf8(data).ok()
}

pub fn obj(data: &[u8]) -> bool {
    let Some(Ok(mesh)) = text(data).map(parse_obj) else { return false };
    let again = parse_obj(&to_obj(&mesh)).expect("written mesh parses");
    assert_eq!(again.triangles(), mesh.triangles());
    true
}

pub fn poses(data: &[u8]) -> bool {
    let Some(Ok(poses)) = text(data).map(parse_poses) else { return false };
    let again = parse_poses(&poses_to_text(&poses)).expect("written poses parse");
    assert_eq!(again.len(), poses.len());
    true
}

pub fn camera(data: &[u8]) -> bool {
    let Some(Ok(camera)) = text(data).map(parse_camera) else { return false };
    assert_eq!(parse_camera(&camera.to_text()).expect("written camera parses"), camera);
    true
}

pub fn candidates(data: &[u8]) -> bool {
    let Some(Ok(cands)) = text(data).map(parse_candidates) else { return false };
    assert_eq!(parse_candidates(&candidates_to_jsonl(&cands)).expect("written candidates parse"), cands);
    true
}

pub fn config(data: &[u8]) -> bool {
    let Some(text) = text(data) else { return false };
    let pairs = parse_config_text(text);
    let mut cfg = PipelineConfig::default();
    let applied = cfg.apply_text(text);
    if pairs.is_err() {
        assert!(applied.is_err());
    }
    applied.is_ok() && cfg.validate().is_ok()
}

pub fn template_meta(data: &[u8]) -> bool {
    let Some(Ok(meta)) = text(data).map(parse_template_meta) else { return false };
    let again = parse_template_meta(&meta_to_text(&meta)).expect("written meta parses");
    assert_eq!(again.bbox, meta.bbox);
    assert_eq!(again.camera, meta.camera);
    true
}

pub fn ground_truth(data: &[u8]) -> bool {
    let Some(Ok(records)) = text(data).map(parse_ground_truth) else { return false };
    assert_eq!(parse_ground_truth(&ground_truth_to_jsonl(&records)).expect("written records parse"), records);
    true
}

pub fn frame_reports(data: &[u8]) -> bool {
    let Some(Ok(times)) = text(data).map(parse_frame_reports) else { return false };
    assert!(times.iter().all(|t| t.is_finite()));
    true
}

pub fn png(data: &[u8]) -> bool {
    let Ok(img) = RgbImage::decode_png(data) else { return false };
    assert_eq!(img.as_slice().len(), img.width() * img.height());
    true
}
