//! Posed RGB frame sequences on disk:
//!
//! ```text
//! <dir>/camera.txt        fx fy cx cy width height
//! <dir>/poses.txt         16 floats per line, row-major world-to-camera
//! <dir>/frame_000000.png  8-bit RGB, one per pose
//! ```

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::plane::RgbImage;
use crate::scene_io::camera::{load_camera, load_poses, PinholeCamera, RigidPose};

pub const CAMERA_FILE: &str = "camera.txt";
pub const POSES_FILE: &str = "poses.txt";

pub fn frame_file_name(index: usize) -> String {
    format!("frame_{index:06}.png")
}

#[derive(Debug, Clone)]
pub struct FrameRecord {
    pub image: RgbImage,
    pub pose: RigidPose,
    pub camera: PinholeCamera,
    pub index: usize,
}

/// Lazily decodes the frames of a sequence directory in index order.
#[derive(Debug)]
pub struct SequenceReader {
    camera: PinholeCamera,
    poses: Vec<RigidPose>,
    frames: Vec<(usize, PathBuf)>,
    next: usize,
}

impl SequenceReader {
    pub fn camera(&self) -> &PinholeCamera {
        &self.camera
    }

    pub fn poses(&self) -> &[RigidPose] {
        &self.poses
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

impl Iterator for SequenceReader {
    type Item = Result<FrameRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        let slot = self.next;
        let (index, path) = self.frames.get(slot)?.clone();
        self.next += 1;
        Some(load_frame(&path, index, self.poses[slot], self.camera))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let rest = self.frames.len() - self.next;
        (rest, Some(rest))
    }
}

fn load_frame(path: &Path, index: usize, pose: RigidPose, camera: PinholeCamera) -> Result<FrameRecord> {
    let image = RgbImage::load_png(path)?;
    if image.width() != camera.width || image.height() != camera.height {
        return Err(Error::SizeMismatch {
            got_w: image.width(),
            got_h: image.height(),
            want_w: camera.width,
            want_h: camera.height,
        });
    }
    Ok(FrameRecord {
        image,
        pose,
        camera,
        index,
    })
}

/// Opens a sequence directory. Intrinsics and poses are parsed eagerly;
/// images are decoded as the reader advances.
pub fn load_sequence(dir: &Path) -> Result<SequenceReader> {
    let camera = load_camera(&dir.join(CAMERA_FILE))?;
    let poses = load_poses(&dir.join(POSES_FILE))?;
    let frames = list_frames(dir)?;
    if frames.len() != poses.len() {
        return Err(Error::CountMismatch {
            poses: poses.len(),
            images: frames.len(),
        });
    }
    Ok(SequenceReader {
        camera,
        poses,
        frames,
        next: 0,
    })
}

fn list_frames(dir: &Path) -> Result<Vec<(usize, PathBuf)>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut frames = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let name = entry.file_name();
        let Some(name) = name.to_str() else { continue };
        if let Some(index) = parse_frame_name(name) {
            frames.push((index, entry.path()));
        }
    }
    frames.sort();
    Ok(frames)
}

fn parse_frame_name(name: &str) -> Option<usize> {
    let digits = name.strip_prefix("frame_")?.strip_suffix(".png")?;
    if digits.len() < 6 || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_names() {
        assert_eq!(frame_file_name(7), "frame_000007.png");
        assert_eq!(parse_frame_name("frame_000007.png"), Some(7));
        assert_eq!(parse_frame_name("frame_1234567.png"), Some(1234567));
        assert_eq!(parse_frame_name("frame_7.png"), None);
        assert_eq!(parse_frame_name("frame_00000a.png"), None);
        assert_eq!(parse_frame_name("gt_texture.png"), None);
    }
}
