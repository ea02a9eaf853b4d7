//! Rendered test scenes with exact ground truth.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::{Quaternion, UnitQuaternion, Vector3};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::eval::{ground_truth_to_jsonl, GroundTruth};
use crate::matcher::store::save_template_store;
use crate::matcher::{candidates_to_jsonl, make_template, Candidate, PixelRect, TemplateStore};
use crate::plane::RgbImage;
use crate::raster::render_color;
use crate::scene_io::{frame_file_name, poses_to_text, write_mesh, Mesh, PinholeCamera, RigidPose, CAMERA_FILE, POSES_FILE};
use crate::synth::primitives;
use crate::synth::texture::{checkerboard, hue_clutter, value_noise};

pub const MESH_FILE: &str = "mesh.obj";
pub const GT_TEXTURE_FILE: &str = "gt_texture.png";
pub const CANDIDATES_FILE: &str = "candidates.jsonl";
pub const GROUND_TRUTH_FILE: &str = "ground_truth.jsonl";
pub const TEMPLATES_DIR: &str = "templates";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Primitive {
    Quad,
    Cube,
    Icosphere,
    Torus,
}

impl FromStr for Primitive {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quad" => Ok(Primitive::Quad),
            "cube" => Ok(Primitive::Cube),
            "icosphere" | "sphere" => Ok(Primitive::Icosphere),
            "torus" => Ok(Primitive::Torus),
            other => Err(Error::UnknownPrimitive(other.to_string())),
        }
    }
}

impl Primitive {
    /// Mesh whose largest extent is about `size`.
    pub fn mesh(self, size: f64) -> Result<Mesh> {
        match self {
            Primitive::Quad => primitives::quad(size),
            Primitive::Cube => primitives::cube(size),
            Primitive::Icosphere => primitives::icosphere(size * 0.5, 2),
            Primitive::Torus => primitives::torus(size * 0.35, size * 0.15, 32, 12),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TextureSpec {
    Checkerboard { cells: usize, a: [f32; 3], b: [f32; 3] },
    Noise { cells: usize, base: [f32; 3], amplitude: f32 },
    Uniform([f32; 3]),
    Image(PathBuf),
}

/// Colors addressable by name in texture specs.
pub fn named_color(name: &str) -> Option<[f32; 3]> {
    Some(match name {
        "red" => [0.85, 0.1, 0.08],
        "white" => [0.93, 0.93, 0.91],
        "green" => [0.1, 0.7, 0.2],
        "blue" => [0.1, 0.2, 0.85],
        "yellow" => [0.9, 0.85, 0.1],
        "black" => [0.03, 0.03, 0.03],
        "gray" => [0.5, 0.5, 0.5],
        _ => return None,
    })
}

impl FromStr for TextureSpec {
    type Err = Error;

    /// `checkerboard[:cells]`, `noise[:cells]`, `uniform:<color>`,
    /// `<color>` (low-amplitude noise around a named color) or `image:<png>`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, arg) = s.split_once(':').unwrap_or((s, ""));
        let cells = |default: usize| -> Result<usize> {
            if arg.is_empty() {
                return Ok(default);
            }
            arg.parse::<usize>()
                .ok()
                .filter(|&c| (1..=4096).contains(&c))
                .ok_or_else(|| Error::Config(format!("invalid cell count `{arg}`")))
        };
        match kind {
            "checkerboard" => Ok(TextureSpec::Checkerboard {
                cells: cells(8)?,
                a: [0.9, 0.2, 0.15],
                b: [0.15, 0.3, 0.85],
            }),
            "noise" => Ok(TextureSpec::Noise {
                cells: cells(8)?,
                base: [0.5; 3],
                amplitude: 0.4,
            }),
            "uniform" => named_color(arg)
                .map(TextureSpec::Uniform)
                .ok_or_else(|| Error::Config(format!("unknown color `{arg}`"))),
            "image" if !arg.is_empty() => Ok(TextureSpec::Image(PathBuf::from(arg))),
            name => named_color(name)
                .map(|base| TextureSpec::Noise {
                    cells: 6,
                    base,
                    amplitude: 0.04,
                })
                .ok_or_else(|| Error::Config(format!("unknown texture `{s}`"))),
        }
    }
}

impl TextureSpec {
    pub fn build(&self, size: usize, seed: u64) -> Result<RgbImage> {
        Ok(match self {
            TextureSpec::Checkerboard { cells, a, b } => checkerboard(size, *cells, *a, *b),
            TextureSpec::Noise { cells, base, amplitude } => value_noise(size, *cells, *base, *amplitude, seed),
            TextureSpec::Uniform(c) => RgbImage::new(size, size, *c),
            TextureSpec::Image(path) => RgbImage::load_png(path)?,
        })
    }
}

/// Per-frame photometric corruption.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Photometric {
    /// Frame gain drawn uniformly from `[1 - gain_jitter, 1 + gain_jitter]`.
    pub gain_jitter: f32,
    /// Standard deviation of additive per-channel Gaussian noise.
    pub noise_sigma: f32,
}

impl Default for Photometric {
    fn default() -> Self {
        Photometric {
            gain_jitter: 0.0,
            noise_sigma: 0.0,
        }
    }
}

impl Photometric {
    fn apply(&self, image: &mut RgbImage, rng: &mut ChaCha8Rng) {
        let gain = if self.gain_jitter > 0.0 {
            rng.gen_range(1.0 - self.gain_jitter..=1.0 + self.gain_jitter)
        } else {
            1.0
        };
        let noise = (self.noise_sigma > 0.0).then(|| Normal::new(0.0f32, self.noise_sigma).expect("positive sigma"));
        for p in image.as_mut_slice() {
            for c in p.iter_mut() {
                let n = noise.as_ref().map_or(0.0, |d| d.sample(rng));
                *c = (*c * gain + n).clamp(0.0, 1.0);
            }
        }
    }
}

/// 640x480 camera with a 525 px focal length.
pub fn default_camera() -> PinholeCamera {
    PinholeCamera::new(525.0, 525.0, 320.0, 240.0, 640, 480).expect("valid intrinsics")
}

/// `n` cameras on a circle of `radius` around the z axis, looking at the
/// origin with z up, alternating `+elevation` and `-elevation`.
pub fn orbit_poses(n: usize, radius: f64, elevation_deg: f64) -> Vec<RigidPose> {
    (0..n)
        .map(|k| {
            let az = 2.0 * std::f64::consts::PI * k as f64 / n.max(1) as f64;
            let el = elevation_deg.to_radians() * if k % 2 == 0 { 1.0 } else { -1.0 };
            let eye = Vector3::new(el.cos() * az.cos(), el.cos() * az.sin(), el.sin()) * radius;
            RigidPose::look_at(eye, Vector3::zeros(), Vector3::z())
        })
        .collect()
}

/// Z-composited render of several textured meshes over `background`.
pub fn render_objects(objects: &[(&Mesh, &RgbImage, RigidPose)], camera: &PinholeCamera, background: &RgbImage) -> RgbImage {
    let mut image = background.clone();
    let mut nearest = vec![f64::INFINITY; camera.width * camera.height];
    for (mesh, texture, pose) in objects {
        let r = render_color(mesh, texture, camera, pose);
        for y in 0..camera.height {
            for x in 0..camera.width {
                if let Some(z) = r.depth.view_z(x, y) {
                    let i = y * camera.width + x;
                    if z < nearest[i] {
                        nearest[i] = z;
                        *image.get_mut(x, y) = *r.image.get(x, y);
                    }
                }
            }
        }
    }
    image
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequenceSpec {
    pub primitive: Primitive,
    pub object_size: f64,
    pub texture: TextureSpec,
    pub texture_size: usize,
    pub frames: usize,
    pub camera: PinholeCamera,
    pub orbit_radius: f64,
    pub elevation_deg: f64,
    pub photometric: Photometric,
    /// Block size of a hue-clutter background; black when `None`.
    pub clutter_block: Option<usize>,
    pub seed: u64,
}

impl Default for SequenceSpec {
    fn default() -> Self {
        SequenceSpec {
            primitive: Primitive::Cube,
            object_size: 0.2,
            texture: TextureSpec::Checkerboard {
                cells: 4,
                a: [0.9, 0.2, 0.15],
                b: [0.15, 0.3, 0.85],
            },
            texture_size: 256,
            frames: 12,
            camera: default_camera(),
            orbit_radius: 0.45,
            elevation_deg: 30.0,
            photometric: Photometric::default(),
            clutter_block: None,
            seed: 0,
        }
    }
}

/// An orbit sequence around a single object at the origin.
#[derive(Debug, Clone)]
pub struct SyntheticSequence {
    pub mesh: Mesh,
    pub texture: RgbImage,
    pub camera: PinholeCamera,
    pub poses: Vec<RigidPose>,
    /// 8-bit quantized, as they would be read back from disk.
    pub frames: Vec<RgbImage>,
}

fn background(camera: &PinholeCamera, clutter_block: Option<usize>, seed: u64) -> RgbImage {
    match clutter_block {
        Some(block) => hue_clutter(camera.width, camera.height, block, seed),
        None => RgbImage::new(camera.width, camera.height, [0.0; 3]),
    }
}

pub fn render_sequence(spec: &SequenceSpec) -> Result<SyntheticSequence> {
    let mesh = spec.primitive.mesh(spec.object_size)?;
    let texture = spec.texture.build(spec.texture_size, spec.seed)?;
    let poses = orbit_poses(spec.frames, spec.orbit_radius, spec.elevation_deg);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0x5eed);
    let frames = poses
        .iter()
        .enumerate()
        .map(|(k, pose)| {
            let bg = background(&spec.camera, spec.clutter_block, spec.seed.wrapping_add(k as u64));
            let mut img = render_objects(&[(&mesh, &texture, *pose)], &spec.camera, &bg);
            spec.photometric.apply(&mut img, &mut rng);
            img.quantized()
        })
        .collect();
    Ok(SyntheticSequence {
        mesh,
        texture,
        camera: spec.camera,
        poses,
        frames,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SceneSummary {
    pub frames: usize,
    pub templates: usize,
    pub candidates: usize,
    pub ground_truth: usize,
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_frames(dir: &Path, frames: &[RgbImage], poses: &[RigidPose], camera: &PinholeCamera) -> Result<()> {
    for (k, f) in frames.iter().enumerate() {
        f.save_png(&dir.join(frame_file_name(k)))?;
    }
    write_text(&dir.join(POSES_FILE), &poses_to_text(poses))?;
    write_text(&dir.join(CAMERA_FILE), &camera.to_text())
}

/// Renders an orbit sequence and writes it as a sequence directory, plus
/// the mesh, ground-truth texture, one template per frame and the matching
/// candidates and ground-truth records (texture id `object`).
pub fn generate_synthetic_scene(spec: &SequenceSpec, out: &Path) -> Result<SceneSummary> {
    let seq = render_sequence(spec)?;
    create_dir(out)?;
    write_frames(out, &seq.frames, &seq.poses, &seq.camera)?;
    write_mesh(&out.join(MESH_FILE), &seq.mesh)?;
    seq.texture.save_png(&out.join(GT_TEXTURE_FILE))?;

    let mut templates = Vec::new();
    let mut candidates = Vec::new();
    let mut truth = Vec::new();
    for (k, pose) in seq.poses.iter().enumerate() {
        let Ok(t) = make_template(&seq.mesh, &seq.camera, pose) else { continue };
        candidates.push(Candidate {
            frame: k,
            template_id: templates.len(),
            x: t.bbox.x,
            y: t.bbox.y,
            score: 1.0,
            depth_bin: None,
        });
        let p = pose.translation;
        truth.push(GroundTruth {
            frame: k,
            texture_id: "object".into(),
            position: [p.x, p.y, p.z],
        });
        templates.push(t);
    }
    let store = TemplateStore::new(templates);
    save_template_store(&out.join(TEMPLATES_DIR), &store)?;
    write_text(&out.join(CANDIDATES_FILE), &candidates_to_jsonl(&candidates))?;
    write_text(&out.join(GROUND_TRUTH_FILE), &ground_truth_to_jsonl(&truth))?;
    Ok(SceneSummary {
        frames: seq.frames.len(),
        templates: store.len(),
        candidates: candidates.len(),
        ground_truth: truth.len(),
    })
}

/// Several same-geometry objects with distinct textures, seen side by side
/// in front of hue clutter, with detector candidates of which a given
/// share are spurious.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceSceneSpec {
    pub primitive: Primitive,
    pub object_size: f64,
    pub instances: Vec<(String, TextureSpec)>,
    pub texture_size: usize,
    pub frames: usize,
    pub camera: PinholeCamera,
    /// Object-origin depth range in meters.
    pub distance_range: (f64, f64),
    /// Target share of spurious candidates among all candidates.
    pub spurious_fraction: f64,
    pub clutter_block: usize,
    pub photometric: Photometric,
    pub seed: u64,
}

impl Default for InstanceSceneSpec {
    fn default() -> Self {
        let named = |n: &str| (n.to_string(), n.parse::<TextureSpec>().expect("named color"));
        InstanceSceneSpec {
            primitive: Primitive::Cube,
            object_size: 0.12,
            instances: vec![named("red"), named("white")],
            texture_size: 256,
            frames: 20,
            camera: default_camera(),
            distance_range: (0.7, 1.1),
            spurious_fraction: 0.3,
            clutter_block: 16,
            photometric: Photometric {
                gain_jitter: 0.08,
                noise_sigma: 0.01,
            },
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct InstanceScene {
    pub mesh: Mesh,
    pub textures: Vec<(String, RgbImage)>,
    pub camera: PinholeCamera,
    pub frames: Vec<RgbImage>,
    /// `object_poses[frame][instance]`.
    pub object_poses: Vec<Vec<RigidPose>>,
    pub store: TemplateStore,
    pub candidates: Vec<Candidate>,
    pub ground_truth: Vec<GroundTruth>,
}

fn random_rotation(rng: &mut ChaCha8Rng) -> UnitQuaternion<f64> {
    // Uniform over SO(3).
    let (u1, u2, u3): (f64, f64, f64) = (rng.gen(), rng.gen(), rng.gen());
    let tau = 2.0 * std::f64::consts::PI;
    let (a, b) = ((1.0 - u1).sqrt(), u1.sqrt());
    UnitQuaternion::from_quaternion(Quaternion::new(
        b * (tau * u3).cos(),
        a * (tau * u2).sin(),
        a * (tau * u2).cos(),
        b * (tau * u3).sin(),
    ))
}

fn overlaps(a: &PixelRect, b: &PixelRect, margin: i64) -> bool {
    a.x - margin < b.x + b.width as i64
        && b.x - margin < a.x + a.width as i64
        && a.y - margin < b.y + b.height as i64
        && b.y - margin < a.y + a.height as i64
}

pub fn render_instance_scene(spec: &InstanceSceneSpec) -> Result<InstanceScene> {
    if spec.instances.is_empty() {
        return Err(Error::Config("instance scene needs at least one instance".into()));
    }
    if !(0.0..1.0).contains(&spec.spurious_fraction) {
        return Err(Error::Config("spurious fraction must lie in [0, 1)".into()));
    }
    let mesh = spec.primitive.mesh(spec.object_size)?;
    let textures = spec
        .instances
        .iter()
        .enumerate()
        .map(|(k, (id, t))| Ok((id.clone(), t.build(spec.texture_size, spec.seed.wrapping_add(k as u64 * 7919))?)))
        .collect::<Result<Vec<_>>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let cam = spec.camera;
    let k = spec.instances.len();
    let spacing = spec.object_size * 1.9;

    let mut frames = Vec::with_capacity(spec.frames);
    let mut object_poses = Vec::with_capacity(spec.frames);
    let mut templates = Vec::new();
    let mut per_frame: Vec<Vec<Candidate>> = Vec::with_capacity(spec.frames);
    let mut ground_truth = Vec::new();
    let mut boxes: Vec<Vec<PixelRect>> = Vec::with_capacity(spec.frames);

    for f in 0..spec.frames {
        let mut attempt = 0;
        let (poses, frame_templates) = loop {
            attempt += 1;
            let mut slots: Vec<usize> = (0..k).collect();
            slots.shuffle(&mut rng);
            let z = rng.gen_range(spec.distance_range.0..=spec.distance_range.1);
            let poses: Vec<RigidPose> = slots
                .iter()
                .map(|&slot| {
                    let x = (slot as f64 - (k as f64 - 1.0) / 2.0) * spacing + rng.gen_range(-0.02..0.02);
                    let y = rng.gen_range(-0.04..0.04);
                    let dz = rng.gen_range(-0.03..0.03);
                    RigidPose {
                        rotation: random_rotation(&mut rng).to_rotation_matrix().into_inner(),
                        translation: Vector3::new(x, y, z + dz),
                    }
                })
                .collect();
            let made: Result<Vec<_>> = poses.iter().map(|p| make_template(&mesh, &cam, p)).collect();
            let Ok(made) = made else { continue };
            let clear = (0..k).all(|a| (a + 1..k).all(|b| !overlaps(&made[a].bbox, &made[b].bbox, 4)));
            if clear || attempt >= 50 {
                break (poses, made);
            }
        };

        let objects: Vec<(&Mesh, &RgbImage, RigidPose)> =
            poses.iter().zip(&textures).map(|(p, (_, t))| (&mesh, t, *p)).collect();
        let bg = hue_clutter(cam.width, cam.height, spec.clutter_block, spec.seed.wrapping_mul(31).wrapping_add(f as u64));
        let mut img = render_objects(&objects, &cam, &bg);
        spec.photometric.apply(&mut img, &mut rng);
        frames.push(img.quantized());

        let mut cands = Vec::with_capacity(k);
        let mut frame_boxes = Vec::with_capacity(k);
        for (t, (pose, (id, _))) in frame_templates.into_iter().zip(poses.iter().zip(&textures)) {
            cands.push(Candidate {
                frame: f,
                template_id: templates.len(),
                x: t.bbox.x,
                y: t.bbox.y,
                score: 1.0,
                depth_bin: None,
            });
            let p = pose.translation;
            ground_truth.push(GroundTruth {
                frame: f,
                texture_id: id.clone(),
                position: [p.x, p.y, p.z],
            });
            frame_boxes.push(t.bbox);
            templates.push(t);
        }
        per_frame.push(cands);
        boxes.push(frame_boxes);
        object_poses.push(poses);
    }

    let true_total: usize = per_frame.iter().map(Vec::len).sum();
    let spurious = (spec.spurious_fraction / (1.0 - spec.spurious_fraction) * true_total as f64).round() as usize;
    let mut placed = 0;
    let mut tries = 0;
    while placed < spurious && tries < spurious * 1000 && !templates.is_empty() {
        tries += 1;
        let f = rng.gen_range(0..spec.frames);
        let template_id = rng.gen_range(0..templates.len());
        let t = &templates[template_id];
        let (w, h) = (t.bbox.width as i64, t.bbox.height as i64);
        if w > cam.width as i64 || h > cam.height as i64 {
            continue;
        }
        // Detector windows lie inside the image.
        let window = PixelRect {
            x: rng.gen_range(0..=cam.width as i64 - w),
            y: rng.gen_range(0..=cam.height as i64 - h),
            width: t.bbox.width,
            height: t.bbox.height,
        };
        if boxes[f].iter().any(|b| overlaps(b, &window, 2)) {
            continue;
        }
        let c = Candidate {
            frame: f,
            template_id,
            x: window.x,
            y: window.y,
            score: rng.gen_range(0.5..1.0),
            depth_bin: None,
        };
        let at = rng.gen_range(0..=per_frame[f].len());
        per_frame[f].insert(at, c);
        placed += 1;
    }

    Ok(InstanceScene {
        mesh,
        textures,
        camera: cam,
        frames,
        object_poses,
        store: TemplateStore::new(templates),
        candidates: per_frame.into_iter().flatten().collect(),
        ground_truth,
    })
}

/// Writes the scene as a sequence directory (poses of the first instance
/// in `poses.txt`) with `gt_<id>.png` textures, the template store,
/// candidates and ground truth.
pub fn write_instance_scene(scene: &InstanceScene, out: &Path) -> Result<SceneSummary> {
    create_dir(out)?;
    let first: Vec<RigidPose> = scene.object_poses.iter().map(|p| p[0]).collect();
    write_frames(out, &scene.frames, &first, &scene.camera)?;
    write_mesh(&out.join(MESH_FILE), &scene.mesh)?;
    for (id, tex) in &scene.textures {
        tex.save_png(&out.join(format!("gt_{id}.png")))?;
    }
    save_template_store(&out.join(TEMPLATES_DIR), &scene.store)?;
    write_text(&out.join(CANDIDATES_FILE), &candidates_to_jsonl(&scene.candidates))?;
    write_text(&out.join(GROUND_TRUTH_FILE), &ground_truth_to_jsonl(&scene.ground_truth))?;
    Ok(SceneSummary {
        frames: scene.frames.len(),
        templates: scene.store.len(),
        candidates: scene.candidates.len(),
        ground_truth: scene.ground_truth.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn specs_parse() {
        assert_eq!("cube".parse::<Primitive>().unwrap(), Primitive::Cube);
        assert!(matches!("cone".parse::<Primitive>(), Err(Error::UnknownPrimitive(_))));
        assert!(matches!("checkerboard:4".parse::<TextureSpec>().unwrap(), TextureSpec::Checkerboard { cells: 4, .. }));
        assert!(matches!("red".parse::<TextureSpec>().unwrap(), TextureSpec::Noise { .. }));
        assert_eq!("uniform:white".parse::<TextureSpec>().unwrap(), TextureSpec::Uniform(named_color("white").unwrap()));
        assert!("checkerboard:0".parse::<TextureSpec>().is_err());
        assert!("plaid".parse::<TextureSpec>().is_err());
    }

    #[test]
    fn orbit_looks_at_origin() {
        for p in orbit_poses(12, 0.6, 30.0) {
            let o = p.transform_point(&Vector3::zeros());
            assert!(o.x.abs() < 1e-12 && o.y.abs() < 1e-12);
            assert!((o.z - 0.6).abs() < 1e-12);
        }
    }

    #[test]
    fn instance_scene_layout() {
        let spec = InstanceSceneSpec {
            frames: 4,
            ..InstanceSceneSpec::default()
        };
        let scene = render_instance_scene(&spec).unwrap();
        assert_eq!(scene.frames.len(), 4);
        assert_eq!(scene.ground_truth.len(), 8);
        assert_eq!(scene.store.len(), 8);
        let spurious = scene.candidates.len() - 8;
        assert_eq!(spurious, 3);
        // Per frame: both instances present, and no two object boxes overlap.
        for f in 0..4 {
            let truths: Vec<_> = scene.ground_truth.iter().filter(|g| g.frame == f).collect();
            assert_eq!(truths.len(), 2);
        }
        let again = render_instance_scene(&spec).unwrap();
        assert_eq!(again.candidates, scene.candidates);
        assert_eq!(again.frames, scene.frames);
    }
}
