//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure.

mod common;

use std::time::Instant;

use nalgebra::{Rotation3, Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use livetex::eval::{run_detection_eval, summarize};
use livetex::exposure::{luma_stats, normalize_luma, rgb_to_yuv, transfer_yuv, ExposureMode, LumaStats};
use livetex::fusion::{blend_boundaries, merge_argmax, merge_mean, IncrementPatch, MergeMode, PatchTexel, TextureAccumulator};
use livetex::matcher::{hue_distance, pixel_hue, sample_template_poses, view_directions, HueThresholds, InstanceHypothesis, MatcherParams};
use livetex::pipeline::Reconstructor;
use livetex::raster::{focus_camera, rasterize_texture_space, render_biased_depth, DiscontinuityMask, RasterConfig};
use livetex::scene_io::{Mesh, PinholeCamera, RigidPose, Vertex};
use livetex::synth::{default_camera, render_instance_scene, render_sequence, InstanceSceneSpec, SequenceSpec, SyntheticSequence, TextureSpec};
use livetex::synth::primitives::{icosphere, torus};

use common::{batch_argmax, batch_weighted_mean, linf, raycast_visibility, texel_truth};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

/// Inputs and timings reused by the throughput check.
#[derive(Default)]
struct Shared {
    sequence: Option<SyntheticSequence>,
    lookup_ms: Vec<f64>,
}

fn round_trip(shared: &mut Shared) -> Outcome {
    let start = Instant::now();
    let spec = SequenceSpec::default();
    let seq = render_sequence(&spec).expect("render");
    let raster = RasterConfig::default();
    let n = raster.texture_size;
    // Synthetic frames are already photometrically consistent.
    let mut rec = Reconstructor::new(seq.mesh.clone(), raster, MergeMode::Argmax, ExposureMode::Off, true);
    for (k, (frame, pose)) in seq.frames.iter().zip(&seq.poses).enumerate() {
        rec.process(k, frame.clone(), &seq.camera, pose).expect("process");
    }
    let elapsed = start.elapsed().as_secs_f64();
    let acc = rec.accumulator();
    let (mut observed, mut good) = (0usize, 0usize);
    for y in 0..n {
        for x in 0..n {
            if acc.alpha(x, y) <= 0.0 {
                continue;
            }
            observed += 1;
            let c = acc.color(x, y).map(|v| v as f32);
            if linf(c, texel_truth(&seq.texture, x, y, n)) <= 2.0 / 255.0 + 1e-6 {
                good += 1;
            }
        }
    }
    let frac = good as f64 / observed.max(1) as f64;
    shared.sequence = Some(seq);
    outcome(
        observed > 0 && frac >= 0.95 && elapsed < 30.0,
        format!("{:.2}% of {observed} observed texels within 2/255 (need 95%), {elapsed:.2} s (need < 30 s)", 100.0 * frac),
    )
}

fn random_pose(rng: &mut ChaCha8Rng, mesh: &Mesh) -> RigidPose {
    let d = mesh.diameter();
    let dir = Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0f64));
    let dir = if dir.norm() < 1e-3 { Vector3::z() } else { dir.normalize() };
    let eye = dir * d * rng.gen_range(1.6..3.0);
    // Off-center targets push parts of the object out of the frame.
    let target = Vector3::new(rng.gen_range(-0.4..0.4), rng.gen_range(-0.4..0.4), rng.gen_range(-0.4..0.4)) * d;
    let up = if dir.z.abs() > 0.95 { Vector3::y() } else { Vector3::z() };
    let base = RigidPose::look_at(eye, target, up);
    let spin = Rotation3::from_axis_angle(&Vector3::z_axis(), rng.gen_range(-3.1..3.1));
    RigidPose {
        rotation: spin.matrix() * base.rotation,
        translation: spin * base.translation,
    }
}

fn visibility_oracle() -> Outcome {
    let camera = default_camera();
    let raster = RasterConfig {
        texture_size: 256,
        ..RasterConfig::default()
    };
    let meshes = [
        ("icosphere", icosphere(0.5, 2).expect("icosphere")),
        ("torus", torus(0.35, 0.15, 32, 12).expect("torus")),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = (1.0f64, String::new());
    for (name, mesh) in &meshes {
        assert!(mesh.triangles().len() <= 800, "{name} has {} triangles", mesh.triangles().len());
        for k in 0..20 {
            let pose = random_pose(&mut rng, mesh);
            let Ok(focused) = focus_camera(&camera, mesh, &pose) else {
                continue;
            };
            let depth = render_biased_depth(mesh, &focused, &pose, &raster);
            let mask = DiscontinuityMask::all_valid(focused.width, focused.height);
            let samples = rasterize_texture_space(mesh, &camera, &pose, &depth, &mask, &raster);
            let oracle = raycast_visibility(mesh, &camera, &pose, raster.texture_size);
            let (mut total, mut agree) = (0usize, 0usize);
            let valid = samples.valid_mask();
            for (&v, o) in valid.as_slice().iter().zip(&oracle) {
                if o.is_none() && !v {
                    continue;
                }
                total += 1;
                if v == o.unwrap_or(false) {
                    agree += 1;
                }
            }
            let frac = agree as f64 / total.max(1) as f64;
            if frac < worst.0 {
                worst = (frac, format!("{name} pose {k}"));
            }
        }
    }
    outcome(
        worst.0 >= 0.99,
        format!("worst per-pose agreement {:.3}% ({}), need 99%", 100.0 * worst.0, worst.1),
    )
}

const PATCH_SIDE: usize = 100;
const OBSERVATIONS: usize = 10;

fn random_patches(rng: &mut ChaCha8Rng, score: impl Fn(&mut ChaCha8Rng) -> f32) -> Vec<IncrementPatch> {
    (0..OBSERVATIONS)
        .map(|_| {
            let mut texels = Vec::new();
            for i in 0..PATCH_SIDE * PATCH_SIDE {
                if rng.gen_bool(0.8) {
                    texels.push(PatchTexel {
                        texel: i as u32,
                        color: [rng.gen(), rng.gen(), rng.gen()],
                        score: score(rng),
                        blend_weight: 1.0,
                    });
                }
            }
            IncrementPatch::from_texels(PATCH_SIDE, texels)
        })
        .collect()
}

fn mean_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let patches = random_patches(&mut rng, |r| r.gen_range(0.0..=1.0));
    let mut acc = TextureAccumulator::new(PATCH_SIDE, MergeMode::Mean);
    for p in &patches {
        merge_mean(&mut acc, p);
    }
    let dense: Vec<Vec<Option<PatchTexel>>> = patches.iter().map(IncrementPatch::dense).collect();
    let mut worst = 0.0f64;
    for y in 0..PATCH_SIDE {
        for x in 0..PATCH_SIDE {
            for k in 0..3 {
                let obs: Vec<(f64, f64)> = dense
                    .iter()
                    .filter_map(|p| p[y * PATCH_SIDE + x])
                    .map(|t| (t.color[k] as f64, t.score as f64))
                    .collect();
                let got = acc.color(x, y)[k];
                let err = match batch_weighted_mean(&obs) {
                    Some(want) => (got - want).abs(),
                    None => got.abs() + acc.alpha(x, y),
                };
                worst = worst.max(err);
            }
        }
    }
    outcome(
        worst <= 1e-6,
        format!("max |streaming - batch| = {worst:.3e} over {} texels, need <= 1e-6", PATCH_SIDE * PATCH_SIDE),
    )
}

fn argmax_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    // Coarse scores force ties.
    let patches = random_patches(&mut rng, |r| r.gen_range(0..=10) as f32 / 10.0);
    let mut acc = TextureAccumulator::new(PATCH_SIDE, MergeMode::Argmax);
    for p in &patches {
        merge_argmax(&mut acc, p);
    }
    let dense: Vec<Vec<Option<PatchTexel>>> = patches.iter().map(IncrementPatch::dense).collect();
    let (mut mismatches, mut ties) = (0usize, 0usize);
    for y in 0..PATCH_SIDE {
        for x in 0..PATCH_SIDE {
            let texels: Vec<PatchTexel> = dense.iter().filter_map(|p| p[y * PATCH_SIDE + x]).collect();
            let mut want = [0.0f64; 3];
            let mut want_alpha = 0.0f64;
            for k in 0..3 {
                let obs: Vec<(f32, f32)> = texels.iter().map(|t| (t.color[k], t.score)).collect();
                if let Some((c, s)) = batch_argmax(&obs) {
                    want[k] = c as f64;
                    want_alpha = s as f64;
                }
            }
            let best = texels.iter().map(|t| t.score).fold(0.0f32, f32::max);
            if best > 0.0 && texels.iter().filter(|t| t.score == best).count() > 1 {
                ties += 1;
            }
            if acc.color(x, y) != want || acc.alpha(x, y) != want_alpha {
                mismatches += 1;
            }
        }
    }
    outcome(
        mismatches == 0 && ties > 0,
        format!("{mismatches} mismatching texels of {}, {ties} with tied best scores", PATCH_SIDE * PATCH_SIDE),
    )
}

fn plane_mesh(corners: [Vector3<f64>; 4]) -> Mesh {
    let normal = (corners[1] - corners[0]).cross(&(corners[3] - corners[0])).normalize();
    let uvs = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
    let vertices = corners
        .iter()
        .zip(uvs)
        .map(|(&position, uv)| Vertex {
            position,
            normal,
            uv: Vector2::new(uv[0], uv[1]),
        })
        .collect();
    Mesh::new(vertices, vec![[0, 1, 2], [0, 2, 3]]).expect("plane mesh")
}

fn depth_bias() -> Outcome {
    let camera = PinholeCamera::new(500.0, 500.0, 160.0, 120.0, 320, 240).expect("camera");
    let raster = RasterConfig::default();
    let r = raster.depth_resolution_r;

    // Frontal: constant depth, no slope term.
    let z0 = 1.0;
    let s = 0.2;
    let frontal = plane_mesh([
        Vector3::new(-s, -s, z0),
        Vector3::new(s, -s, z0),
        Vector3::new(s, s, z0),
        Vector3::new(-s, s, z0),
    ]);
    let buf = render_biased_depth(&frontal, &camera, &RigidPose::identity(), &raster);
    let want = buf.range.ndc(z0) + r;
    let (mut frontal_px, mut frontal_bad) = (0usize, 0usize);
    for i in 0..buf.biased.len() {
        if buf.is_foreground(i % camera.width, i / camera.width) {
            frontal_px += 1;
            if buf.biased[i] != want {
                frontal_bad += 1;
            }
        }
    }

    // Tilted 45 degrees about the camera y axis through (0, 0, z0).
    let rot = Rotation3::from_axis_angle(&Vector3::y_axis(), std::f64::consts::FRAC_PI_4);
    let center = Vector3::new(0.0, 0.0, z0);
    let tilted = plane_mesh(
        [[-s, -s], [s, -s], [s, s], [-s, s]].map(|[a, b]| center + rot * Vector3::new(a, b, 0.0)),
    );
    let buf = render_biased_depth(&tilted, &camera, &RigidPose::identity(), &raster);
    let nrm = rot * Vector3::z();
    let c = nrm.dot(&center);
    let range = buf.range;
    let span = 1.0 / range.near - 1.0 / range.far;
    let slope = (nrm.x / (camera.fx * c) / span).abs().max((nrm.y / (camera.fy * c) / span).abs());
    let (mut tilted_px, mut worst) = (0usize, 0.0f64);
    for y in 0..camera.height {
        for x in 0..camera.width {
            if !buf.is_foreground(x, y) {
                continue;
            }
            tilted_px += 1;
            let ray = Vector3::new((x as f64 + 0.5 - camera.cx) / camera.fx, (y as f64 + 0.5 - camera.cy) / camera.fy, 1.0);
            let z = c / nrm.dot(&ray);
            let expect = range.ndc(z) + slope + r;
            worst = worst.max((buf.biased[y * camera.width + x] - expect).abs());
        }
    }
    outcome(
        frontal_px > 0 && frontal_bad == 0 && tilted_px > 0 && worst <= 1e-4,
        format!(
            "frontal: {frontal_bad}/{frontal_px} pixels differ from depth + r; tilted: max error {worst:.3e} over {tilted_px} pixels (need <= 1e-4)"
        ),
    )
}

fn exposure_transfer() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (w, h) = (64, 48);
    let reference = LumaStats { mean: 0.5, stddev: 0.08 };
    let (mut worst_stat, mut uv_changed, mut frames) = (0.0f64, 0usize, 0usize);
    for _ in 0..10 {
        let base: f32 = rng.gen_range(0.3..0.6);
        let spread: f32 = rng.gen_range(0.05..0.2);
        // Low-chroma pixels keep the transferred frame inside the RGB cube.
        let img = livetex::RgbImage::from_fn(w, h, |_, _| {
            let l = base + spread * rng.gen_range(-1.0..1.0f32);
            [l + rng.gen_range(-0.02..0.02), l + rng.gen_range(-0.02..0.02), l + rng.gen_range(-0.02..0.02)]
        });
        let (yuv, _) = transfer_yuv(&img, reference).expect("transfer");
        for (p, q) in img.as_slice().iter().zip(&yuv) {
            let src = rgb_to_yuv(*p);
            if src[1].to_bits() != q[1].to_bits() || src[2].to_bits() != q[2].to_bits() {
                uv_changed += 1;
            }
        }
        let out = normalize_luma(&img, reference).expect("normalize");
        let stats = luma_stats(&out.image).expect("stats");
        worst_stat = worst_stat
            .max((stats.mean - reference.mean).abs())
            .max((stats.stddev - reference.stddev).abs());
        frames += 1;
    }
    outcome(
        worst_stat <= 1e-3 && uv_changed == 0,
        format!("max luma mean/std error {worst_stat:.3e} over {frames} frames (need <= 1e-3); {uv_changed} U/V values altered"),
    )
}

fn blending_ramp() -> Outcome {
    let side = 40;
    let texels = (0..side * side)
        .filter(|i| i % side >= 15)
        .map(|i| PatchTexel {
            texel: i as u32,
            color: [0.5; 3],
            score: 1.0,
            blend_weight: 1.0,
        })
        .collect();
    let patch = blend_boundaries(IncrementPatch::from_texels(side, texels));
    let dense = patch.dense();
    let weight = |x: usize, y: usize| dense[y * side + x].map_or(0.0, |t| t.blend_weight);
    let expected = [0.2f32, 0.4, 0.6, 0.8, 1.0];
    let mut worst = 0.0f32;
    for y in 0..side {
        for (k, e) in expected.iter().enumerate() {
            worst = worst.max((weight(15 + k, y) - e).abs());
        }
        worst = worst.max((weight(30, y) - 1.0).abs());
        worst = worst.max(weight(14, y));
    }
    let row: Vec<String> = (15..20).map(|x| format!("{:.2}", weight(x, 0))).collect();
    outcome(worst <= 1e-6, format!("weights at distance 1..5: [{}], max error {worst:.1e}", row.join(", ")))
}

fn reconstruct_instance_texture(texture: &TextureSpec, size: f64, seed: u64) -> livetex::RgbImage {
    let spec = SequenceSpec {
        object_size: size,
        texture: texture.clone(),
        frames: 12,
        orbit_radius: 0.5,
        seed,
        ..SequenceSpec::default()
    };
    let seq = render_sequence(&spec).expect("render");
    let raster = RasterConfig {
        texture_size: 256,
        ..RasterConfig::default()
    };
    let mut rec = Reconstructor::new(seq.mesh.clone(), raster, MergeMode::Argmax, ExposureMode::Off, true);
    for (k, (frame, pose)) in seq.frames.iter().zip(&seq.poses).enumerate() {
        rec.process(k, frame.clone(), &seq.camera, pose).expect("process");
    }
    rec.accumulator().texture()
}

fn instance_discrimination(shared: &mut Shared) -> Outcome {
    let spec = InstanceSceneSpec::default();
    let hypotheses: Vec<InstanceHypothesis> = spec
        .instances
        .iter()
        .enumerate()
        .map(|(i, (id, tex))| {
            let texture = reconstruct_instance_texture(tex, spec.object_size, 100 + i as u64);
            InstanceHypothesis::new(id.clone(), texture).expect("hypothesis")
        })
        .collect();
    let scene = render_instance_scene(&spec).expect("instance scene");
    let frames = scene.frames.iter().cloned().enumerate().map(Ok);
    let report = run_detection_eval(
        frames,
        &scene.camera,
        &scene.ground_truth,
        &scene.candidates,
        &scene.store,
        &hypotheses,
        &MatcherParams::default(),
    )
    .expect("eval");
    shared.lookup_ms.extend_from_slice(&report.lookup_ms);
    let spurious = scene.candidates.len() - scene.ground_truth.len();
    outcome(
        report.assignment_accuracy == 1.0 && report.true_positive_rate >= 0.95,
        format!(
            "{} views, {} candidates ({spurious} spurious): accuracy {:.1}% over {} assignments (need 100%), TPR {:.3} (need 0.95)",
            report.frames,
            report.candidates,
            100.0 * report.assignment_accuracy,
            report.assignments,
            report.true_positive_rate
        ),
    )
}

fn hue_descriptor() -> Outcome {
    let th = HueThresholds::default();
    let checks = [
        ("black", pixel_hue([0.0; 3], &th), Some(240.0)),
        ("white", pixel_hue([1.0; 3], &th), Some(60.0)),
        ("red", pixel_hue([1.0, 0.0, 0.0], &th), Some(0.0)),
        ("distance(350, 10)", Some(hue_distance(350.0, 10.0)), Some(20.0)),
    ];
    let failed: Vec<String> = checks
        .iter()
        .filter(|(_, got, want)| got != want)
        .map(|(name, got, _)| format!("{name} -> {got:?}"))
        .collect();
    let shown: Vec<String> = checks.iter().map(|(n, g, _)| format!("{n} = {}", g.unwrap_or(f32::NAN))).collect();
    outcome(failed.is_empty(), if failed.is_empty() { shown.join(", ") } else { failed.join(", ") })
}

fn throughput(shared: &Shared) -> Outcome {
    let Some(seq) = &shared.sequence else {
        return outcome(false, "no sequence to time");
    };
    // Steady state: the first pass warms caches and allocations, the second
    // pass is timed.
    let mut rec = Reconstructor::new(seq.mesh.clone(), RasterConfig::default(), MergeMode::Argmax, ExposureMode::Off, true);
    let mut acc = Vec::new();
    for pass in 0..2 {
        for (k, (frame, pose)) in seq.frames.iter().zip(&seq.poses).enumerate() {
            let report = rec.process(k, frame.clone(), &seq.camera, pose).expect("process");
            if pass == 1 && report.skipped.is_none() {
                acc.push(report.timings.total_ms);
            }
        }
    }
    let (Some(a), Some(l)) = (summarize(&acc), summarize(&shared.lookup_ms)) else {
        return outcome(false, "no timing samples");
    };
    outcome(
        a.median_ms < 50.0 && l.median_ms < 5.0,
        format!(
            "accumulate median {:.2} ms over {} warm frames (need < 50), lookup median {:.3} ms over {} lookups (need < 5)",
            a.median_ms, a.count, l.median_ms, l.count
        ),
    )
}

fn pose_sampler() -> Outcome {
    let views = view_directions(true).len();
    let poses = sample_template_poses(true).len();
    outcome(views == 89 && poses == 3738, format!("{views} view directions, {poses} poses (need 89, 3738)"))
}

fn main() {
    let mut shared = Shared::default();
    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();
    results.push((1, "round-trip fidelity", round_trip(&mut shared)));
    results.push((2, "visibility oracle", visibility_oracle()));
    results.push((3, "streaming mean merge", mean_equivalence()));
    results.push((4, "best-view merge", argmax_equivalence()));
    results.push((5, "slope-scaled depth bias", depth_bias()));
    results.push((6, "luma transfer", exposure_transfer()));
    results.push((7, "blending ramp", blending_ramp()));
    results.push((8, "instance discrimination", instance_discrimination(&mut shared)));
    results.push((9, "hue descriptor", hue_descriptor()));
    results.push((10, "throughput", throughput(&shared)));
    results.push((11, "pose sampler", pose_sampler()));

    let mut failed = 0;
    for (id, name, o) in &results {
        println!("[{}] {id:>2} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
