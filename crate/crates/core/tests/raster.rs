mod common;

use nalgebra::{Vector2, Vector3};

use livetex::raster::{
    discontinuity_mask, focus_camera, rasterize_texture_space, render_biased_depth, DiscontinuityMask, RasterConfig,
};
use livetex::scene_io::{Mesh, PinholeCamera, RigidPose, Vertex};
use livetex::synth::default_camera;
use livetex::synth::primitives::icosphere;

use common::raycast_visibility;

fn cfg(n: usize) -> RasterConfig {
    RasterConfig {
        texture_size: n,
        ..RasterConfig::default()
    }
}

/// One triangle at depth 1 facing the camera at the origin, with the
/// given vertex normals.
fn lone_triangle(normals: [Vector3<f64>; 3]) -> Mesh {
    let pos = [Vector3::new(-0.2, -0.2, 1.0), Vector3::new(0.2, -0.2, 1.0), Vector3::new(0.0, 0.2, 1.0)];
    let uv = [Vector2::new(0.05, 0.05), Vector2::new(0.95, 0.05), Vector2::new(0.5, 0.95)];
    let vertices = (0..3)
        .map(|k| Vertex {
            position: pos[k],
            normal: normals[k].normalize(),
            uv: uv[k],
        })
        .collect();
    Mesh::new(vertices, vec![[0, 1, 2]]).unwrap()
}

fn sample(mesh: &Mesh, camera: &PinholeCamera) -> livetex::raster::TexelSampleMap {
    let pose = RigidPose::identity();
    let raster = cfg(64);
    let depth = render_biased_depth(mesh, camera, &pose, &raster);
    let mask = DiscontinuityMask::all_valid(camera.width, camera.height);
    rasterize_texture_space(mesh, camera, &pose, &depth, &mask, &raster)
}

#[test]
fn triangle_facing_the_camera_is_sampled() {
    let camera = default_camera();
    let toward = -Vector3::z();
    let map = sample(&lone_triangle([toward; 3]), &camera);
    let d = map.diagnostics;
    assert!(d.covered > 0);
    assert_eq!(d.valid, d.covered);
    for s in map.samples() {
        assert!((s.cos_incidence - 1.0).abs() < 0.1);
        assert!((0.0..=1.0).contains(&s.depth_ndc));
    }
}

#[test]
fn plane_facing_away_rejects_texels_whose_normals_face_the_camera() {
    let camera = default_camera();
    // Normals sum to +z, so the surface's outside points away from the
    // camera, while the interpolated normal near the third vertex points
    // back toward it.
    let away = Vector3::z();
    let map = sample(&lone_triangle([away, away, Vector3::new(0.0, 0.3, -1.0)]), &camera);
    let d = map.diagnostics;
    assert!(d.covered > 0);
    assert_eq!(d.valid, 0);
    assert_eq!(d.backfacing, d.covered);
}

#[test]
fn sphere_from_the_front_matches_ray_casting() {
    let camera = default_camera();
    let mesh = icosphere(0.5, 2).unwrap();
    let pose = RigidPose::look_at(Vector3::new(0.0, 0.0, 1.6), Vector3::zeros(), Vector3::y());
    let raster = cfg(256);
    let focused = focus_camera(&camera, &mesh, &pose).unwrap();
    let depth = render_biased_depth(&mesh, &focused, &pose, &raster);
    let mask = DiscontinuityMask::all_valid(focused.width, focused.height);
    let map = rasterize_texture_space(&mesh, &camera, &pose, &depth, &mask, &raster);
    let oracle = raycast_visibility(&mesh, &camera, &pose, raster.texture_size);
    let valid = map.valid_mask();
    let (mut total, mut agree) = (0usize, 0usize);
    for (&v, o) in valid.as_slice().iter().zip(&oracle) {
        if let Some(o) = o {
            total += 1;
            agree += usize::from(v == *o);
        } else {
            assert!(!v, "texel outside every triangle marked valid");
        }
    }
    assert!(total > 0);
    assert!(agree as f64 >= 0.99 * total as f64, "{agree} of {total}");
}

#[test]
fn discontinuity_mask_only_removes_texels() {
    let camera = default_camera();
    let mesh = icosphere(0.5, 2).unwrap();
    let pose = RigidPose::look_at(Vector3::new(0.4, 0.3, 1.5), Vector3::zeros(), Vector3::y());
    let raster = cfg(128);
    let focused = focus_camera(&camera, &mesh, &pose).unwrap();
    let depth = render_biased_depth(&mesh, &focused, &pose, &raster);
    let open = DiscontinuityMask::all_valid(focused.width, focused.height);
    let masked = discontinuity_mask(&depth, mesh.diameter(), &raster);
    let all = rasterize_texture_space(&mesh, &camera, &pose, &depth, &open, &raster).valid_mask();
    let some = rasterize_texture_space(&mesh, &camera, &pose, &depth, &masked, &raster);
    assert!(some.diagnostics.masked > 0);
    for (a, b) in all.as_slice().iter().zip(some.valid_mask().as_slice()) {
        assert!(*a || !*b);
    }
}
