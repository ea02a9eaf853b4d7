//! Independent oracles shared by the integration tests.

#![allow(dead_code)]

use nalgebra::{Vector2, Vector3};

use livetex::scene_io::{Mesh, PinholeCamera, RigidPose};
use livetex::RgbImage;

/// Möller–Trumbore ray/triangle intersection; returns the ray parameter.
pub fn ray_triangle(origin: &Vector3<f64>, dir: &Vector3<f64>, v: &[Vector3<f64>; 3]) -> Option<f64> {
    let e1 = v[1] - v[0];
    let e2 = v[2] - v[0];
    let p = dir.cross(&e2);
    let det = e1.dot(&p);
    if det.abs() < 1e-14 {
        return None;
    }
    let inv = 1.0 / det;
    let s = origin - v[0];
    let u = s.dot(&p) * inv;
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let q = s.cross(&e1);
    let w = dir.dot(&q) * inv;
    if w < 0.0 || u + w > 1.0 {
        return None;
    }
    Some(e2.dot(&q) * inv)
}

/// Barycentric weights of `p` in the 2D triangle `t`, or `None` outside it
/// (boundary included).
pub fn barycentric_2d(p: Vector2<f64>, t: &[Vector2<f64>; 3]) -> Option<[f64; 3]> {
    let d = (t[1] - t[0]).perp(&(t[2] - t[0]));
    if d.abs() < 1e-18 {
        return None;
    }
    let w1 = (p - t[0]).perp(&(t[2] - t[0])) / d;
    let w2 = (t[1] - t[0]).perp(&(p - t[0])) / d;
    let w0 = 1.0 - w1 - w2;
    let eps = -1e-12;
    (w0 >= eps && w1 >= eps && w2 >= eps).then_some([w0, w1, w2])
}

/// Texel-center visibility by brute force: `None` where no triangle covers
/// the texel in uv space, otherwise whether the surface point faces the
/// camera, projects inside the frame and is the first hit along its ray.
pub fn raycast_visibility(mesh: &Mesh, camera: &PinholeCamera, pose: &RigidPose, n: usize) -> Vec<Option<bool>> {
    let verts = mesh.vertices();
    let cam_tris: Vec<[Vector3<f64>; 3]> = mesh
        .triangles()
        .iter()
        .map(|t| t.map(|i| pose.transform_point(&verts[i as usize].position)))
        .collect();
    let mut out = vec![None; n * n];
    for (ti, tri) in mesh.triangles().iter().enumerate() {
        let uv = tri.map(|i| verts[i as usize].uv * n as f64);
        let (lo_x, hi_x) = (uv.iter().map(|p| p.x).fold(f64::MAX, f64::min), uv.iter().map(|p| p.x).fold(f64::MIN, f64::max));
        let (lo_y, hi_y) = (uv.iter().map(|p| p.y).fold(f64::MAX, f64::min), uv.iter().map(|p| p.y).fold(f64::MIN, f64::max));
        let xs = (lo_x - 0.5).floor().max(0.0) as usize..((hi_x - 0.5).ceil().max(0.0) as usize + 1).min(n);
        for y in (lo_y - 0.5).floor().max(0.0) as usize..((hi_y - 0.5).ceil().max(0.0) as usize + 1).min(n) {
            for x in xs.clone() {
                if out[y * n + x].is_some() {
                    continue;
                }
                let c = Vector2::new(x as f64 + 0.5, y as f64 + 0.5);
                let Some(w) = barycentric_2d(c, &uv) else { continue };
                let p = cam_tris[ti][0] * w[0] + cam_tris[ti][1] * w[1] + cam_tris[ti][2] * w[2];
                let nrm = tri
                    .iter()
                    .zip(w)
                    .map(|(&i, wk)| pose.transform_vector(&verts[i as usize].normal) * wk)
                    .sum::<Vector3<f64>>();
                out[y * n + x] = Some(visible(&p, &nrm, camera, &cam_tris));
            }
        }
    }
    out
}

fn visible(p: &Vector3<f64>, normal: &Vector3<f64>, camera: &PinholeCamera, tris: &[[Vector3<f64>; 3]]) -> bool {
    if p.z <= 0.0 || normal.dot(&(-p)) <= 0.0 {
        return false;
    }
    let (u, v) = (camera.fx * p.x / p.z + camera.cx, camera.fy * p.y / p.z + camera.cy);
    if !(u >= 0.0 && v >= 0.0 && u < camera.width as f64 && v < camera.height as f64) {
        return false;
    }
    let dist = p.norm();
    let dir = p / dist;
    let limit = dist * (1.0 - 1e-7);
    !tris
        .iter()
        .any(|t| ray_triangle(&Vector3::zeros(), &dir, t).is_some_and(|s| s > 1e-9 && s < limit))
}

/// Largest per-channel absolute difference.
pub fn linf(a: [f32; 3], b: [f32; 3]) -> f32 {
    (0..3).map(|k| (a[k] - b[k]).abs()).fold(0.0, f32::max)
}

/// Ground-truth color at texel `(x, y)` of an `n x n` texture.
pub fn texel_truth(texture: &RgbImage, x: usize, y: usize, n: usize) -> [f32; 3] {
    texture.sample_uv((x as f32 + 0.5) / n as f32, (y as f32 + 0.5) / n as f32)
}

/// Score-weighted batch mean of `(color, score)` observations.
pub fn batch_weighted_mean(obs: &[(f64, f64)]) -> Option<f64> {
    let den: f64 = obs.iter().map(|o| o.1).sum();
    (den > 0.0).then(|| obs.iter().map(|o| o.0 * o.1).sum::<f64>() / den)
}

/// Color of the first observation with the strictly largest positive score.
pub fn batch_argmax(obs: &[(f32, f32)]) -> Option<(f32, f32)> {
    let mut best: Option<(f32, f32)> = None;
    for &(c, s) in obs {
        if s > best.map_or(0.0, |b| b.1) {
            best = Some((c, s));
        }
    }
    best
}
