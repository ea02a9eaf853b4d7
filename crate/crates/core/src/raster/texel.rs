//! Reverse mapping: iterate the texture atlas and find, for each texel, where
//! its surface point lands in the camera image and whether it is visible.

use nalgebra::Vector3;

use crate::raster::depth::DepthBuffer;
use crate::raster::fill::{rasterize_spans, Barycentric, Skip};
use crate::raster::mask::DiscontinuityMask;
use crate::plane::Plane;
use crate::raster::{RasterConfig, MAX_TEXTURE_SIZE};
use crate::scene_io::{Mesh, PinholeCamera, RigidPose};

/// A texel that is validly observed in the current frame.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TexelSample {
    /// Row-major texel index, `y * size + x`.
    pub texel: u32,
    /// Continuous pixel coordinates in the real camera image.
    pub image_coord: [f32; 2],
    /// Normalized device depth in `[0, 1]`.
    pub depth_ndc: f32,
    /// Cosine between the interpolated normal and the direction to the camera.
    pub cos_incidence: f32,
}

/// Why texels covered by the atlas were rejected, plus totals.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TexelDiagnostics {
    pub covered: usize,
    pub valid: usize,
    pub backfacing: usize,
    pub outside_frame: usize,
    pub occluded: usize,
    pub masked: usize,
    pub degenerate_triangles: usize,
}

/// The valid texels of one frame, at most one sample per texel.
#[derive(Debug, Clone)]
pub struct TexelSampleMap {
    size: usize,
    samples: Vec<TexelSample>,
    /// One bit per texel, set when `samples` holds it.
    held: Vec<u64>,
    pub diagnostics: TexelDiagnostics,
}

impl TexelSampleMap {
    pub fn empty(size: usize) -> Self {
        let mut map = TexelSampleMap {
            size: 0,
            samples: Vec::new(),
            held: Vec::new(),
            diagnostics: TexelDiagnostics::default(),
        };
        map.reset(size);
        map
    }

    /// Wraps externally produced samples; diagnostics only count valid ones.
    /// Later samples replace earlier ones for the same texel.
    ///
    /// Panics if a texel index is out of range.
    pub fn from_samples(size: usize, samples: impl IntoIterator<Item = TexelSample>) -> Self {
        let mut map = TexelSampleMap::empty(size);
        for s in samples {
            assert!((s.texel as usize) < size * size, "texel {} outside a {size}x{size} map", s.texel);
            map.insert(s);
        }
        map.diagnostics.covered = map.samples.len();
        map.diagnostics.valid = map.samples.len();
        map
    }

    /// Clears to no samples and zero diagnostics for a `size x size` texture.
    pub fn reset(&mut self, size: usize) {
        self.size = size;
        self.samples.clear();
        self.held.clear();
        self.held.resize((size * size).div_ceil(64), 0);
        self.diagnostics = TexelDiagnostics::default();
    }

    #[inline]
    fn insert(&mut self, s: TexelSample) {
        let (word, bit) = (s.texel as usize / 64, 1u64 << (s.texel % 64));
        if self.held[word] & bit == 0 {
            self.held[word] |= bit;
            self.samples.push(s);
        } else if let Some(old) = self.samples.iter_mut().rev().find(|o| o.texel == s.texel) {
            // Only overlapping charts reach this.
            *old = s;
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Valid samples in production order.
    pub fn samples(&self) -> &[TexelSample] {
        &self.samples
    }

    #[inline]
    pub fn is_valid(&self, x: usize, y: usize) -> bool {
        let i = y * self.size + x;
        self.held[i / 64] & (1u64 << (i % 64)) != 0
    }

    pub fn valid_count(&self) -> usize {
        self.samples.len()
    }

    /// Dense validity raster.
    pub fn valid_mask(&self) -> Plane<bool> {
        Plane::from_fn(self.size, self.size, |x, y| self.is_valid(x, y))
    }
}

/// Texel `(i, j)` of an `n x n` texture has its center at
/// `uv = ((i + 0.5) / n, (j + 0.5) / n)`.
#[inline]
pub fn texel_center_uv(i: usize, j: usize, n: usize) -> [f64; 2] {
    [(i as f64 + 0.5) / n as f64, (j as f64 + 0.5) / n as f64]
}

/// Whether the triangle's plane, oriented along its vertex normals, faces
/// away from a camera at the origin. Points on such a plane of a closed
/// mesh are hidden even where the interpolated normal faces the camera.
#[inline]
fn plane_faces_away(pos: &[Vector3<f64>; 3], nrm: &[Vector3<f64>; 3]) -> bool {
    let g = (pos[1] - pos[0]).cross(&(pos[2] - pos[0]));
    let side = g.dot(&(nrm[0] + nrm[1] + nrm[2]));
    side != 0.0 && g.dot(&pos[0]) * side.signum() >= 0.0
}

/// For every texel center covered by a mesh triangle in uv space,
/// interpolates the surface point and normal (affine in uv), projects the
/// point into the real camera, and marks the texel valid iff
///
/// - the triangle's plane faces the camera (see `plane_faces_away`),
/// - the normal faces the camera (`cos α > 0`),
/// - the projection lies inside the real frame,
/// - its normalized depth does not exceed the biased depth stored at the
///   nearest pixel of `depth` (which may come from a focused camera), and
/// - `mask` is valid at that pixel.
pub fn rasterize_texture_space(
    mesh: &Mesh,
    camera: &PinholeCamera,
    pose: &RigidPose,
    depth: &DepthBuffer,
    mask: &DiscontinuityMask,
    cfg: &RasterConfig,
) -> TexelSampleMap {
    let mut map = TexelSampleMap::empty(cfg.texture_size);
    rasterize_texture_space_into(&mut map, mesh, camera, pose, depth, mask, cfg);
    map
}

/// [`rasterize_texture_space`] writing into `map`, whose storage is reused
/// when its size already matches.
pub fn rasterize_texture_space_into(
    map: &mut TexelSampleMap,
    mesh: &Mesh,
    camera: &PinholeCamera,
    pose: &RigidPose,
    depth: &DepthBuffer,
    mask: &DiscontinuityMask,
    cfg: &RasterConfig,
) {
    let n = cfg.texture_size;
    assert!(n <= MAX_TEXTURE_SIZE, "texture size {n} exceeds {MAX_TEXTURE_SIZE}");
    map.reset(n);
    let verts = mesh.vertices();
    let dcam = depth.camera;
    let (dw, dh) = (dcam.width, dcam.height);
    let (dwf, dhf) = (dw as f64, dh as f64);
    let (iw, ih) = (camera.width as f64, camera.height as f64);
    let (cfx, cfy, ccx, ccy) = (camera.fx, camera.fy, camera.cx, camera.cy);
    let (dfx, dfy, dcx, dcy) = (dcam.fx, dcam.fy, dcam.cx, dcam.cy);
    let biased: &[f64] = &depth.biased;
    let unmasked: &[bool] = mask.valid.as_slice();
    assert_eq!(unmasked.len(), biased.len(), "mask and depth buffer sizes differ");
    let range = depth.range;
    let (inv_near, ndc_scale) = (1.0 / range.near, 1.0 / (1.0 / range.near - 1.0 / range.far));
    let mut diag = TexelDiagnostics::default();
    // Rows of the current triangle as `(y, x0, x1)`.
    let mut spans: Vec<(usize, usize, usize)> = Vec::new();

    for tri in mesh.triangles() {
        let v = tri.map(|i| &verts[i as usize]);
        let uv = v.map(|vx| [vx.uv.x * n as f64, vx.uv.y * n as f64]);
        let pos: [Vector3<f64>; 3] = v.map(|vx| pose.transform_point(&vx.position));
        let nrm: [Vector3<f64>; 3] = v.map(|vx| pose.transform_vector(&vx.normal));

        spans.clear();
        if let Err(Skip::Degenerate) = rasterize_spans(uv, n, n, |y, x0, x1| spans.push((y, x0, x1))) {
            diag.degenerate_triangles += 1;
            continue;
        }
        let count: usize = spans.iter().map(|&(_, x0, x1)| x1 - x0 + 1).sum();
        diag.covered += count;

        if plane_faces_away(&pos, &nrm) {
            diag.backfacing += count;
            continue;
        }
        let Some(bary) = Barycentric::new(&uv) else {
            // Unreachable for triangles that produced spans.
            diag.covered -= count;
            diag.degenerate_triangles += 1;
            continue;
        };
        // Position and normal are affine in the texel center.
        let (pa, pb, pc) = bary.affine(pos);
        let (na, nb, nc) = bary.affine(nrm);

        for &(y, x0, x1) in &spans {
            let cy = y as f64 + 0.5;
            let (prow, nrow) = (pb * cy + pc, nb * cy + nc);
            for x in x0..=x1 {
                let cx = x as f64 + 0.5;
                let p = pa * cx + prow;
                let normal = na * cx + nrow;
                let facing = -normal.dot(&p);
                if !(facing > 0.0) || p.z <= 1e-9 {
                    diag.backfacing += 1;
                    continue;
                }
                let inv_z = 1.0 / p.z;
                let (ux, uy) = (p.x * inv_z, p.y * inv_z);
                let px = cfx * ux + ccx;
                let py = cfy * uy + ccy;
                if !(px >= 0.0 && py >= 0.0 && px < iw && py < ih) {
                    diag.outside_frame += 1;
                    continue;
                }
                let fx = dfx * ux + dcx;
                let fy = dfy * uy + dcy;
                if !(fx >= 0.0 && fy >= 0.0 && fx < dwf && fy < dhf) {
                    diag.outside_frame += 1;
                    continue;
                }
                // Truncation is the floor on the non-negative range.
                let pixel = fy as usize * dw + fx as usize;
                let d = (inv_near - inv_z) * ndc_scale;
                if !(d <= biased[pixel]) {
                    diag.occluded += 1;
                    continue;
                }
                if !unmasked[pixel] {
                    diag.masked += 1;
                    continue;
                }
                diag.valid += 1;
                let cos = facing / (p.norm_squared() * normal.norm_squared()).sqrt();
                map.insert(TexelSample {
                    texel: (y * n + x) as u32,
                    image_coord: [px as f32, py as f32],
                    depth_ndc: d.clamp(0.0, 1.0) as f32,
                    cos_incidence: cos.min(1.0) as f32,
                });
            }
        }
    }
    map.diagnostics = diag;
}
