//! Z-buffered depth rendering with slope-scaled bias for visibility tests.
//!
//! Depth is stored in normalized device form over a per-frame `[near, far]`
//! range: `d = (1/near − 1/z) / (1/near − 1/far)`. This mapping is affine in
//! screen space, so every triangle has a constant depth gradient and the
//! slope term of the bias is exact per triangle.

use nalgebra::Vector3;

use crate::raster::fill::{rasterize_triangle, Barycentric};
use crate::raster::RasterConfig;
use crate::scene_io::{Mesh, PinholeCamera, RigidPose};

/// Fraction of the depth extent added on both sides of the range.
pub const DEPTH_RANGE_PADDING: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepthRange {
    pub near: f64,
    pub far: f64,
}

impl DepthRange {
    /// Range spanned by the posed mesh bounding box, padded by 5% of the
    /// larger of its depth extent and the box diagonal. `None` when the box
    /// is entirely behind the camera.
    pub fn for_mesh(mesh: &Mesh, pose: &RigidPose) -> Option<DepthRange> {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for c in mesh.bbox().corners() {
            let z = pose.transform_point(&c).z;
            lo = lo.min(z);
            hi = hi.max(z);
        }
        let pad = DEPTH_RANGE_PADDING * (hi - lo).max(mesh.bbox().diagonal());
        let far = hi + pad;
        if !(far > 0.0) {
            return None;
        }
        let near = (lo - pad).max(far * 1e-4);
        Some(DepthRange { near, far })
    }

    #[inline]
    pub fn ndc(&self, z: f64) -> f64 {
        (1.0 / self.near - 1.0 / z) / (1.0 / self.near - 1.0 / self.far)
    }

    #[inline]
    pub fn view_z(&self, d: f64) -> f64 {
        1.0 / (1.0 / self.near - d * (1.0 / self.near - 1.0 / self.far))
    }
}

/// Per-pixel depth in normalized device form. Background pixels hold
/// `f64::INFINITY` in both planes.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthBuffer {
    pub camera: PinholeCamera,
    pub range: DepthRange,
    /// Nearest-surface depth.
    pub depth: Vec<f64>,
    /// `depth` plus the slope-scaled bias of the winning fragment.
    pub biased: Vec<f64>,
}

impl DepthBuffer {
    pub fn empty(camera: PinholeCamera, range: DepthRange) -> Self {
        let n = camera.width * camera.height;
        DepthBuffer {
            camera,
            range,
            depth: vec![f64::INFINITY; n],
            biased: vec![f64::INFINITY; n],
        }
    }

    pub fn width(&self) -> usize {
        self.camera.width
    }

    pub fn height(&self) -> usize {
        self.camera.height
    }

    #[inline]
    pub fn is_foreground(&self, x: usize, y: usize) -> bool {
        self.depth[y * self.camera.width + x].is_finite()
    }

    /// View-space z of the nearest surface, `None` for background.
    #[inline]
    pub fn view_z(&self, x: usize, y: usize) -> Option<f64> {
        let d = self.depth[y * self.camera.width + x];
        d.is_finite().then(|| self.range.view_z(d))
    }
}

pub(crate) struct ScreenTriangle {
    pub pixels: [[f64; 2]; 3],
    pub cam: [Vector3<f64>; 3],
}

/// Projects a triangle; `None` if any vertex is not in front of the camera.
pub(crate) fn project_triangle(
    mesh: &Mesh,
    tri: &[u32; 3],
    camera: &PinholeCamera,
    pose: &RigidPose,
) -> Option<ScreenTriangle> {
    let v = mesh.vertices();
    let cam = tri.map(|i| pose.transform_point(&v[i as usize].position));
    let p0 = camera.project(&cam[0])?;
    let p1 = camera.project(&cam[1])?;
    let p2 = camera.project(&cam[2])?;
    Some(ScreenTriangle {
        pixels: [p0, p1, p2],
        cam,
    })
}

/// Renders the mesh depth with the slope-scaled bias
/// `b = max(|∂d/∂x|, |∂d/∂y|) + r` added to every stored fragment. The
/// depth test runs on unbiased depth; on exact ties the smaller biased
/// value is kept, which makes the result independent of triangle order.
/// Triangles with a vertex behind the camera are not drawn.
pub fn render_biased_depth(mesh: &Mesh, camera: &PinholeCamera, pose: &RigidPose, cfg: &RasterConfig) -> DepthBuffer {
    let range = DepthRange::for_mesh(mesh, pose).unwrap_or(DepthRange { near: 1.0, far: 2.0 });
    let mut buf = DepthBuffer::empty(*camera, range);
    let w = camera.width;
    for tri in mesh.triangles() {
        let Some(st) = project_triangle(mesh, tri, camera, pose) else { continue };
        let Some(bary) = Barycentric::new(&st.pixels) else { continue };
        let d = st.cam.map(|p| range.ndc(p.z));
        let [gx, gy] = bary.gradient(d);
        let bias = gx.abs().max(gy.abs()) + cfg.depth_resolution_r;
        let [ox, oy] = st.pixels[0];
        let depth = &mut buf.depth;
        let biased = &mut buf.biased;
        let _ = rasterize_triangle(st.pixels, w, camera.height, |x, y, _| {
            // Plane form keeps constant-depth triangles exact.
            let z = d[0] + gx * (x as f64 + 0.5 - ox) + gy * (y as f64 + 0.5 - oy);
            let i = y * w + x;
            let b = z + bias;
            if z < depth[i] || (z == depth[i] && b < biased[i]) {
                depth[i] = z;
                biased[i] = b;
            }
        });
    }
    buf
}
