//! Forward textured rendering. Produces the color image, the unbiased depth,
//! and the per-pixel interpolated texture coordinates used by matcher
//! templates.

use crate::plane::{Plane, RgbImage};
use crate::raster::depth::{project_triangle, DepthBuffer, DepthRange};
use crate::raster::fill::{rasterize_triangle, Barycentric};
use crate::scene_io::{Mesh, PinholeCamera, RigidPose};

#[derive(Debug, Clone)]
pub struct RenderOutput {
    /// Black where nothing was drawn.
    pub image: RgbImage,
    /// Unbiased depth (`biased` equals `depth`).
    pub depth: DepthBuffer,
    /// Interpolated texture coordinate; `[0, 0]` where not covered.
    pub uv: Plane<[f32; 2]>,
    pub coverage: Plane<bool>,
}

impl RenderOutput {
    /// Texture coordinates encoded as red (u) and green (v).
    pub fn uv_as_rgb(&self) -> RgbImage {
        RgbImage::from_fn(self.uv.width(), self.uv.height(), |x, y| {
            if *self.coverage.get(x, y) {
                let [u, v] = *self.uv.get(x, y);
                [u, v, 0.0]
            } else {
                [0.0; 3]
            }
        })
    }
}

/// Z-buffered render with bilinear texture lookup. Texture coordinates are
/// interpolated perspective-correctly. Triangles with a vertex behind the
/// camera are not drawn.
pub fn render_color(mesh: &Mesh, texture: &RgbImage, camera: &PinholeCamera, pose: &RigidPose) -> RenderOutput {
    let (w, h) = (camera.width, camera.height);
    let range = DepthRange::for_mesh(mesh, pose).unwrap_or(DepthRange { near: 1.0, far: 2.0 });
    let mut depth = DepthBuffer::empty(*camera, range);
    let mut uv_plane = Plane::new(w, h, [0.0f32; 2]);
    let verts = mesh.vertices();

    for tri in mesh.triangles() {
        let Some(st) = project_triangle(mesh, tri, camera, pose) else { continue };
        let Some(bary) = Barycentric::new(&st.pixels) else { continue };
        let d = st.cam.map(|p| range.ndc(p.z));
        let [gx, gy] = bary.gradient(d);
        let [ox, oy] = st.pixels[0];
        let inv_z = st.cam.map(|p| 1.0 / p.z);
        let uvs = tri.map(|i| verts[i as usize].uv);
        let zbuf = &mut depth.depth;
        let uv_out = uv_plane.as_mut_slice();
        let _ = rasterize_triangle(st.pixels, w, h, |x, y, wts| {
            let z = d[0] + gx * (x as f64 + 0.5 - ox) + gy * (y as f64 + 0.5 - oy);
            let i = y * w + x;
            if !(z < zbuf[i]) {
                return;
            }
            zbuf[i] = z;
            let pw = [wts[0] * inv_z[0], wts[1] * inv_z[1], wts[2] * inv_z[2]];
            let norm = 1.0 / (pw[0] + pw[1] + pw[2]);
            let u = (pw[0] * uvs[0].x + pw[1] * uvs[1].x + pw[2] * uvs[2].x) * norm;
            let v = (pw[0] * uvs[0].y + pw[1] * uvs[1].y + pw[2] * uvs[2].y) * norm;
            uv_out[i] = [u.clamp(0.0, 1.0) as f32, v.clamp(0.0, 1.0) as f32];
        });
    }
    depth.biased = depth.depth.clone();

    let coverage = Plane::from_vec(w, h, depth.depth.iter().map(|d| d.is_finite()).collect());
    let image = RgbImage::from_fn(w, h, |x, y| {
        if *coverage.get(x, y) {
            let [u, v] = *uv_plane.get(x, y);
            texture.sample_uv(u, v)
        } else {
            [0.0; 3]
        }
    });
    RenderOutput {
        image,
        depth,
        uv: uv_plane,
        coverage,
    }
}
