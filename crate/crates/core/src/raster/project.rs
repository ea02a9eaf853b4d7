use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::scene_io::{Mesh, PinholeCamera, RigidPose};

/// Margin added around the projected bounding box when focusing.
pub const FOCUS_MARGIN: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    /// Continuous pixel coordinates.
    pub pixel: [f64; 2],
    /// View-space depth (camera z).
    pub depth: f64,
}

/// World point to pixel coordinates. `None` when the point is not in front
/// of the camera (`z <= 1e-9`).
pub fn project_vertex(position: &Vector3<f64>, camera: &PinholeCamera, pose: &RigidPose) -> Option<Projection> {
    let p = pose.transform_point(position);
    camera.project(&p).map(|pixel| Projection { pixel, depth: p.z })
}

/// A virtual camera with the same pixel count whose view is zoomed onto the
/// object's bounding box (plus a small margin). Used only to render the
/// visibility depth buffer at a higher sampling rate.
///
/// The zoom factor never drops below 1; when the object already fills the
/// frame the input camera is returned unchanged. If some bounding box
/// corners are behind the camera the projected extent is unbounded, and the
/// input camera is returned as well.
pub fn focus_camera(camera: &PinholeCamera, mesh: &Mesh, pose: &RigidPose) -> Result<PinholeCamera> {
    let corners = mesh.bbox().corners();
    let projected: Vec<[f64; 2]> = corners
        .iter()
        .filter_map(|c| camera.project(&pose.transform_point(c)))
        .collect();
    if projected.is_empty() {
        return Err(Error::BehindCamera);
    }
    if projected.len() < corners.len() {
        return Ok(*camera);
    }
    let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in &projected {
        x0 = x0.min(p[0]);
        x1 = x1.max(p[0]);
        y0 = y0.min(p[1]);
        y1 = y1.max(p[1]);
    }
    let (w, h) = (camera.width as f64, camera.height as f64);
    let ext_x = (x1 - x0).max(1e-9) * (1.0 + FOCUS_MARGIN);
    let ext_y = (y1 - y0).max(1e-9) * (1.0 + FOCUS_MARGIN);
    let scale = (w / ext_x).min(h / ext_y);
    if !(scale > 1.0) || !scale.is_finite() {
        return Ok(*camera);
    }
    let (bx, by) = ((x0 + x1) * 0.5, (y0 + y1) * 0.5);
    Ok(PinholeCamera {
        fx: camera.fx * scale,
        fy: camera.fy * scale,
        cx: scale * (camera.cx - bx) + w * 0.5,
        cy: scale * (camera.cy - by) + h * 0.5,
        width: camera.width,
        height: camera.height,
    })
}

/// Maps a pixel of `from` to the corresponding pixel of `to`, for two
/// cameras sharing the same pose.
#[inline]
pub fn transfer_pixel(from: &PinholeCamera, to: &PinholeCamera, p: [f64; 2]) -> [f64; 2] {
    [
        to.fx / from.fx * (p[0] - from.cx) + to.cx,
        to.fy / from.fy * (p[1] - from.cy) + to.cy,
    ]
}
