//! Training-view sampler: icosphere view directions crossed with in-plane
//! rolls and camera distances.

use nalgebra::{Rotation3, Vector3};

use crate::scene_io::RigidPose;
use crate::synth::primitives::icosphere_topology;

/// Camera-to-object distances of the six depth bins, in meters.
pub const TEMPLATE_DISTANCES_M: [f64; 6] = [0.65, 0.75, 0.85, 0.95, 1.05, 1.15];
/// In-plane rotations about the optical axis, in degrees.
pub const TEMPLATE_ROLLS_DEG: [f64; 7] = [-45.0, -30.0, -15.0, 0.0, 15.0, 30.0, 45.0];
/// Subdivision level of the view-direction icosphere.
pub const VIEW_SUBDIVISIONS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemplatePose {
    /// Object-to-camera transform; the object origin lies on the optical axis.
    pub pose: RigidPose,
    pub distance: f64,
    pub depth_bin: usize,
    pub view: usize,
    pub roll_deg: f64,
}

/// Unit directions from the object to the camera. The upper hemisphere is
/// the closed half-space `z >= 0` of the object frame.
pub fn view_directions(upper_hemisphere: bool) -> Vec<Vector3<f64>> {
    let (points, _) = icosphere_topology(VIEW_SUBDIVISIONS);
    points
        .into_iter()
        .filter(|p| !upper_hemisphere || p.z >= -1e-12)
        .collect()
}

/// All (view, roll, distance) combinations, views outermost.
pub fn sample_template_poses(upper_hemisphere: bool) -> Vec<TemplatePose> {
    let views = view_directions(upper_hemisphere);
    let mut out = Vec::with_capacity(views.len() * TEMPLATE_ROLLS_DEG.len() * TEMPLATE_DISTANCES_M.len());
    for (vi, dir) in views.iter().enumerate() {
        // Object +z appears as "up" in the image unless looking straight down it.
        let up = if dir.z.abs() > 1.0 - 1e-9 { Vector3::y() } else { Vector3::z() };
        for &roll in &TEMPLATE_ROLLS_DEG {
            let spin = Rotation3::from_axis_angle(&Vector3::z_axis(), roll.to_radians());
            for (bin, &distance) in TEMPLATE_DISTANCES_M.iter().enumerate() {
                let base = RigidPose::look_at(dir * distance, Vector3::zeros(), up);
                let pose = RigidPose {
                    rotation: spin.matrix() * base.rotation,
                    translation: spin * base.translation,
                };
                out.push(TemplatePose {
                    pose,
                    distance,
                    depth_bin: bin,
                    view: vi,
                    roll_deg: roll,
                });
            }
        }
    }
    out
}
