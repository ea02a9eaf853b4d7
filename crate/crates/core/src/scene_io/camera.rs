//! Pinhole intrinsics, rigid world-to-camera poses and their text formats.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{Matrix3, Matrix4, Vector3};

use crate::error::{Error, Result};

/// Orthonormality error above which a pose matrix is rejected outright.
pub const POSE_REJECT_TOLERANCE: f64 = 1e-3;
/// Orthonormality error above which a repaired pose is logged.
pub const POSE_WARN_TOLERANCE: f64 = 1e-6;

/// Camera intrinsics. The camera looks down +Z, x to the right, y down, with
/// the image origin at the top-left corner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PinholeCamera {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
}

impl PinholeCamera {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: usize, height: usize) -> Result<Self> {
        let cam = PinholeCamera {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
        };
        cam.validate()?;
        Ok(cam)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fx > 0.0 && self.fy > 0.0 && self.fx.is_finite() && self.fy.is_finite()) {
            return Err(Error::InvalidCamera("focal lengths must be positive".into()));
        }
        if !(self.cx.is_finite() && self.cy.is_finite()) {
            return Err(Error::InvalidCamera("principal point must be finite".into()));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidCamera("image size must be at least 1x1".into()));
        }
        Ok(())
    }

    /// Projects a camera-space point; `None` when it is not in front of the camera.
    #[inline]
    pub fn project(&self, p: &Vector3<f64>) -> Option<[f64; 2]> {
        if p.z <= 1e-9 {
            return None;
        }
        Some([self.fx * p.x / p.z + self.cx, self.fy * p.y / p.z + self.cy])
    }

    pub fn to_text(&self) -> String {
        format!(
            "# fx fy cx cy width height\n{} {} {} {} {} {}\n",
            self.fx, self.fy, self.cx, self.cy, self.width, self.height
        )
    }
}

/// Parses intrinsics either as six whitespace-separated values
/// (`fx fy cx cy width height`) or as `key value` / `key = value` lines.
pub fn parse_camera(text: &str) -> Result<PinholeCamera> {
    const KEYS: [&str; 6] = ["fx", "fy", "cx", "cy", "width", "height"];
    let mut values: [Option<f64>; 6] = [None; 6];
    let mut positional: Vec<(f64, usize)> = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let normalized = line.replace(['=', ':'], " ");
        let mut tokens = normalized.split_whitespace().peekable();
        let first = *tokens.peek().unwrap_or(&"");
        if let Some(slot) = KEYS.iter().position(|k| k.eq_ignore_ascii_case(first)) {
            tokens.next();
            let tok = tokens
                .next()
                .ok_or_else(|| Error::parse("camera", line_no, format!("missing value for {first}")))?;
            if tokens.next().is_some() {
                return Err(Error::parse("camera", line_no, "trailing tokens"));
            }
            values[slot] = Some(parse_number(tok, line_no)?);
        } else {
            for tok in tokens {
                positional.push((parse_number(tok, line_no)?, line_no));
            }
        }
    }

    if !positional.is_empty() {
        if positional.len() != 6 || values.iter().any(Option::is_some) {
            let line = positional.last().map(|p| p.1).unwrap_or(1);
            return Err(Error::parse(
                "camera",
                line,
                format!("expected 6 values `fx fy cx cy width height`, got {}", positional.len()),
            ));
        }
        for (slot, (v, _)) in positional.into_iter().enumerate() {
            values[slot] = Some(v);
        }
    }

    let mut out = [0.0; 6];
    for (slot, v) in values.iter().enumerate() {
        out[slot] = v.ok_or_else(|| Error::parse("camera", 0, format!("missing `{}`", KEYS[slot])))?;
    }
    let dim = |v: f64, name: &str| -> Result<usize> {
        if v.fract() != 0.0 || !(1.0..=1e6).contains(&v) {
            return Err(Error::InvalidCamera(format!("{name} must be a positive integer")));
        }
        Ok(v as usize)
    };
    PinholeCamera::new(
        out[0],
        out[1],
        out[2],
        out[3],
        dim(out[4], "width")?,
        dim(out[5], "height")?,
    )
}

pub fn load_camera(path: &Path) -> Result<PinholeCamera> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_camera(&text)
}

fn parse_number(tok: &str, line: usize) -> Result<f64> {
    tok.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::parse("camera", line, format!("invalid number `{tok}`")))
}

/// World-to-camera rigid transform: `p_cam = rotation * p_world + translation`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidPose {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl Default for RigidPose {
    fn default() -> Self {
        RigidPose::identity()
    }
}

impl RigidPose {
    pub fn identity() -> Self {
        RigidPose {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    /// Builds a pose, repairing rotations that are within
    /// [`POSE_REJECT_TOLERANCE`] of orthonormal.
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        let deviation = orthonormality_error(&rotation);
        if !(deviation <= POSE_REJECT_TOLERANCE) || !translation.iter().all(|c| c.is_finite()) {
            return Err(Error::NonOrthonormal {
                index: 0,
                deviation,
            });
        }
        let rotation = if deviation > 1e-12 {
            if deviation > POSE_WARN_TOLERANCE {
                log::warn!("re-orthonormalizing pose rotation (error {deviation:.3e})");
            }
            nearest_rotation(&rotation)
        } else {
            rotation
        };
        Ok(RigidPose {
            rotation,
            translation,
        })
    }

    /// Camera placed at `eye`, looking at `target`, with `up` appearing
    /// upward in the image.
    pub fn look_at(eye: Vector3<f64>, target: Vector3<f64>, up: Vector3<f64>) -> Self {
        let forward = (target - eye).normalize();
        let mut right = forward.cross(&up);
        if right.norm() < 1e-9 {
            // Looking along `up`: pick any perpendicular.
            let alt = if forward.x.abs() < 0.9 {
                Vector3::x()
            } else {
                Vector3::y()
            };
            right = forward.cross(&alt);
        }
        let right = right.normalize();
        let down = forward.cross(&right);
        let rotation = Matrix3::from_rows(&[right.transpose(), down.transpose(), forward.transpose()]);
        RigidPose {
            rotation,
            translation: -(rotation * eye),
        }
    }

    #[inline]
    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    #[inline]
    pub fn transform_vector(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * v
    }

    /// Camera center in world coordinates.
    pub fn camera_center(&self) -> Vector3<f64> {
        -(self.rotation.transpose() * self.translation)
    }

    /// `self` applied after `other`.
    pub fn compose(&self, other: &RigidPose) -> RigidPose {
        RigidPose {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn to_matrix(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }

    pub fn from_row_major(values: &[f64; 16]) -> Result<Self> {
        let m = Matrix4::from_row_slice(values);
        let last = [m[(3, 0)], m[(3, 1)], m[(3, 2)], m[(3, 3)]];
        let expected = [0.0, 0.0, 0.0, 1.0];
        if last.iter().zip(expected).any(|(a, b)| (a - b).abs() > 1e-6) {
            return Err(Error::parse("poses", 0, "last row must be 0 0 0 1"));
        }
        RigidPose::new(
            m.fixed_view::<3, 3>(0, 0).into_owned(),
            m.fixed_view::<3, 1>(0, 3).into_owned(),
        )
    }

    pub fn to_row_major(&self) -> [f64; 16] {
        let m = self.to_matrix();
        let mut out = [0.0; 16];
        for r in 0..4 {
            for c in 0..4 {
                out[r * 4 + c] = m[(r, c)];
            }
        }
        out
    }
}

/// Max absolute entry of `RᵀR − I`, combined with `|det R − 1|`.
pub fn orthonormality_error(r: &Matrix3<f64>) -> f64 {
    let gram = r.transpose() * r - Matrix3::identity();
    let ortho = gram.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let det = (r.determinant() - 1.0).abs();
    if ortho.is_nan() || det.is_nan() {
        return f64::INFINITY;
    }
    ortho.max(det)
}

/// Closest rotation in the Frobenius sense (polar factor via SVD).
pub fn nearest_rotation(r: &Matrix3<f64>) -> Matrix3<f64> {
    let svd = r.svd(true, true);
    let (Some(u), Some(v_t)) = (svd.u, svd.v_t) else {
        return *r;
    };
    let mut out = u * v_t;
    if out.determinant() < 0.0 {
        let mut u = u;
        u.column_mut(2).neg_mut();
        out = u * v_t;
    }
    out
}

/// One pose per non-empty line: 16 floats, row-major 4x4, world-to-camera.
pub fn parse_poses(text: &str) -> Result<Vec<RigidPose>> {
    let mut poses = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut values = [0.0f64; 16];
        let mut n = 0;
        for tok in line.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty()) {
            if n == 16 {
                return Err(Error::parse("poses", line_no, "more than 16 values"));
            }
            values[n] = tok
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::parse("poses", line_no, format!("invalid number `{tok}`")))?;
            n += 1;
        }
        if n != 16 {
            return Err(Error::parse("poses", line_no, format!("expected 16 values, got {n}")));
        }
        let pose = RigidPose::from_row_major(&values).map_err(|e| match e {
            Error::NonOrthonormal { deviation, .. } => Error::NonOrthonormal {
                index: poses.len(),
                deviation,
            },
            Error::Parse { message, .. } => Error::parse("poses", line_no, message),
            other => other,
        })?;
        poses.push(pose);
    }
    Ok(poses)
}

pub fn load_poses(path: &Path) -> Result<Vec<RigidPose>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_poses(&text)
}

pub fn poses_to_text(poses: &[RigidPose]) -> String {
    let mut out = String::new();
    for p in poses {
        let row: Vec<String> = p.to_row_major().iter().map(|v| v.to_string()).collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
    out
}
