use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::matcher::hue::{hue_distance, pixel_hue, HueImage, HueThresholds};
use crate::plane::{Plane, RgbImage};
use crate::raster::render_color;
use crate::scene_io::{Mesh, PinholeCamera, RigidPose};

/// Axis-aligned pixel rectangle; `(x, y)` is the top-left pixel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PixelRect {
    pub x: i64,
    pub y: i64,
    pub width: usize,
    pub height: usize,
}

/// View of an object stored as texture coordinates, so that its expected
/// appearance can be looked up in any texture.
#[derive(Debug, Clone, PartialEq)]
pub struct HueTemplate {
    /// Tight box around `mask` in the training view.
    pub bbox: PixelRect,
    /// Texture coordinate per bbox pixel; `[0, 0]` outside the mask.
    pub uv_map: Plane<[f32; 2]>,
    pub mask: Plane<bool>,
    pub pose: RigidPose,
    pub camera: PinholeCamera,
    /// Projection of the object origin relative to the bbox top-left.
    pub anchor: [f64; 2],
}

impl HueTemplate {
    /// View depth of the object origin.
    pub fn origin_depth(&self) -> f64 {
        self.pose.translation.z
    }

    pub fn mask_count(&self) -> usize {
        self.mask.as_slice().iter().filter(|&&m| m).count()
    }
}

/// Renders `mesh` and keeps the texture coordinates and coverage inside
/// their tight bounding box.
pub fn make_template(mesh: &Mesh, camera: &PinholeCamera, pose: &RigidPose) -> Result<HueTemplate> {
    let dummy = RgbImage::new(1, 1, [0.5; 3]);
    let render = render_color(mesh, &dummy, camera, pose);
    let cov = &render.coverage;
    let (mut x0, mut y0, mut x1, mut y1) = (usize::MAX, usize::MAX, 0usize, 0usize);
    for y in 0..cov.height() {
        for x in 0..cov.width() {
            if *cov.get(x, y) {
                x0 = x0.min(x);
                y0 = y0.min(y);
                x1 = x1.max(x);
                y1 = y1.max(y);
            }
        }
    }
    if x0 == usize::MAX {
        return Err(Error::NotVisible);
    }
    let (w, h) = (x1 - x0 + 1, y1 - y0 + 1);
    let mask = Plane::from_fn(w, h, |x, y| *cov.get(x0 + x, y0 + y));
    let uv_map = Plane::from_fn(w, h, |x, y| *render.uv.get(x0 + x, y0 + y));
    let origin = pose.transform_point(&Vector3::zeros());
    let anchor = match camera.project(&origin) {
        Some([u, v]) => [u - x0 as f64, v - y0 as f64],
        None => [w as f64 * 0.5, h as f64 * 0.5],
    };
    Ok(HueTemplate {
        bbox: PixelRect {
            x: x0 as i64,
            y: y0 as i64,
            width: w,
            height: h,
        },
        uv_map,
        mask,
        pose: *pose,
        camera: *camera,
        anchor,
    })
}

/// A candidate surface texture for an object instance.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceHypothesis {
    pub texture_id: String,
    pub texture: RgbImage,
}

impl InstanceHypothesis {
    pub fn new(texture_id: impl Into<String>, texture: RgbImage) -> Result<Self> {
        if texture.width() < 16 || texture.height() < 16 {
            return Err(Error::Config(format!(
                "hypothesis texture must be at least 16x16, got {}x{}",
                texture.width(),
                texture.height()
            )));
        }
        Ok(InstanceHypothesis {
            texture_id: texture_id.into(),
            texture,
        })
    }
}

/// Expected hue of the template under a hypothesis texture; undefined
/// outside the mask.
pub fn expected_hue(template: &HueTemplate, hypothesis: &InstanceHypothesis, th: &HueThresholds) -> HueImage {
    let (w, h) = (template.mask.width(), template.mask.height());
    let mut out = HueImage::undefined(w, h);
    for y in 0..h {
        for x in 0..w {
            if *template.mask.get(x, y) {
                let [u, v] = *template.uv_map.get(x, y);
                out.set(x, y, pixel_hue(hypothesis.texture.sample_uv(u, v), th));
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InlierFraction {
    pub fraction: f64,
    pub inliers: usize,
    /// Masked pixels defined on both sides.
    pub counted: usize,
}

impl InlierFraction {
    /// No pixel could be compared.
    pub fn is_degenerate(&self) -> bool {
        self.counted == 0
    }
}

/// Share of comparable masked pixels whose hues differ by at most
/// `max_distance_deg`. `observed`, `expected` and `mask` share dimensions.
pub fn color_inlier_fraction(
    observed: &HueImage,
    expected: &HueImage,
    mask: &Plane<bool>,
    max_distance_deg: f32,
) -> Result<InlierFraction> {
    for (w, h) in [(observed.width(), observed.height()), (mask.width(), mask.height())] {
        if (w, h) != (expected.width(), expected.height()) {
            return Err(Error::SizeMismatch {
                got_w: w,
                got_h: h,
                want_w: expected.width(),
                want_h: expected.height(),
            });
        }
    }
    Ok(inlier_fraction_at(observed, 0, 0, expected, mask, max_distance_deg))
}

/// [`color_inlier_fraction`] against the window of `frame` whose top-left
/// is `(x, y)`, without copying it.
pub fn inlier_fraction_at(
    frame: &HueImage,
    x: i64,
    y: i64,
    expected: &HueImage,
    mask: &Plane<bool>,
    max_distance_deg: f32,
) -> InlierFraction {
    let (mut inliers, mut counted) = (0usize, 0usize);
    for j in 0..expected.height() {
        for i in 0..expected.width() {
            if !*mask.get(i, j) {
                continue;
            }
            let (Some(e), Some(o)) = (expected.get(i, j), frame.get_signed(x + i as i64, y + j as i64)) else {
                continue;
            };
            counted += 1;
            if hue_distance(e, o) <= max_distance_deg {
                inliers += 1;
            }
        }
    }
    InlierFraction {
        fraction: if counted > 0 { inliers as f64 / counted as f64 } else { 0.0 },
        inliers,
        counted,
    }
}
