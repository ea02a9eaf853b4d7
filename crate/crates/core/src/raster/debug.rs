//! PNG dumps of intermediate rasters.

use std::path::Path;

use crate::error::Result;
use crate::plane::{save_gray_png, Plane};
use crate::raster::depth::DepthBuffer;
use crate::raster::mask::DiscontinuityMask;
use crate::raster::render::RenderOutput;

/// Depth stretched to the visible range: near surfaces bright, background black.
pub fn save_depth_png(path: &Path, depth: &DepthBuffer) -> Result<()> {
    let finite = depth.depth.iter().copied().filter(|d| d.is_finite());
    let (lo, hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), d| (lo.min(d), hi.max(d)));
    let span = if hi > lo { hi - lo } else { 1.0 };
    let plane = Plane::from_vec(
        depth.width(),
        depth.height(),
        depth
            .depth
            .iter()
            .map(|&d| if d.is_finite() { (1.0 - 0.9 * (d - lo) / span) as f32 } else { 0.0 })
            .collect(),
    );
    save_gray_png(path, &plane)
}

pub fn save_mask_png(path: &Path, mask: &DiscontinuityMask) -> Result<()> {
    save_gray_png(path, &mask.valid.map(|&v| if v { 1.0 } else { 0.0 }))
}

pub fn save_uv_png(path: &Path, render: &RenderOutput) -> Result<()> {
    render.uv_as_rgb().save_png(path)
}
