//! Software rasterization: projection, focused depth rendering with
//! slope-scaled bias, discontinuity masking, texture-space sampling and the
//! forward color renderer.

pub mod debug;
pub mod depth;
mod fill;
pub mod mask;
pub mod project;
pub mod render;
pub mod texel;

pub use depth::{render_biased_depth, DepthBuffer, DepthRange};
pub use mask::{discontinuity_mask, edge_pixels, DiscontinuityMask};
pub use project::{focus_camera, project_vertex, transfer_pixel, Projection};
pub use render::{render_color, RenderOutput};
pub use texel::{
    rasterize_texture_space, rasterize_texture_space_into, texel_center_uv, TexelDiagnostics, TexelSample, TexelSampleMap};

use crate::error::{Error, Result};

/// Two steps of a 16-bit depth buffer.
pub const DEFAULT_DEPTH_RESOLUTION: f64 = 2.0 / 65536.0;

/// Largest texture side; texel indices fit in `u32`.
pub const MAX_TEXTURE_SIZE: usize = 1 << 15;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RasterConfig {
    /// Constant floor `r` of the depth bias, in normalized depth units.
    pub depth_resolution_r: f64,
    /// Depth jump, as a fraction of the mesh diameter, that counts as an edge.
    pub edge_depth_fraction: f64,
    /// Radius of the band discarded around edges, in pixels.
    pub edge_dilation_px: usize,
    /// Texels per side of the reconstructed texture.
    pub texture_size: usize,
}

impl Default for RasterConfig {
    fn default() -> Self {
        RasterConfig {
            depth_resolution_r: DEFAULT_DEPTH_RESOLUTION,
            edge_depth_fraction: 0.10,
            edge_dilation_px: 5,
            texture_size: 1024,
        }
    }
}

impl RasterConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.depth_resolution_r > 0.0) {
            return Err(Error::Config("depth resolution must be positive".into()));
        }
        if !(self.edge_depth_fraction > 0.0 && self.edge_depth_fraction < 1.0) {
            return Err(Error::Config("edge depth fraction must be in (0, 1)".into()));
        }
        if !(16..=MAX_TEXTURE_SIZE).contains(&self.texture_size) {
            return Err(Error::Config(format!(
                "texture size must be in [16, {MAX_TEXTURE_SIZE}], got {}",
                self.texture_size
            )));
        }
        Ok(())
    }
}
