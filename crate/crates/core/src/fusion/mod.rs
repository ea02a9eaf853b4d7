//! Increment patches and their fusion into a persistent texture.
//!
//! Each frame yields an [`IncrementPatch`]: the texels it validly observed,
//! with colors and view scores `s = max(cos α, 0) · (1 − d)`. Patch borders
//! are feathered with a distance-transform ramp, then the patch is merged
//! into a [`TextureAccumulator`] holding `[color, alpha]` per texel, either
//! as a running score-weighted mean or by keeping the best-scoring view.

mod accumulator;
pub mod distance;

pub use accumulator::{score_sidecar_path, merge_argmax, merge_mean, MergeMode, MergeStats, TextureAccumulator};

use crate::plane::RgbImage;
use crate::raster::TexelSampleMap;

/// Width, in texels, of the blending ramp at patch borders.
pub const BLEND_RAMP_TEXELS: f32 = 5.0;

/// View score of one observation: `max(cos α, 0) · (1 − d)`.
#[inline]
pub fn texel_score(cos_alpha: f32, depth_ndc: f32) -> f32 {
    cos_alpha.max(0.0) * (1.0 - depth_ndc)
}

/// One texel observed in the current frame.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PatchTexel {
    /// Row-major texel index, `y * size + x`.
    pub texel: u32,
    pub color: [f32; 3],
    pub score: f32,
    /// Feathering weight in `(0, 1]`.
    pub blend_weight: f32,
}

/// The texels one frame observed, each at most once.
#[derive(Debug, Clone, PartialEq)]
pub struct IncrementPatch {
    size: usize,
    texels: Vec<PatchTexel>,
}

impl IncrementPatch {
    pub fn empty(size: usize) -> Self {
        IncrementPatch {
            size,
            texels: Vec::new(),
        }
    }

    /// Panics on a texel index outside the texture or listed twice.
    pub fn from_texels(size: usize, texels: Vec<PatchTexel>) -> Self {
        let mut seen = vec![false; size * size];
        for t in &texels {
            let i = t.texel as usize;
            assert!(i < seen.len(), "texel {i} outside a {size}x{size} patch");
            assert!(!seen[i], "texel {i} listed twice");
            seen[i] = true;
        }
        IncrementPatch { size, texels }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn texels(&self) -> &[PatchTexel] {
        &self.texels
    }

    pub fn present_count(&self) -> usize {
        self.texels.len()
    }

    /// Row-major view with `None` where the frame saw nothing.
    pub fn dense(&self) -> Vec<Option<PatchTexel>> {
        let mut out = vec![None; self.size * self.size];
        for t in &self.texels {
            out[t.texel as usize] = Some(*t);
        }
        out
    }
}

/// Samples the frame at every valid texel's image position.
pub fn extract_increment(frame: &RgbImage, samples: &TexelSampleMap) -> IncrementPatch {
    let mut patch = IncrementPatch::empty(0);
    extract_increment_into(&mut patch, frame, samples);
    patch
}

/// [`extract_increment`] writing into `patch`, reusing its storage.
pub fn extract_increment_into(patch: &mut IncrementPatch, frame: &RgbImage, samples: &TexelSampleMap) {
    patch.size = samples.size();
    patch.texels.clear();
    patch.texels.extend(samples.samples().iter().map(|s| PatchTexel {
        texel: s.texel,
        color: frame.sample_bilinear(s.image_coord[0], s.image_coord[1]),
        score: texel_score(s.cos_incidence, s.depth_ndc).clamp(0.0, 1.0),
        blend_weight: 1.0,
    }));
}

/// Feathers the patch border: `blend_weight = min(D / 5, 1)` where `D` is the
/// chamfer distance (in texels) to the nearest texel the patch does not
/// cover. The texture border itself is not a patch boundary.
pub fn blend_boundaries(mut patch: IncrementPatch) -> IncrementPatch {
    blend_boundaries_in_place(&mut patch);
    patch
}

/// In-place form of [`blend_boundaries`].
pub fn blend_boundaries_in_place(patch: &mut IncrementPatch) {
    BorderBlender::default().apply(patch);
}

/// [`blend_boundaries`] with a distance grid kept across patches.
#[derive(Debug, Clone, Default)]
pub struct BorderBlender {
    grid: distance::ChamferGrid,
}

impl BorderBlender {
    pub fn apply(&mut self, patch: &mut IncrementPatch) {
        let size = patch.size;
        let grid = &mut self.grid;
        grid.rebuild(size, size, patch.texels.iter().map(|t| t.texel as usize));
        for t in &mut patch.texels {
            t.blend_weight = (distance::units_to_cells(grid.at(t.texel as usize)) / BLEND_RAMP_TEXELS).min(1.0);
        }
    }
}

/// Merge-map diagnostic: `base` with the patch's texels tinted blue in
/// proportion to their blend weight.
pub fn merge_map(patch: &IncrementPatch, base: &RgbImage) -> RgbImage {
    let tint = [0.1f32, 0.3, 1.0];
    let dense = patch.dense();
    RgbImage::from_fn(patch.size, patch.size, |x, y| {
        let b = *base.get(x, y);
        match dense[y * patch.size + x] {
            Some(t) => {
                let w = 0.3 + 0.7 * t.blend_weight;
                [0, 1, 2].map(|c| b[c] * (1.0 - w) + tint[c] * w)
            }
            None => b.map(|c| c * 0.5),
        }
    })
}
