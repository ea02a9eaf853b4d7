//! Procedural textures and backgrounds.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::plane::RgbImage;

/// `cells x cells` board alternating `a` and `b`, starting with `a` at the
/// top-left.
pub fn checkerboard(size: usize, cells: usize, a: [f32; 3], b: [f32; 3]) -> RgbImage {
    let cells = cells.max(1);
    RgbImage::from_fn(size, size, |x, y| {
        let (cx, cy) = (x * cells / size, y * cells / size);
        if (cx + cy) % 2 == 0 {
            a
        } else {
            b
        }
    })
}

/// Smooth color noise: a random `(cells + 1)^2` lattice of colors around
/// `base` (each channel offset by at most `amplitude`), bilinearly
/// interpolated and clamped to `[0, 1]`.
pub fn value_noise(size: usize, cells: usize, base: [f32; 3], amplitude: f32, seed: u64) -> RgbImage {
    let cells = cells.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = cells + 1;
    let lattice: Vec<[f32; 3]> = (0..n * n)
        .map(|_| base.map(|c| (c + rng.gen_range(-amplitude..=amplitude)).clamp(0.0, 1.0)))
        .collect();
    RgbImage::from_fn(size, size, |x, y| {
        let fx = (x as f32 + 0.5) / size as f32 * cells as f32;
        let fy = (y as f32 + 0.5) / size as f32 * cells as f32;
        let (ix, iy) = ((fx as usize).min(cells - 1), (fy as usize).min(cells - 1));
        let (tx, ty) = (fx - ix as f32, fy - iy as f32);
        let at = |i: usize, j: usize| lattice[j * n + i];
        let (p00, p10, p01, p11) = (at(ix, iy), at(ix + 1, iy), at(ix, iy + 1), at(ix + 1, iy + 1));
        [0, 1, 2].map(|k| {
            let top = p00[k] + (p10[k] - p00[k]) * tx;
            let bottom = p01[k] + (p11[k] - p01[k]) * tx;
            top + (bottom - top) * ty
        })
    })
}

/// Blocks of random, clearly chromatic colors.
pub fn hue_clutter(width: usize, height: usize, block: usize, seed: u64) -> RgbImage {
    let block = block.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (bw, bh) = (width.div_ceil(block), height.div_ceil(block));
    let colors: Vec<[f32; 3]> = (0..bw * bh)
        .map(|_| hsv_to_rgb(rng.gen_range(0.0..360.0), rng.gen_range(0.5..1.0), rng.gen_range(0.4..1.0)))
        .collect();
    RgbImage::from_fn(width, height, |x, y| colors[(y / block) * bw + x / block])
}

pub fn hsv_to_rgb(h: f32, s: f32, v: f32) -> [f32; 3] {
    let f = |n: f32| {
        let k = (n + h / 60.0) % 6.0;
        v - v * s * k.min(4.0 - k).clamp(0.0, 1.0)
    };
    [f(5.0), f(3.0), f(1.0)]
}
