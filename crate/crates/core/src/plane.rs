//! Dense row-major 2D buffers and the RGB raster type used for frames and
//! textures.
//!
//! Continuous image coordinates put pixel `(i, j)` at the unit square
//! `[i, i+1) x [j, j+1)`, so its center is `(i + 0.5, j + 0.5)`.

use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Plane<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

/// RGB raster with channels in `[0, 1]`.
pub type RgbImage = Plane<[f32; 3]>;

impl<T: Clone> Plane<T> {
    pub fn new(width: usize, height: usize, fill: T) -> Self {
        Plane {
            width,
            height,
            data: vec![fill; width * height],
        }
    }

    pub fn fill(&mut self, value: T) {
        self.data.fill(value);
    }
}

impl<T> Plane<T> {
    pub fn from_vec(width: usize, height: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), width * height, "plane buffer size mismatch");
        Plane {
            width,
            height,
            data,
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Plane {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> &T {
        &self.data[y * self.width + x]
    }

    #[inline]
    pub fn get_mut(&mut self, x: usize, y: usize) -> &mut T {
        &mut self.data[y * self.width + x]
    }

    #[inline]
    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Plane<U> {
        Plane {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(f).collect(),
        }
    }
}

impl RgbImage {
    /// Bilinear lookup at continuous coordinates with clamp-to-edge.
    #[inline]
    pub fn sample_bilinear(&self, x: f32, y: f32) -> [f32; 3] {
        let w = self.width;
        let h = self.height;
        let fx = (x - 0.5).clamp(0.0, (w - 1) as f32);
        let fy = (y - 0.5).clamp(0.0, (h - 1) as f32);
        let x0 = fx as usize;
        let y0 = fy as usize;
        let x1 = (x0 + 1).min(w - 1);
        let y1 = (y0 + 1).min(h - 1);
        let ax = fx - x0 as f32;
        let ay = fy - y0 as f32;
        let row0 = y0 * w;
        let row1 = y1 * w;
        let p00 = self.data[row0 + x0];
        let p10 = self.data[row0 + x1];
        let p01 = self.data[row1 + x0];
        let p11 = self.data[row1 + x1];
        let mut out = [0.0f32; 3];
        for c in 0..3 {
            let top = p00[c] + (p10[c] - p00[c]) * ax;
            let bottom = p01[c] + (p11[c] - p01[c]) * ax;
            out[c] = top + (bottom - top) * ay;
        }
        out
    }

    /// Bilinear lookup at a texture coordinate in `[0,1]²` (v = 0 is the top row).
    #[inline]
    pub fn sample_uv(&self, u: f32, v: f32) -> [f32; 3] {
        self.sample_bilinear(u * self.width as f32, v * self.height as f32)
    }

    pub fn load_png(path: &Path) -> Result<RgbImage> {
        let img = image::open(path).map_err(|e| Error::image(path, e))?;
        Ok(Self::from_dynamic(img))
    }

    /// Decodes an in-memory PNG; errors name the path `<memory>`.
    pub fn decode_png(bytes: &[u8]) -> Result<RgbImage> {
        let img = image::load_from_memory_with_format(bytes, image::ImageFormat::Png)
            .map_err(|e| Error::image("<memory>", e))?;
        Ok(Self::from_dynamic(img))
    }

    fn from_dynamic(img: image::DynamicImage) -> RgbImage {
        let img = img.into_rgb8();
        let (w, h) = img.dimensions();
        let data = img
            .pixels()
            .map(|p| [p[0] as f32 / 255.0, p[1] as f32 / 255.0, p[2] as f32 / 255.0])
            .collect();
        Plane::from_vec(w as usize, h as usize, data)
    }

    pub fn to_rgb8(&self) -> image::RgbImage {
        let mut out = image::RgbImage::new(self.width as u32, self.height as u32);
        for (dst, src) in out.pixels_mut().zip(&self.data) {
            *dst = image::Rgb([quantize(src[0]), quantize(src[1]), quantize(src[2])]);
        }
        out
    }

    pub fn save_png(&self, path: &Path) -> Result<()> {
        self.to_rgb8().save(path).map_err(|e| Error::image(path, e))
    }

    /// Rounds every channel to the nearest 8-bit level.
    pub fn quantized(&self) -> RgbImage {
        self.map(|p| {
            [
                quantize(p[0]) as f32 / 255.0,
                quantize(p[1]) as f32 / 255.0,
                quantize(p[2]) as f32 / 255.0,
            ]
        })
    }
}

#[inline]
pub fn quantize(v: f32) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Writes a single-channel 8-bit PNG from values in `[0, 1]`.
pub fn save_gray_png(path: &Path, plane: &Plane<f32>) -> Result<()> {
    let img = image::GrayImage::from_fn(plane.width() as u32, plane.height() as u32, |x, y| {
        image::Luma([quantize(*plane.get(x as usize, y as usize))])
    });
    img.save(path).map_err(|e| Error::image(path, e))
}

/// Writes a single-channel 16-bit PNG from values in `[0, 1]`.
pub fn save_gray16_png(path: &Path, plane: &Plane<f32>) -> Result<()> {
    let img = image::ImageBuffer::<image::Luma<u16>, Vec<u16>>::from_fn(
        plane.width() as u32,
        plane.height() as u32,
        |x, y| {
            let v = plane.get(x as usize, y as usize).clamp(0.0, 1.0);
            image::Luma([(v * 65535.0).round() as u16])
        },
    );
    img.save(path).map_err(|e| Error::image(path, e))
}
