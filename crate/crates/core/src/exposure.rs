//! Brightness homogenization: match each frame's luma mean and standard
//! deviation to a reference frame while leaving chrominance untouched.
//!
//! Colors are converted to BT.601 full-range YUV. Only Y is transferred:
//! `Y' = (σ_ref / σ_in) · (Y − μ_in) + μ_ref`, clamped to `[0, 1]`.

use crate::error::{Error, Result};
use crate::plane::RgbImage;

const KR: f32 = 0.299;
const KG: f32 = 0.587;
const KB: f32 = 0.114;
const U_SCALE: f32 = 0.492;
const V_SCALE: f32 = 0.877;

/// Below this input standard deviation only the mean is shifted.
pub const FLAT_STDDEV: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExposureMode {
    /// Normalize every frame against the first frame of the sequence.
    #[default]
    FirstFrame,
    Off,
}

impl std::str::FromStr for ExposureMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "first-frame" => Ok(ExposureMode::FirstFrame),
            "off" => Ok(ExposureMode::Off),
            other => Err(Error::Config(format!(
                "unknown exposure mode `{other}` (expected first-frame|off)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LumaStats {
    pub mean: f64,
    pub stddev: f64,
}

#[inline]
pub fn rgb_to_yuv(p: [f32; 3]) -> [f32; 3] {
    let y = KR * p[0] + KG * p[1] + KB * p[2];
    [y, U_SCALE * (p[2] - y), V_SCALE * (p[0] - y)]
}

#[inline]
pub fn yuv_to_rgb(p: [f32; 3]) -> [f32; 3] {
    let [y, u, v] = p;
    let r = y + v / V_SCALE;
    let b = y + u / U_SCALE;
    let g = (y - KR * r - KB * b) / KG;
    [r, g, b]
}

#[inline]
pub fn luma(p: [f32; 3]) -> f32 {
    KR * p[0] + KG * p[1] + KB * p[2]
}

pub fn luma_stats(image: &RgbImage) -> Result<LumaStats> {
    if image.is_empty() {
        return Err(Error::EmptyImage);
    }
    let n = image.len() as f64;
    let (mut sum, mut sum_sq) = (0.0f64, 0.0f64);
    for &p in image.as_slice() {
        let y = luma(p) as f64;
        sum += y;
        sum_sq += y * y;
    }
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean).max(0.0);
    Ok(LumaStats {
        mean,
        stddev: var.sqrt(),
    })
}

/// Result of a luma transfer.
#[derive(Debug, Clone)]
pub struct NormalizedFrame {
    pub image: RgbImage,
    /// Set when the input was flat and only a mean shift was applied.
    pub flat: bool,
}

/// Per-pixel YUV after the luma transfer, before conversion back to RGB.
/// U and V are copied from the input unchanged.
pub fn transfer_yuv(image: &RgbImage, reference: LumaStats) -> Result<(Vec<[f32; 3]>, bool)> {
    let stats = luma_stats(image)?;
    let flat = stats.stddev < FLAT_STDDEV;
    let gain = if flat {
        1.0
    } else {
        reference.stddev / stats.stddev
    };
    let yuv = image
        .as_slice()
        .iter()
        .map(|&p| {
            let [y, u, v] = rgb_to_yuv(p);
            let y = (gain * (y as f64 - stats.mean) + reference.mean).clamp(0.0, 1.0);
            [y as f32, u, v]
        })
        .collect();
    Ok((yuv, flat))
}

pub fn normalize_luma(image: &RgbImage, reference: LumaStats) -> Result<NormalizedFrame> {
    let (yuv, flat) = transfer_yuv(image, reference)?;
    if flat {
        log::debug!("flat frame: exposure transfer reduced to a mean shift");
    }
    let data = yuv
        .into_iter()
        .map(|p| yuv_to_rgb(p).map(|c| c.clamp(0.0, 1.0)))
        .collect();
    Ok(NormalizedFrame {
        image: RgbImage::from_vec(image.width(), image.height(), data),
        flat,
    })
}

/// Stateful normalizer that captures the first frame it sees as reference.
#[derive(Debug, Clone, Default)]
pub struct ExposureNormalizer {
    mode: ExposureMode,
    reference: Option<LumaStats>,
}

impl ExposureNormalizer {
    pub fn new(mode: ExposureMode) -> Self {
        ExposureNormalizer {
            mode,
            reference: None,
        }
    }

    pub fn reference(&self) -> Option<LumaStats> {
        self.reference
    }

    pub fn apply(&mut self, image: RgbImage) -> Result<RgbImage> {
        match self.mode {
            ExposureMode::Off => Ok(image),
            ExposureMode::FirstFrame => match self.reference {
                None => {
                    self.reference = Some(luma_stats(&image)?);
                    Ok(image)
                }
                Some(reference) => Ok(normalize_luma(&image, reference)?.image),
            },
        }
    }
}
