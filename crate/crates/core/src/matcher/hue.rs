use crate::plane::RgbImage;
use crate::synth::texture::hsv_to_rgb;

/// Hue assigned to near-black pixels (blue).
pub const BLACK_HUE: f32 = 240.0;
/// Hue assigned to near-white pixels (yellow).
pub const WHITE_HUE: f32 = 60.0;

/// Cutoffs deciding which pixels carry a usable hue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HueThresholds {
    /// `V` below this is black.
    pub v_black: f32,
    /// `V` above this with `S` below `s_white` is white.
    pub v_white: f32,
    pub s_white: f32,
    /// Minimum saturation for a chromatic hue.
    pub s_min: f32,
}

impl Default for HueThresholds {
    fn default() -> Self {
        HueThresholds {
            v_black: 0.12,
            v_white: 0.7,
            s_white: 0.1,
            s_min: 0.1,
        }
    }
}

/// `(h, s, v)` with `h` in degrees in `[0, 360)`, `s, v` in `[0, 1]`.
pub fn rgb_to_hsv(p: [f32; 3]) -> (f32, f32, f32) {
    let [r, g, b] = p.map(|c| c.clamp(0.0, 1.0));
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let s = if max > 0.0 { delta / max } else { 0.0 };
    if delta <= 0.0 {
        return (0.0, s, max);
    }
    let h = if max == r {
        60.0 * ((g - b) / delta)
    } else if max == g {
        60.0 * ((b - r) / delta + 2.0)
    } else {
        60.0 * ((r - g) / delta + 4.0)
    };
    let h = if h < 0.0 { h + 360.0 } else { h };
    (if h >= 360.0 { 0.0 } else { h }, s, max)
}

/// Descriptor hue of one pixel, `None` when it carries no reliable hue.
#[inline]
pub fn pixel_hue(p: [f32; 3], th: &HueThresholds) -> Option<f32> {
    let (h, s, v) = rgb_to_hsv(p);
    if v < th.v_black {
        Some(BLACK_HUE)
    } else if s < th.s_white && v > th.v_white {
        Some(WHITE_HUE)
    } else if s >= th.s_min {
        Some(h)
    } else {
        None
    }
}

/// Circular distance in degrees, in `[0, 180]`.
#[inline]
pub fn hue_distance(a: f32, b: f32) -> f32 {
    let d = (a - b).abs() % 360.0;
    d.min(360.0 - d)
}

/// Per-pixel descriptor hue; `hue` is 0 where `defined` is false.
#[derive(Debug, Clone, PartialEq)]
pub struct HueImage {
    width: usize,
    height: usize,
    hue: Vec<f32>,
    defined: Vec<bool>,
}

impl HueImage {
    pub fn undefined(width: usize, height: usize) -> Self {
        HueImage {
            width,
            height,
            hue: vec![0.0; width * height],
            defined: vec![false; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> Option<f32>) -> Self {
        let mut img = HueImage::undefined(width, height);
        for y in 0..height {
            for x in 0..width {
                img.set(x, y, f(x, y));
            }
        }
        img
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> Option<f32> {
        let i = y * self.width + x;
        self.defined[i].then_some(self.hue[i])
    }

    /// Like [`get`](Self::get) but `None` outside the image.
    #[inline]
    pub fn get_signed(&self, x: i64, y: i64) -> Option<f32> {
        if x < 0 || y < 0 || x >= self.width as i64 || y >= self.height as i64 {
            None
        } else {
            self.get(x as usize, y as usize)
        }
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, hue: Option<f32>) {
        let i = y * self.width + x;
        self.defined[i] = hue.is_some();
        self.hue[i] = hue.unwrap_or(0.0);
    }

    pub fn defined_count(&self) -> usize {
        self.defined.iter().filter(|&&d| d).count()
    }

    /// Window with top-left `(x, y)`; pixels outside the image are undefined.
    pub fn crop(&self, x: i64, y: i64, width: usize, height: usize) -> HueImage {
        HueImage::from_fn(width, height, |i, j| self.get_signed(x + i as i64, y + j as i64))
    }

    /// Hue rendered at full saturation and value; undefined pixels gray.
    pub fn to_rgb(&self) -> RgbImage {
        RgbImage::from_fn(self.width, self.height, |x, y| match self.get(x, y) {
            Some(h) => hsv_to_rgb(h, 1.0, 1.0),
            None => [0.5; 3],
        })
    }
}

pub fn hue_descriptor(image: &RgbImage, th: &HueThresholds) -> HueImage {
    let mut out = HueImage::undefined(image.width(), image.height());
    for (i, p) in image.as_slice().iter().enumerate() {
        if let Some(h) = pixel_hue(*p, th) {
            out.hue[i] = h;
            out.defined[i] = true;
        }
    }
    out
}
