//! On-disk template store: one directory per template id holding
//! `uv.png` (16-bit gray+alpha: u, v), `mask.png` and `meta.txt`.

use std::path::Path;

use crate::error::{Error, Result};
use crate::matcher::classify::TemplateStore;
use crate::matcher::template::{HueTemplate, PixelRect};
use crate::plane::Plane;
use crate::scene_io::{PinholeCamera, RigidPose};

pub const UV_FILE: &str = "uv.png";
pub const MASK_FILE: &str = "mask.png";
pub const META_FILE: &str = "meta.txt";

/// Everything in a template except its rasters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemplateMeta {
    pub bbox: PixelRect,
    pub camera: PinholeCamera,
    pub pose: RigidPose,
    pub anchor: [f64; 2],
}

pub fn meta_to_text(meta: &TemplateMeta) -> String {
    let b = meta.bbox;
    let c = meta.camera;
    let pose: Vec<String> = meta.pose.to_row_major().iter().map(|v| v.to_string()).collect();
    format!(
        "bbox {} {} {} {}\ncamera {} {} {} {} {} {}\npose {}\nanchor {} {}\n",
        b.x,
        b.y,
        b.width,
        b.height,
        c.fx,
        c.fy,
        c.cx,
        c.cy,
        c.width,
        c.height,
        pose.join(" "),
        meta.anchor[0],
        meta.anchor[1]
    )
}

fn numbers(tokens: &[&str], expected: usize, line: usize) -> Result<Vec<f64>> {
    if tokens.len() != expected {
        return Err(Error::parse(
            "template meta",
            line,
            format!("expected {expected} values, got {}", tokens.len()),
        ));
    }
    tokens
        .iter()
        .map(|t| {
            t.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::parse("template meta", line, format!("invalid number `{t}`")))
        })
        .collect()
}

fn integer(v: f64, line: usize, min: f64) -> Result<i64> {
    if v.fract() != 0.0 || v < min || v.abs() > 1e9 {
        return Err(Error::parse("template meta", line, format!("expected an integer >= {min}, got {v}")));
    }
    Ok(v as i64)
}

pub fn parse_template_meta(text: &str) -> Result<TemplateMeta> {
    let (mut bbox, mut camera, mut pose, mut anchor) = (None, None, None, None);
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        let tokens: Vec<&str> = body.split_whitespace().collect();
        let Some((&key, rest)) = tokens.split_first() else { continue };
        match key {
            "bbox" => {
                let v = numbers(rest, 4, line)?;
                bbox = Some(PixelRect {
                    x: integer(v[0], line, -1e9)?,
                    y: integer(v[1], line, -1e9)?,
                    width: integer(v[2], line, 1.0)? as usize,
                    height: integer(v[3], line, 1.0)? as usize,
                });
            }
            "camera" => {
                let v = numbers(rest, 6, line)?;
                let (w, h) = (integer(v[4], line, 1.0)?, integer(v[5], line, 1.0)?);
                camera = Some(PinholeCamera::new(v[0], v[1], v[2], v[3], w as usize, h as usize)?);
            }
            "pose" => {
                let v = numbers(rest, 16, line)?;
                let arr: [f64; 16] = v.try_into().expect("length checked");
                pose = Some(RigidPose::from_row_major(&arr).map_err(|e| Error::parse("template meta", line, e.to_string()))?);
            }
            "anchor" => {
                let v = numbers(rest, 2, line)?;
                anchor = Some([v[0], v[1]]);
            }
            other => return Err(Error::parse("template meta", line, format!("unknown key `{other}`"))),
        }
    }
    let missing = |k: &str| Error::parse("template meta", 0, format!("missing `{k}`"));
    let bbox = bbox.ok_or_else(|| missing("bbox"))?;
    if bbox.width > 1 << 16 || bbox.height > 1 << 16 {
        return Err(Error::parse("template meta", 0, "bbox too large"));
    }
    Ok(TemplateMeta {
        bbox,
        camera: camera.ok_or_else(|| missing("camera"))?,
        pose: pose.ok_or_else(|| missing("pose"))?,
        anchor: anchor.ok_or_else(|| missing("anchor"))?,
    })
}

fn template_dir_name(id: usize) -> String {
    format!("{id:06}")
}

pub fn save_template(dir: &Path, t: &HueTemplate) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let (w, h) = (t.mask.width() as u32, t.mask.height() as u32);
    let q = |v: f32| (v.clamp(0.0, 1.0) * 65535.0).round() as u16;
    let uv = image::ImageBuffer::<image::LumaA<u16>, Vec<u16>>::from_fn(w, h, |x, y| {
        let [u, v] = *t.uv_map.get(x as usize, y as usize);
        image::LumaA([q(u), q(v)])
    });
    let path = dir.join(UV_FILE);
    uv.save(&path).map_err(|e| Error::image(&path, e))?;
    let mask = image::GrayImage::from_fn(w, h, |x, y| image::Luma([if *t.mask.get(x as usize, y as usize) { 255 } else { 0 }]));
    let path = dir.join(MASK_FILE);
    mask.save(&path).map_err(|e| Error::image(&path, e))?;
    let meta = TemplateMeta {
        bbox: t.bbox,
        camera: t.camera,
        pose: t.pose,
        anchor: t.anchor,
    };
    let path = dir.join(META_FILE);
    std::fs::write(&path, meta_to_text(&meta)).map_err(|e| Error::io(&path, e))
}

pub fn load_template(dir: &Path) -> Result<HueTemplate> {
    let path = dir.join(META_FILE);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let meta = parse_template_meta(&text)?;
    let (w, h) = (meta.bbox.width, meta.bbox.height);
    let size_check = |got: (u32, u32)| -> Result<()> {
        if (got.0 as usize, got.1 as usize) != (w, h) {
            return Err(Error::SizeMismatch {
                got_w: got.0 as usize,
                got_h: got.1 as usize,
                want_w: w,
                want_h: h,
            });
        }
        Ok(())
    };
    let path = dir.join(MASK_FILE);
    let mask_img = image::open(&path).map_err(|e| Error::image(&path, e))?.into_luma8();
    size_check(mask_img.dimensions())?;
    let path = dir.join(UV_FILE);
    let uv_img = image::open(&path).map_err(|e| Error::image(&path, e))?.into_luma_alpha16();
    size_check(uv_img.dimensions())?;
    let mask = Plane::from_fn(w, h, |x, y| mask_img.get_pixel(x as u32, y as u32)[0] >= 128);
    let uv_map = Plane::from_fn(w, h, |x, y| {
        if *mask.get(x, y) {
            let p = uv_img.get_pixel(x as u32, y as u32);
            [p[0] as f32 / 65535.0, p[1] as f32 / 65535.0]
        } else {
            [0.0; 2]
        }
    });
    Ok(HueTemplate {
        bbox: meta.bbox,
        uv_map,
        mask,
        pose: meta.pose,
        camera: meta.camera,
        anchor: meta.anchor,
    })
}

/// Writes template `i` to `dir/<i as 6 digits>/`.
pub fn save_template_store(dir: &Path, store: &TemplateStore) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (id, t) in store.templates.iter().enumerate() {
        save_template(&dir.join(template_dir_name(id)), t)?;
    }
    Ok(())
}

/// Loads ids `0..n` in order; the numbering must have no gaps.
pub fn load_template_store(dir: &Path) -> Result<TemplateStore> {
    let mut ids = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        if !entry.path().is_dir() {
            continue;
        }
        if let Some(id) = entry.file_name().to_str().and_then(|n| n.parse::<usize>().ok()) {
            ids.push(id);
        }
    }
    ids.sort_unstable();
    if ids.iter().enumerate().any(|(i, &id)| i != id) {
        return Err(Error::Config(format!("template ids in {} are not contiguous from 0", dir.display())));
    }
    let templates = ids
        .iter()
        .map(|&id| load_template(&dir.join(template_dir_name(id))))
        .collect::<Result<Vec<_>>>()?;
    Ok(TemplateStore::new(templates))
}
