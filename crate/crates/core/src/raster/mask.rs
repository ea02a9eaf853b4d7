use crate::plane::Plane;
use crate::raster::depth::DepthBuffer;
use crate::raster::RasterConfig;

/// Per-pixel usability of a depth buffer's view: `true` away from depth
/// discontinuities and silhouettes.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscontinuityMask {
    pub valid: Plane<bool>,
}

impl DiscontinuityMask {
    pub fn all_valid(width: usize, height: usize) -> Self {
        DiscontinuityMask {
            valid: Plane::new(width, height, true),
        }
    }

    #[inline]
    pub fn is_valid(&self, x: usize, y: usize) -> bool {
        *self.valid.get(x, y)
    }
}

/// Pixels adjacent (4-neighborhood) to a foreground/background transition
/// or to a view-depth jump larger than `edge_depth_fraction · diameter`.
/// Both pixels of an offending pair are marked.
pub fn edge_pixels(depth: &DepthBuffer, mesh_diameter: f64, cfg: &RasterConfig) -> Plane<bool> {
    let (w, h) = (depth.width(), depth.height());
    let threshold = cfg.edge_depth_fraction * mesh_diameter;
    let z: Vec<Option<f64>> = (0..w * h).map(|i| depth.view_z(i % w, i / w)).collect();
    let mut edges = Plane::new(w, h, false);
    let is_jump = |a: Option<f64>, b: Option<f64>| match (a, b) {
        (Some(a), Some(b)) => (a - b).abs() > threshold,
        (None, None) => false,
        _ => true,
    };
    for y in 0..h {
        for x in 0..w {
            let here = z[y * w + x];
            if x + 1 < w && is_jump(here, z[y * w + x + 1]) {
                *edges.get_mut(x, y) = true;
                *edges.get_mut(x + 1, y) = true;
            }
            if y + 1 < h && is_jump(here, z[(y + 1) * w + x]) {
                *edges.get_mut(x, y) = true;
                *edges.get_mut(x, y + 1) = true;
            }
        }
    }
    edges
}

/// Offsets of the open disc `dx² + dy² < r²`.
fn disc_offsets(radius: usize) -> Vec<(isize, isize)> {
    let r = radius as isize;
    let r2 = r * r;
    let mut out = Vec::new();
    for dy in -r..=r {
        for dx in -r..=r {
            if dx * dx + dy * dy < r2 {
                out.push((dx, dy));
            }
        }
    }
    out
}

/// Marks every pixel whose Euclidean distance to an edge pixel is below
/// `edge_dilation_px` as unusable. A straight silhouette thus loses exactly
/// `edge_dilation_px` pixels on each side.
pub fn discontinuity_mask(depth: &DepthBuffer, mesh_diameter: f64, cfg: &RasterConfig) -> DiscontinuityMask {
    let edges = edge_pixels(depth, mesh_diameter, cfg);
    let (w, h) = (edges.width(), edges.height());
    let mut valid = Plane::new(w, h, true);
    let disc = disc_offsets(cfg.edge_dilation_px);
    for y in 0..h {
        for x in 0..w {
            if !*edges.get(x, y) {
                continue;
            }
            for &(dx, dy) in &disc {
                let (px, py) = (x as isize + dx, y as isize + dy);
                if px >= 0 && py >= 0 && (px as usize) < w && (py as usize) < h {
                    *valid.get_mut(px as usize, py as usize) = false;
                }
            }
        }
    }
    DiscontinuityMask { valid }
}
