//! Triangle scan conversion over a pixel (or texel) grid.
//!
//! Coverage is decided on a fixed-point grid with 8 sub-pixel bits and a
//! top-left fill rule, so adjacent triangles never both own a sample on
//! their shared edge and never both miss it. Interpolation weights are
//! evaluated in floating point from the unsnapped vertices.

const SUBPIXEL_BITS: u32 = 8;
const ONE: i64 = 1 << SUBPIXEL_BITS;
const HALF: i64 = ONE / 2;
/// Largest accepted vertex coordinate in sub-pixel units. Keeps every edge
/// function product inside i64.
const MAX_COORD: f64 = (1i64 << 29) as f64;

/// Affine barycentric weights over the plane: `w_i = a_i·x + b_i·y + c_i`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Barycentric {
    a: [f64; 3],
    b: [f64; 3],
    c: [f64; 3],
}

impl Barycentric {
    pub(crate) fn new(v: &[[f64; 2]; 3]) -> Option<Barycentric> {
        let area = (v[1][0] - v[0][0]) * (v[2][1] - v[0][1]) - (v[1][1] - v[0][1]) * (v[2][0] - v[0][0]);
        if area == 0.0 || !area.is_finite() {
            return None;
        }
        let inv = 1.0 / area;
        let mut bc = Barycentric {
            a: [0.0; 3],
            b: [0.0; 3],
            c: [0.0; 3],
        };
        for i in 0..3 {
            // Weight of vertex i is the edge function of the opposite edge.
            let p = v[(i + 1) % 3];
            let q = v[(i + 2) % 3];
            bc.a[i] = -(q[1] - p[1]) * inv;
            bc.b[i] = (q[0] - p[0]) * inv;
            bc.c[i] = ((q[1] - p[1]) * p[0] - (q[0] - p[0]) * p[1]) * inv;
        }
        Some(bc)
    }

    #[inline]
    pub(crate) fn at(&self, x: f64, y: f64) -> [f64; 3] {
        [
            self.a[0] * x + self.b[0] * y + self.c[0],
            self.a[1] * x + self.b[1] * y + self.c[1],
            self.a[2] * x + self.b[2] * y + self.c[2],
        ]
    }

    /// Coefficients `(a, b, c)` of an attribute with vertex values `v`,
    /// which equals `a·x + b·y + c` over the plane.
    #[inline]
    pub(crate) fn affine<T>(&self, v: [T; 3]) -> (T, T, T)
    where
        T: Copy + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T>,
    {
        let comb = |w: &[f64; 3]| v[0] * w[0] + v[1] * w[1] + v[2] * w[2];
        (comb(&self.a), comb(&self.b), comb(&self.c))
    }

    /// Screen-space gradient of an attribute that is affine over the triangle.
    #[inline]
    pub(crate) fn gradient(&self, values: [f64; 3]) -> [f64; 2] {
        // The weights' gradients sum to zero; differencing makes constants exact.
        let d1 = values[1] - values[0];
        let d2 = values[2] - values[0];
        [self.a[1] * d1 + self.a[2] * d2, self.b[1] * d1 + self.b[2] * d2]
    }
}

/// Outcome of [`rasterize_triangle`] for triangles that produce no samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Skip {
    /// Zero area after snapping, or non-finite coordinates.
    Degenerate,
    /// Coordinates too large for the fixed-point grid.
    OutOfRange,
}

/// Visits every grid cell `(x, y)` whose center `(x + 0.5, y + 0.5)` is
/// covered by the triangle, passing the barycentric weights at that center.
/// Either winding is accepted.
pub(crate) fn rasterize_triangle(
    verts: [[f64; 2]; 3],
    width: usize,
    height: usize,
    mut visit: impl FnMut(usize, usize, [f64; 3]),
) -> Result<Barycentric, Skip> {
    let bary = Barycentric::new(&verts).ok_or(Skip::Degenerate);
    rasterize_spans(verts, width, height, |y, x0, x1| {
        if let Ok(b) = &bary {
            let cy = y as f64 + 0.5;
            for x in x0..=x1 {
                visit(x, y, b.at(x as f64 + 0.5, cy));
            }
        }
    })?;
    bary
}

/// Covered cells of each row as an inclusive range `x0..=x1`, with the same
/// coverage as testing every cell center against the snapped edges.
pub(crate) fn rasterize_spans(
    verts: [[f64; 2]; 3],
    width: usize,
    height: usize,
    mut visit: impl FnMut(usize, usize, usize),
) -> Result<(), Skip> {
    if verts.iter().flatten().any(|c| !c.is_finite()) {
        return Err(Skip::Degenerate);
    }
    if verts.iter().flatten().any(|c| (c * ONE as f64).abs() > MAX_COORD) {
        return Err(Skip::OutOfRange);
    }
    let mut p: [[i64; 2]; 3] = verts.map(|v| [(v[0] * ONE as f64).round() as i64, (v[1] * ONE as f64).round() as i64]);
    let area = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[1][1] - p[0][1]) * (p[2][0] - p[0][0]);
    if area == 0 {
        return Err(Skip::Degenerate);
    }
    Barycentric::new(&verts).ok_or(Skip::Degenerate)?;
    // Weights come from the unsnapped vertices, so only coverage needs a fixed winding.
    if area < 0 {
        p.swap(1, 2);
    }

    let min_x = p.iter().map(|v| v[0]).min().unwrap_or(0);
    let max_x = p.iter().map(|v| v[0]).max().unwrap_or(0);
    let min_y = p.iter().map(|v| v[1]).min().unwrap_or(0);
    let max_y = p.iter().map(|v| v[1]).max().unwrap_or(0);
    // Cells whose centers lie inside the bounds.
    let ceil_div = |a: i64, b: i64| -((-a).div_euclid(b));
    let x0 = ceil_div(min_x - HALF, ONE).max(0);
    let x1 = (max_x - HALF).div_euclid(ONE).min(width as i64 - 1);
    let y0 = ceil_div(min_y - HALF, ONE).max(0);
    let y1 = (max_y - HALF).div_euclid(ONE).min(height as i64 - 1);
    if x0 > x1 || y0 > y1 {
        return Ok(());
    }

    // Edge k is opposite local vertex k: from p[k+1] to p[k+2]. At cell
    // (x, y) its function is row_start[k] + step_x[k] * (x - x0), and the
    // cell is covered when all three are >= 0.
    let mut step_x = [0i64; 3];
    let mut step_y = [0i64; 3];
    let mut row_start = [0i64; 3];
    let sx = x0 * ONE + HALF;
    let sy = y0 * ONE + HALF;
    for k in 0..3 {
        let a = p[(k + 1) % 3];
        let b = p[(k + 2) % 3];
        let dx = b[0] - a[0];
        let dy = b[1] - a[1];
        // Positive-area triangles have the interior on the side where this is > 0.
        let top_left = (dy == 0 && dx > 0) || dy < 0;
        let bias = if top_left { 0 } else { 1 };
        step_x[k] = -dy * ONE;
        step_y[k] = dx * ONE;
        row_start[k] = dx * (sy - a[1]) - dy * (sx - a[0]) - bias;
    }

    for y in y0..=y1 {
        let (mut lo, mut hi) = (x0, x1);
        for k in 0..3 {
            let (r, s) = (row_start[k], step_x[k]);
            if s > 0 {
                lo = lo.max(x0 + ceil_div(-r, s));
            } else if s < 0 {
                hi = hi.min(x0 + r.div_euclid(-s));
            } else if r < 0 {
                hi = lo - 1;
            }
            row_start[k] += step_y[k];
        }
        if lo <= hi {
            visit(y as usize, lo as usize, hi as usize);
        }
    }
    Ok(())
}
