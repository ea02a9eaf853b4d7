//! Two-pass chamfer distance transform with a 5x5 mask.
//!
//! Integer step costs 5, 7 and 11 for the (1,0), (1,1) and (2,1) moves
//! (Borgefors' mask), divided by 5 on output so an axis step is one cell.
//! Within a distance of 5 the result differs from the exact Euclidean
//! distance by less than 0.1.

const AXIAL: i16 = 5;
const DIAGONAL: i16 = 7;
const KNIGHT: i16 = 11;
/// Saturated distance; reported as infinite.
const FAR: i16 = i16::MAX;

/// Forward-mask offsets reaching into earlier rows; the remaining forward
/// offset is the in-row `(-1, 0)` step.
const ROWS_ABOVE: [(isize, isize, i16); 7] = [
    (-1, -1, DIAGONAL),
    (0, -1, AXIAL),
    (1, -1, DIAGONAL),
    (-2, -1, KNIGHT),
    (2, -1, KNIGHT),
    (-1, -2, KNIGHT),
    (1, -2, KNIGHT),
];

/// Chamfer distances to the nearest hole in fifths of a cell, saturating at
/// `FAR`, stored with a two-cell border.
#[derive(Debug, Clone, Default)]
pub(crate) struct ChamferGrid {
    split: RowSplit,
    padded_width: usize,
    data: Vec<i16>,
}

const PAD: usize = 2;

/// Row-major index to `(x, y)`, shifting instead of dividing for
/// power-of-two widths.
#[derive(Debug, Clone, Copy, Default)]
struct RowSplit {
    width: usize,
    shift: Option<u32>,
}

impl RowSplit {
    fn new(width: usize) -> Self {
        RowSplit {
            width,
            shift: width.is_power_of_two().then(|| width.trailing_zeros()),
        }
    }

    #[inline]
    fn split(self, i: usize) -> (usize, usize) {
        match self.shift {
            Some(s) => (i & (self.width - 1), i >> s),
            None => (i % self.width, i / self.width),
        }
    }
}

impl ChamferGrid {
    /// Every cell is a hole except the row-major indices in `present`.
    /// The border is never a hole, which keeps every mask offset in bounds.
    pub(crate) fn from_present(width: usize, height: usize, present: impl IntoIterator<Item = usize>) -> Self {
        let mut grid = ChamferGrid::default();
        grid.rebuild(width, height, present);
        grid
    }

    /// [`from_present`](Self::from_present) reusing this grid's storage.
    pub(crate) fn rebuild(&mut self, width: usize, height: usize, present: impl IntoIterator<Item = usize>) {
        let split = RowSplit::new(width);
        let pw = width + 2 * PAD;
        let dist = &mut self.data;
        dist.clear();
        dist.resize(pw * (height + 2 * PAD), FAR);
        for y in 0..height {
            let base = (y + PAD) * pw + PAD;
            dist[base..base + width].fill(0);
        }
        let (mut x0, mut y0, mut x1, mut y1) = (usize::MAX, usize::MAX, 0, 0);
        for i in present {
            let (x, y) = split.split(i);
            dist[(y + PAD) * pw + x + PAD] = FAR;
            (x0, y0, x1, y1) = (x0.min(x), y0.min(y), x1.max(x), y1.max(y));
        }
        // Cells beyond two of the present bounding box are holes or border,
        // so sweeping the grown box alone is exact.
        if x0 <= x1 {
            let xs = x0.saturating_sub(PAD)..(x1 + PAD + 1).min(width);
            let ys = y0.saturating_sub(PAD)..(y1 + PAD + 1).min(height);
            sweep(dist, pw, xs, ys);
        }
        self.split = split;
        self.padded_width = pw;
    }

    /// Distance at row-major cell `i`.
    #[inline]
    pub(crate) fn at(&self, i: usize) -> i16 {
        let (x, y) = self.split.split(i);
        self.data[(y + PAD) * self.padded_width + x + PAD]
    }

    #[inline]
    pub(crate) fn row(&self, y: usize) -> &[i16] {
        let first = (y + PAD) * self.padded_width + PAD;
        &self.data[first..first + self.split.width]
    }
}

/// Converts grid units to cells.
#[inline]
pub(crate) fn units_to_cells(v: i16) -> f32 {
    if v == FAR {
        f32::INFINITY
    } else {
        v as f32 / AXIAL as f32
    }
}

/// `cur[i] = min(cur[i], src[i] + cost)`, saturating.
#[inline(never)]
fn relax(cur: &mut [i16], src: &[i16], cost: i16) {
    for (d, &s) in cur.iter_mut().zip(src) {
        *d = (*d).min(s.saturating_add(cost));
    }
}

/// In-row axial step along `cells` in iteration order.
#[inline(never)]
fn chain<'a>(cells: impl Iterator<Item = &'a mut i16>) {
    let mut prev = FAR;
    for d in cells {
        prev = (*d).min(prev.saturating_add(AXIAL));
        *d = prev;
    }
}

/// Both chamfer passes over columns `xs` of rows `ys` (unpadded).
fn sweep(dist: &mut [i16], pw: usize, xs: std::ops::Range<usize>, ys: std::ops::Range<usize>) {
    let width = xs.len();
    let offsets = ROWS_ABOVE.map(|(dx, dy, cost)| (dy * pw as isize + dx, cost));
    // Holes stay 0 because every step cost is positive. Each row first takes
    // the finished neighbor rows, then the in-row step.
    for y in ys.clone() {
        let first = (y + PAD) * pw + PAD + xs.start;
        let (done, rest) = dist.split_at_mut(first);
        let cur = &mut rest[..width];
        for &(o, cost) in &offsets {
            relax(cur, &done[first.wrapping_add_signed(o)..][..width], cost);
        }
        chain(cur.iter_mut());
    }
    for y in ys.rev() {
        let first = (y + PAD) * pw + PAD + xs.start;
        let below = first + width;
        let (rest, done) = dist.split_at_mut(below);
        let cur = &mut rest[first..];
        for &(o, cost) in &offsets {
            relax(cur, &done[first.wrapping_add_signed(-o) - below..][..width], cost);
        }
        chain(cur.iter_mut().rev());
    }
}

/// Distance from every `true` cell to the nearest `false` cell, in cells.
/// Cells outside the grid do not count as `false`. Cells with no `false`
/// cell within about 6500 cells, including every cell of a grid without
/// holes, yield `f32::INFINITY`.
pub fn chamfer_distance(inside: &[bool], width: usize, height: usize) -> Vec<f32> {
    assert_eq!(inside.len(), width * height);
    let grid = ChamferGrid::from_present(width, height, (0..width * height).filter(|&i| inside[i]));
    let mut out = Vec::with_capacity(width * height);
    for y in 0..height {
        out.extend(grid.row(y).iter().map(|&v| units_to_cells(v)));
    }
    out
}
