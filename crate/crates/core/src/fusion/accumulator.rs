use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::fusion::IncrementPatch;
use crate::plane::{save_gray16_png, Plane, RgbImage};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MergeMode {
    /// Score-weighted running mean; alpha holds the score sum.
    Mean,
    /// Best view wins; alpha holds the (blended) best score.
    Argmax,
}

impl MergeMode {
    pub fn as_str(self) -> &'static str {
        match self {
            MergeMode::Mean => "mean",
            MergeMode::Argmax => "argmax",
        }
    }
}

impl FromStr for MergeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(MergeMode::Mean),
            "argmax" => Ok(MergeMode::Argmax),
            other => Err(Error::Config(format!("unknown merge mode `{other}` (expected mean or argmax)"))),
        }
    }
}

/// Counts of texels a merge touched.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MergeStats {
    pub present: usize,
    pub updated: usize,
}

/// Persistent `[color, alpha]` texture. `alpha == 0` iff the texel was never
/// updated.
#[derive(Debug, Clone, PartialEq)]
pub struct TextureAccumulator {
    size: usize,
    mode: MergeMode,
    color: Vec<[f64; 3]>,
    alpha: Vec<f64>,
}

impl TextureAccumulator {
    pub fn new(size: usize, mode: MergeMode) -> Self {
        TextureAccumulator {
            size,
            mode,
            color: vec![[0.0; 3]; size * size],
            alpha: vec![0.0; size * size],
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn mode(&self) -> MergeMode {
        self.mode
    }

    #[inline]
    pub fn color(&self, x: usize, y: usize) -> [f64; 3] {
        self.color[y * self.size + x]
    }

    #[inline]
    pub fn alpha(&self, x: usize, y: usize) -> f64 {
        self.alpha[y * self.size + x]
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alpha
    }

    pub fn observed_count(&self) -> usize {
        self.alpha.iter().filter(|&&a| a > 0.0).count()
    }

    /// Merges with the rule fixed at construction.
    pub fn merge(&mut self, patch: &IncrementPatch) -> MergeStats {
        match self.mode {
            MergeMode::Mean => merge_mean(self, patch),
            MergeMode::Argmax => merge_argmax(self, patch),
        }
    }

    /// Color texture; unobserved texels are black.
    pub fn texture(&self) -> RgbImage {
        Plane::from_vec(
            self.size,
            self.size,
            self.color.iter().map(|c| c.map(|v| v as f32)).collect(),
        )
    }

    /// Observation mask: `true` where alpha > 0.
    pub fn observed(&self) -> Plane<bool> {
        Plane::from_vec(self.size, self.size, self.alpha.iter().map(|&a| a > 0.0).collect())
    }

    /// Alpha normalized by its maximum (argmax alpha is already in `[0, 1]`).
    pub fn score_map(&self) -> Plane<f32> {
        let scale = match self.mode {
            MergeMode::Argmax => 1.0,
            MergeMode::Mean => self.alpha.iter().copied().fold(0.0, f64::max).max(f64::MIN_POSITIVE),
        };
        Plane::from_vec(
            self.size,
            self.size,
            self.alpha.iter().map(|&a| (a / scale).min(1.0) as f32).collect(),
        )
    }

    /// Writes the 8-bit texture to `path` and the 16-bit score map next to it
    /// as `<stem>_score.png`.
    pub fn save(&self, path: &Path) -> Result<()> {
        self.texture().save_png(path)?;
        save_gray16_png(&score_sidecar_path(path), &self.score_map())
    }
}

pub fn score_sidecar_path(path: &Path) -> std::path::PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("texture");
    path.with_file_name(format!("{stem}_score.png"))
}

fn check_size(acc: &TextureAccumulator, patch: &IncrementPatch) {
    assert_eq!(acc.size, patch.size(), "patch and accumulator sizes differ");
}

/// Running weighted mean with effective score `s' = s · w`.
///
/// Panics if the accumulator is not in mean mode or the sizes differ.
pub fn merge_mean(acc: &mut TextureAccumulator, patch: &IncrementPatch) -> MergeStats {
    assert_eq!(acc.mode, MergeMode::Mean, "merge_mean on an argmax accumulator");
    check_size(acc, patch);
    let mut stats = MergeStats::default();
    for t in patch.texels() {
        let (c, a) = (&mut acc.color[t.texel as usize], &mut acc.alpha[t.texel as usize]);
        stats.present += 1;
        let s = t.score as f64 * t.blend_weight as f64;
        if !(s > 0.0) {
            continue;
        }
        let total = *a + s;
        for k in 0..3 {
            c[k] = (*a * c[k] + s * t.color[k] as f64) / total;
        }
        *a = total;
        stats.updated += 1;
    }
    stats
}

/// Best-view replacement, feathered by the blend weight. A texel updates
/// only on a strictly higher score; never-observed texels take the new
/// value outright.
///
/// Panics if the accumulator is not in argmax mode or the sizes differ.
pub fn merge_argmax(acc: &mut TextureAccumulator, patch: &IncrementPatch) -> MergeStats {
    assert_eq!(acc.mode, MergeMode::Argmax, "merge_argmax on a mean accumulator");
    check_size(acc, patch);
    let mut stats = MergeStats::default();
    for t in patch.texels() {
        let (c, a) = (&mut acc.color[t.texel as usize], &mut acc.alpha[t.texel as usize]);
        stats.present += 1;
        let s = t.score as f64;
        if !(s > *a) {
            continue;
        }
        let new = t.color.map(|v| v as f64);
        if *a == 0.0 {
            *c = new;
            *a = s;
        } else {
            let w = t.blend_weight as f64;
            for k in 0..3 {
                c[k] = (1.0 - w) * c[k] + w * new[k];
            }
            *a = (1.0 - w) * *a + w * s;
        }
        stats.updated += 1;
    }
    stats
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fusion::PatchTexel;
    use proptest::prelude::*;

    fn single(color: f32, score: f32, w: f32) -> IncrementPatch {
        let t = PatchTexel {
            texel: 0,
            color: [color; 3],
            score,
            blend_weight: w,
        };
        IncrementPatch::from_texels(16, vec![t])
    }

    #[test]
    fn mean_examples() {
        let mut acc = TextureAccumulator::new(16, MergeMode::Mean);
        acc.merge(&single(0.2, 0.5, 1.0));
        acc.merge(&single(0.6, 0.5, 1.0));
        assert!((acc.color(0, 0)[0] - 0.4).abs() < 1e-6);

        let mut acc = TextureAccumulator::new(16, MergeMode::Mean);
        acc.merge(&single(1.0, 0.75, 1.0));
        acc.merge(&single(0.0, 0.25, 1.0));
        assert!((acc.color(0, 0)[1] - 0.75).abs() < 1e-6);
        assert!((acc.alpha(0, 0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn argmax_examples() {
        let mut acc = TextureAccumulator::new(16, MergeMode::Argmax);
        // First observation ignores w.
        acc.merge(&single(0.3, 0.4, 0.2));
        assert_eq!(acc.color(0, 0), [0.30000001192092896; 3]);
        assert!((acc.alpha(0, 0) - 0.4).abs() < 1e-7);
        acc.merge(&single(0.9, 0.8, 1.0));
        assert!((acc.color(0, 0)[2] - 0.9).abs() < 1e-7);
        // Ties and lower scores keep the old value.
        acc.merge(&single(0.1, 0.8, 1.0));
        acc.merge(&single(0.1, 0.5, 1.0));
        assert!((acc.color(0, 0)[0] - 0.9).abs() < 1e-7);
        // Feathered replacement.
        acc.merge(&single(0.0, 1.0, 0.5));
        assert!((acc.color(0, 0)[0] - 0.45).abs() < 1e-6);
        assert!((acc.alpha(0, 0) - 0.9).abs() < 1e-6);
    }

    #[test]
    fn zero_score_is_noop() {
        for mode in [MergeMode::Mean, MergeMode::Argmax] {
            let mut acc = TextureAccumulator::new(16, mode);
            acc.merge(&single(0.5, 0.5, 1.0));
            let before = acc.clone();
            acc.merge(&single(0.9, 0.0, 1.0));
            assert_eq!(acc, before);
            assert_eq!(acc.observed_count(), 1);
        }
    }

    #[test]
    fn empty_patch_is_noop() {
        let mut acc = TextureAccumulator::new(16, MergeMode::Argmax);
        acc.merge(&single(0.5, 0.5, 1.0));
        let before = acc.clone();
        let stats = acc.merge(&IncrementPatch::empty(16));
        assert_eq!(stats, MergeStats::default());
        assert_eq!(acc, before);
    }

    #[test]
    #[should_panic]
    fn mode_mismatch_panics() {
        let mut acc = TextureAccumulator::new(16, MergeMode::Argmax);
        merge_mean(&mut acc, &IncrementPatch::empty(16));
    }

    #[test]
    fn mode_parses() {
        assert_eq!("mean".parse::<MergeMode>().unwrap(), MergeMode::Mean);
        assert_eq!("argmax".parse::<MergeMode>().unwrap(), MergeMode::Argmax);
        assert!("max".parse::<MergeMode>().is_err());
    }

    type Obs = Vec<(f32, f32, f32)>;

    fn observations() -> impl Strategy<Value = Obs> {
        prop::collection::vec((0.0f32..=1.0, 0.0f32..=1.0, 0.05f32..=1.0), 1..12)
    }

    proptest! {
        #[test]
        fn mean_matches_batch_formula(obs in observations()) {
            let mut acc = TextureAccumulator::new(16, MergeMode::Mean);
            for &(c, s, w) in &obs {
                acc.merge(&single(c, s, w));
            }
            let num: f64 = obs.iter().map(|&(c, s, w)| c as f64 * s as f64 * w as f64).sum();
            let den: f64 = obs.iter().map(|&(_, s, w)| s as f64 * w as f64).sum();
            if den > 0.0 {
                prop_assert!((acc.color(0, 0)[0] - num / den).abs() < 1e-6);
                prop_assert!((acc.alpha(0, 0) - den).abs() < 1e-9);
            } else {
                prop_assert_eq!(acc.alpha(0, 0), 0.0);
            }
        }

        #[test]
        fn mean_is_order_insensitive(obs in observations(), seed in any::<u64>()) {
            let mut shuffled = obs.clone();
            let n = shuffled.len();
            let mut state = seed;
            for i in (1..n).rev() {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                shuffled.swap(i, (state >> 33) as usize % (i + 1));
            }
            let run = |o: &Obs| {
                let mut acc = TextureAccumulator::new(16, MergeMode::Mean);
                for &(c, s, w) in o {
                    acc.merge(&single(c, s, w));
                }
                acc.color(0, 0)[0]
            };
            prop_assert!((run(&obs) - run(&shuffled)).abs() < 1e-6);
        }

        #[test]
        fn alpha_monotone_and_convex_hull(obs in observations(), argmax in any::<bool>()) {
            let mode = if argmax { MergeMode::Argmax } else { MergeMode::Mean };
            let mut acc = TextureAccumulator::new(16, mode);
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            let mut prev = 0.0;
            for &(c, s, w) in &obs {
                // Argmax alpha monotonicity only holds at interior texels.
                let w = if argmax { 1.0 } else { w };
                acc.merge(&single(c, s, w));
                if s > 0.0 {
                    lo = lo.min(c as f64);
                    hi = hi.max(c as f64);
                }
                let a = acc.alpha(0, 0);
                prop_assert!(a >= prev);
                prev = a;
                if a > 0.0 {
                    let v = acc.color(0, 0)[0];
                    prop_assert!(v >= lo - 1e-9 && v <= hi + 1e-9);
                }
            }
        }

        #[test]
        fn unblended_argmax_is_brute_force(obs in observations()) {
            let mut acc = TextureAccumulator::new(16, MergeMode::Argmax);
            for &(c, s, _) in &obs {
                acc.merge(&single(c, s, 1.0));
            }
            // First strictly maximal score wins.
            let mut best: Option<(f32, f32)> = None;
            for &(c, s, _) in &obs {
                if s > best.map_or(0.0, |b| b.1) {
                    best = Some((c, s));
                }
            }
            match best {
                Some((c, s)) => {
                    prop_assert_eq!(acc.color(0, 0)[0], c as f64);
                    prop_assert_eq!(acc.alpha(0, 0), s as f64);
                }
                None => prop_assert_eq!(acc.alpha(0, 0), 0.0),
            }
        }
    }
}
