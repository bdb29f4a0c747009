//! Pearson correlation and the patch-based depth correlation loss.
//!
//! The loss compares a rendered depth map against a (monocular) source depth
//! map on randomly placed square patches. Correlation is invariant to scale
//! and shift, so the source depth only needs to be relatively correct.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::DepthMap;

/// Variance below which a patch is treated as constant.
pub const DEGENERATE_VARIANCE: f64 = 1e-12;
/// Patches with fewer valid source pixels than this fraction are skipped.
pub const MIN_VALID_FRACTION: f64 = 0.25;

#[derive(Clone, Debug, PartialEq)]
pub struct PatchSpec {
    /// Patch side length in pixels.
    pub box_size: usize,
    /// Fraction of the non-overlapping patch tiling that is sampled.
    pub p_corr: f64,
    pub seed: u64,
}

impl Default for PatchSpec {
    fn default() -> Self {
        PatchSpec {
            box_size: 128,
            p_corr: 0.5,
            seed: 0,
        }
    }
}

impl PatchSpec {
    pub fn validate(&self) -> Result<()> {
        if self.box_size == 0 {
            return Err(Error::InvalidArgument("patch size must be positive".into()));
        }
        if !(self.p_corr > 0.0 && self.p_corr <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "p_corr must lie in (0, 1], got {}",
                self.p_corr
            )));
        }
        Ok(())
    }

    /// `floor(p_corr * floor(H/S) * floor(W/S))`.
    pub fn patch_count(&self, width: usize, height: usize) -> usize {
        let tiles = (height / self.box_size) * (width / self.box_size);
        (self.p_corr * tiles as f64).floor() as usize
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PatchLoss {
    /// Mean of `1 - PCC` over the patches that were used.
    pub value: f64,
    pub sampled: usize,
    /// Patches dropped for having too few valid source pixels.
    pub skipped: usize,
    /// Used patches where either side was constant (loss 1, no gradient).
    pub degenerate: usize,
}

impl PatchLoss {
    pub fn used(&self) -> usize {
        self.sampled - self.skipped
    }
}

/// Pearson correlation coefficient; errors on length mismatch, fewer than two
/// samples, non-finite input or (near) zero variance.
pub fn pcc(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} vs {} samples",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::InsufficientData(
            "correlation needs at least two samples".into(),
        ));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("correlation input".into()));
    }
    let stats = Moments::new(x, y);
    if stats.vx < DEGENERATE_VARIANCE || stats.vy < DEGENERATE_VARIANCE {
        return Err(Error::InsufficientData("zero variance".into()));
    }
    Ok(stats.cov / (stats.vx * stats.vy).sqrt())
}

struct Moments {
    mx: f64,
    my: f64,
    vx: f64,
    vy: f64,
    cov: f64,
}

impl Moments {
    fn new(x: &[f64], y: &[f64]) -> Self {
        let n = x.len() as f64;
        let mx = x.iter().sum::<f64>() / n;
        let my = y.iter().sum::<f64>() / n;
        let (mut vx, mut vy, mut cov) = (0.0, 0.0, 0.0);
        for (a, b) in x.iter().zip(y) {
            let (dx, dy) = (a - mx, b - my);
            vx += dx * dx;
            vy += dy * dy;
            cov += dx * dy;
        }
        Moments {
            mx,
            my,
            vx: vx / n,
            vy: vy / n,
            cov: cov / n,
        }
    }
}

/// Top-left patch corners `(x, y)`, uniform over `[0, W-S] x [0, H-S]`.
pub fn sample_patch_corners(
    width: usize,
    height: usize,
    spec: &PatchSpec,
) -> Result<Vec<(usize, usize)>> {
    spec.validate()?;
    if width < spec.box_size || height < spec.box_size {
        return Err(Error::InvalidArgument(format!(
            "{width}x{height} map is smaller than a {0}x{0} patch",
            spec.box_size
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.patch_count(width, height);
    Ok((0..n)
        .map(|_| {
            let y = rng.gen_range(0..=height - spec.box_size);
            let x = rng.gen_range(0..=width - spec.box_size);
            (x, y)
        })
        .collect())
}

fn check_pair(rendered: &DepthMap, source: &DepthMap) -> Result<()> {
    if !rendered.same_dims(source) {
        return Err(Error::DimensionMismatch(format!(
            "rendered {:?} vs source {:?}",
            rendered.dims(),
            source.dims()
        )));
    }
    if rendered
        .as_slice()
        .iter()
        .chain(source.as_slice())
        .any(|v| !v.is_finite())
    {
        return Err(Error::NonFinite("depth map".into()));
    }
    Ok(())
}

fn evaluate(
    rendered: &DepthMap,
    source: &DepthMap,
    spec: &PatchSpec,
    grad: Option<&mut DepthMap>,
) -> Result<PatchLoss> {
    check_pair(rendered, source)?;
    let corners = sample_patch_corners(rendered.width(), rendered.height(), spec)?;
    let s = spec.box_size;
    let min_valid = (MIN_VALID_FRACTION * (s * s) as f64).ceil() as usize;
    let mut total = 0.0;
    let mut skipped = 0;
    let mut degenerate = 0;
    let mut per_patch = Vec::new();
    for &(x0, y0) in &corners {
        let pixels: Vec<(usize, usize)> = (y0..y0 + s)
            .flat_map(|y| (x0..x0 + s).map(move |x| (x, y)))
            .filter(|&(x, y)| *source.get(x, y) > 0.0)
            .collect();
        if pixels.len() < min_valid.max(2) {
            skipped += 1;
            continue;
        }
        let x: Vec<f64> = pixels
            .iter()
            .map(|&(px, py)| *rendered.get(px, py))
            .collect();
        let y: Vec<f64> = pixels.iter().map(|&(px, py)| *source.get(px, py)).collect();
        let m = Moments::new(&x, &y);
        if m.vx < DEGENERATE_VARIANCE || m.vy < DEGENERATE_VARIANCE {
            degenerate += 1;
            total += 1.0;
            continue;
        }
        let (sx, sy) = (m.vx.sqrt(), m.vy.sqrt());
        let r = m.cov / (sx * sy);
        total += 1.0 - r;
        if grad.is_some() {
            per_patch.push((pixels, x, y, m, r));
        }
    }
    let used = corners.len() - skipped;
    if used == 0 {
        return Err(Error::InsufficientData(format!(
            "none of {} patches had enough valid source depth",
            corners.len()
        )));
    }
    if let Some(g) = grad {
        let scale = 1.0 / used as f64;
        for (pixels, x, y, m, r) in per_patch {
            let n = pixels.len() as f64;
            let (sx, sy) = (m.vx.sqrt(), m.vy.sqrt());
            for (k, &(px, py)) in pixels.iter().enumerate() {
                let d_r = ((y[k] - m.my) / (sx * sy) - r * (x[k] - m.mx) / m.vx) / n;
                *g.get_mut(px, py) -= scale * d_r;
            }
        }
    }
    Ok(PatchLoss {
        value: total / used as f64,
        sampled: corners.len(),
        skipped,
        degenerate,
    })
}

/// Mean `1 - PCC` between `rendered` and `source` over sampled patches.
/// Pixels with non-positive source depth are excluded.
pub fn local_pearson_loss(
    rendered: &DepthMap,
    source: &DepthMap,
    spec: &PatchSpec,
) -> Result<PatchLoss> {
    evaluate(rendered, source, spec, None)
}

/// Loss plus its gradient with respect to each rendered depth value.
pub fn local_pearson_loss_grad(
    rendered: &DepthMap,
    source: &DepthMap,
    spec: &PatchSpec,
) -> Result<(PatchLoss, DepthMap)> {
    let mut grad = DepthMap::filled(rendered.width(), rendered.height(), 0.0);
    let loss = evaluate(rendered, source, spec, Some(&mut grad))?;
    Ok((loss, grad))
}
