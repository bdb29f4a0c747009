//! Forward CPU splatting: colour, alpha-blended depth, mode depth and the
//! per-pixel blending records the floater pruner consumes.
//!
//! Compositing is front to back in ascending camera-space depth of the
//! gaussian centres (global per view, ties broken by gaussian id). For the
//! `i`-th contributing gaussian on a pixel, `T_i` is the transmittance before
//! it, `alpha_i` its clamped splat opacity and `w_i = T_i * alpha_i` its
//! weight. Then
//!
//! - colour `= Σ w_i c_i + T_final * background`
//! - `d_alpha = Σ w_i d_i` (not normalised by `Σ w_i`)
//! - `d_mode = d_k` with `k = argmax w_i`, ties to the nearer gaussian.
//!
//! Pixels with no contributor get `d_alpha = d_mode = 0`.

mod project;
mod reference;
mod render;
pub mod sh;

pub use project::{project_gaussian, Projected2D, LOW_PASS, SUPPORT_SIGMAS};
pub use reference::reference_render;
pub use render::render;

use crate::error::{Error, Result};
use crate::grid::{ColorImage, DepthMap, Grid};

/// Gaussians whose centre is at or closer than this camera-space z are culled.
pub const NEAR_PLANE: f64 = 0.2;
/// Contributions with a smaller splat alpha are skipped.
pub const ALPHA_MIN: f64 = 1.0 / 255.0;
/// Compositing stops before a gaussian would push transmittance below this.
pub const MIN_TRANSMITTANCE: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq)]
pub struct RenderOptions {
    pub tile_size: usize,
    pub background: [f64; 3],
    pub alpha_min: f64,
    pub min_transmittance: f64,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions {
            tile_size: 16,
            background: [0.0; 3],
            alpha_min: ALPHA_MIN,
            min_transmittance: MIN_TRANSMITTANCE,
        }
    }
}

impl RenderOptions {
    pub fn validate(&self) -> Result<()> {
        if self.tile_size == 0 {
            return Err(Error::InvalidArgument("tile size must be positive".into()));
        }
        if !(self.alpha_min > 0.0 && self.alpha_min < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "alpha cutoff {} outside (0, 1)",
                self.alpha_min
            )));
        }
        if !(0.0..1.0).contains(&self.min_transmittance) {
            return Err(Error::InvalidArgument(format!(
                "termination transmittance {} outside [0, 1)",
                self.min_transmittance
            )));
        }
        if self.background.iter().any(|c| !(0.0..=1.0).contains(c)) {
            return Err(Error::InvalidArgument(format!(
                "background {:?} outside [0, 1]",
                self.background
            )));
        }
        Ok(())
    }
}

/// Positions in [`RenderOutput::point_list`] of a pixel's first contributing
/// gaussian and of its mode gaussian.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModeRange {
    pub start: usize,
    pub mode: usize,
}

/// One composited gaussian on a pixel.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlendStep {
    /// Index into [`RenderOutput::point_list`].
    pub list_index: usize,
    pub gaussian_id: usize,
    /// Transmittance before this gaussian.
    pub transmittance: f64,
    pub alpha: f64,
    pub weight: f64,
    pub depth: f64,
}

#[derive(Clone, Debug)]
pub struct RenderOutput {
    pub color: ColorImage,
    pub d_alpha: DepthMap,
    pub d_mode: DepthMap,
    pub final_t: DepthMap,
    /// Largest `w_i` on each pixel (0 where nothing contributed).
    pub mode_weight: DepthMap,
    /// `None` where no gaussian contributed.
    pub mode_range: Grid<Option<ModeRange>>,
    /// Depth-sorted gaussian ids, tile after tile.
    pub point_list: Vec<usize>,
    /// Range of `point_list` for each tile, row-major over tiles.
    pub tile_ranges: Vec<(usize, usize)>,
    pub tile_size: usize,
    /// Projection of every gaussian in this view, indexed by gaussian id.
    pub projected: Vec<Option<Projected2D>>,
    pub options: RenderOptions,
}

impl RenderOutput {
    pub fn width(&self) -> usize {
        self.d_alpha.width()
    }

    pub fn height(&self) -> usize {
        self.d_alpha.height()
    }

    fn tiles_x(&self) -> usize {
        self.width().div_ceil(self.tile_size)
    }

    pub fn tile_range(&self, x: usize, y: usize) -> (usize, usize) {
        self.tile_ranges[(y / self.tile_size) * self.tiles_x() + x / self.tile_size]
    }

    /// Gaussian id of the mode on pixel `(x, y)`.
    pub fn mode_gaussian(&self, x: usize, y: usize) -> Option<usize> {
        self.mode_range.get(x, y).map(|r| self.point_list[r.mode])
    }

    /// Replays the compositing of pixel `(x, y)` and returns every gaussian
    /// that contributed, front to back.
    pub fn trace_pixel(&self, x: usize, y: usize) -> Vec<BlendStep> {
        let (lo, hi) = self.tile_range(x, y);
        let mut steps = Vec::new();
        blend_pixel(
            &self.point_list[lo..hi],
            lo,
            &self.projected,
            x as f64 + 0.5,
            y as f64 + 0.5,
            &self.options,
            |s| steps.push(s),
        );
        steps
    }
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct PixelResult {
    pub color: [f64; 3],
    pub d_alpha: f64,
    pub d_mode: f64,
    pub final_t: f64,
    pub mode_weight: f64,
    pub mode_range: Option<ModeRange>,
}

/// Front-to-back compositing of one pixel over a depth-sorted id list.
/// `base` is the position of `ids[0]` in the full point list.
pub(crate) fn blend_pixel(
    ids: &[usize],
    base: usize,
    projected: &[Option<Projected2D>],
    px: f64,
    py: f64,
    opts: &RenderOptions,
    mut visit: impl FnMut(BlendStep),
) -> PixelResult {
    let mut t = 1.0;
    let mut color = [0.0; 3];
    let mut d_alpha = 0.0;
    let mut start = None;
    let mut mode: Option<(usize, f64, f64)> = None;
    for (offset, &id) in ids.iter().enumerate() {
        let Some(p) = projected[id].as_ref() else {
            continue;
        };
        let alpha = p.alpha_at(px, py);
        if alpha < opts.alpha_min {
            continue;
        }
        let next_t = t * (1.0 - alpha);
        if next_t < opts.min_transmittance {
            break;
        }
        let w = alpha * t;
        for (acc, v) in color.iter_mut().zip(p.color) {
            *acc += w * v;
        }
        d_alpha += w * p.depth;
        let index = base + offset;
        start.get_or_insert(index);
        if mode.is_none_or(|(_, best, _)| w > best) {
            mode = Some((index, w, p.depth));
        }
        visit(BlendStep {
            list_index: index,
            gaussian_id: id,
            transmittance: t,
            alpha,
            weight: w,
            depth: p.depth,
        });
        t = next_t;
    }
    for (acc, v) in color.iter_mut().zip(opts.background) {
        *acc += t * v;
    }
    let (mode_range, mode_weight, d_mode) = match (start, mode) {
        (Some(start), Some((index, w, depth))) => {
            (Some(ModeRange { start, mode: index }), w, depth)
        }
        _ => (None, 0.0, 0.0),
    };
    PixelResult {
        color,
        d_alpha,
        d_mode,
        final_t: t,
        mode_weight,
        mode_range,
    }
}

pub(crate) fn assemble(
    width: usize,
    height: usize,
    pixels: Vec<PixelResult>,
) -> (
    ColorImage,
    DepthMap,
    DepthMap,
    DepthMap,
    DepthMap,
    Grid<Option<ModeRange>>,
) {
    let color = Grid::from_vec(width, height, pixels.iter().map(|p| p.color).collect()).unwrap();
    let d_alpha =
        Grid::from_vec(width, height, pixels.iter().map(|p| p.d_alpha).collect()).unwrap();
    let d_mode = Grid::from_vec(width, height, pixels.iter().map(|p| p.d_mode).collect()).unwrap();
    let final_t =
        Grid::from_vec(width, height, pixels.iter().map(|p| p.final_t).collect()).unwrap();
    let mode_weight = Grid::from_vec(
        width,
        height,
        pixels.iter().map(|p| p.mode_weight).collect(),
    )
    .unwrap();
    let mode_range =
        Grid::from_vec(width, height, pixels.iter().map(|p| p.mode_range).collect()).unwrap();
    (color, d_alpha, d_mode, final_t, mode_weight, mode_range)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn options_validation() {
        assert!(RenderOptions::default().validate().is_ok());
        let bad = RenderOptions {
            tile_size: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = RenderOptions {
            alpha_min: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = RenderOptions {
            background: [2.0, 0.0, 0.0],
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
