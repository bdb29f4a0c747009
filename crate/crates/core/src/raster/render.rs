use rayon::prelude::*;

use super::project::project_gaussian;
use super::{assemble, blend_pixel, PixelResult, RenderOptions, RenderOutput};
use crate::error::Result;
use crate::scene::{Camera, Scene};

/// Tile-based forward render of `scene` from `cam`.
///
/// Gaussians are binned into every tile their 3σ pixel bounds touch, each
/// tile's list is sorted by (depth, id), and tiles are composited in parallel.
/// The output is deterministic: repeated calls give bit-identical results.
pub fn render(scene: &Scene, cam: &Camera, opts: &RenderOptions) -> Result<RenderOutput> {
    opts.validate()?;
    let width = cam.width() as usize;
    let height = cam.height() as usize;
    let ts = opts.tile_size;
    let tiles_x = width.div_ceil(ts);
    let tiles_y = height.div_ceil(ts);

    let projected: Vec<_> = scene
        .gaussians
        .par_iter()
        .enumerate()
        .map(|(id, g)| project_gaussian(id, g, cam))
        .collect();

    let mut bins: Vec<Vec<(f64, usize)>> = vec![Vec::new(); tiles_x * tiles_y];
    for p in projected.iter().flatten() {
        let Some((lo, hi)) = p.pixel_bounds(width, height) else {
            continue;
        };
        for ty in lo[1] / ts..=hi[1] / ts {
            for tx in lo[0] / ts..=hi[0] / ts {
                bins[ty * tiles_x + tx].push((p.depth, p.gaussian_id));
            }
        }
    }
    bins.par_iter_mut()
        .for_each(|bin| bin.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))));

    let mut point_list = Vec::with_capacity(bins.iter().map(Vec::len).sum());
    let mut tile_ranges = Vec::with_capacity(bins.len());
    for bin in &bins {
        let start = point_list.len();
        point_list.extend(bin.iter().map(|&(_, id)| id));
        tile_ranges.push((start, point_list.len()));
    }

    let tiles: Vec<Vec<(usize, PixelResult)>> = (0..tiles_x * tiles_y)
        .into_par_iter()
        .map(|tile| {
            let (tx, ty) = (tile % tiles_x, tile / tiles_x);
            let (lo, hi) = tile_ranges[tile];
            let ids = &point_list[lo..hi];
            let mut out = Vec::with_capacity(ts * ts);
            for y in ty * ts..((ty + 1) * ts).min(height) {
                for x in tx * ts..((tx + 1) * ts).min(width) {
                    let px = blend_pixel(
                        ids,
                        lo,
                        &projected,
                        x as f64 + 0.5,
                        y as f64 + 0.5,
                        opts,
                        |_| {},
                    );
                    out.push((y * width + x, px));
                }
            }
            out
        })
        .collect();

    let mut pixels = vec![None; width * height];
    for (i, px) in tiles.into_iter().flatten() {
        pixels[i] = Some(px);
    }
    let pixels: Vec<PixelResult> = pixels
        .into_iter()
        .map(|p| p.expect("every pixel belongs to a tile"))
        .collect();
    let (color, d_alpha, d_mode, final_t, mode_weight, mode_range) =
        assemble(width, height, pixels);
    Ok(RenderOutput {
        color,
        d_alpha,
        d_mode,
        final_t,
        mode_weight,
        mode_range,
        point_list,
        tile_ranges,
        tile_size: ts,
        projected,
        options: opts.clone(),
    })
}
