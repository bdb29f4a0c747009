use super::project::project_unculled;
use super::{assemble, ModeRange, PixelResult, RenderOptions, RenderOutput};
use crate::scene::{Camera, Scene};

/// Untiled O(N·H·W) renderer used as an oracle for [`super::render`].
///
/// Every gaussian in front of the near plane is globally sorted by
/// (depth, id) and visited for every pixel. It shares only the splat alpha
/// rule, the 1/255 cutoff and the transmittance termination with the tiled
/// path. Uses default options.
pub fn reference_render(scene: &Scene, cam: &Camera) -> RenderOutput {
    let opts = RenderOptions::default();
    let width = cam.width() as usize;
    let height = cam.height() as usize;

    let projected: Vec<_> = scene
        .gaussians
        .iter()
        .enumerate()
        .map(|(id, g)| project_unculled(id, g, cam))
        .collect();
    let mut order: Vec<usize> = (0..projected.len())
        .filter(|&i| projected[i].is_some())
        .collect();
    order.sort_by(|&a, &b| {
        let da = projected[a].as_ref().unwrap().depth;
        let db = projected[b].as_ref().unwrap().depth;
        da.total_cmp(&db).then(a.cmp(&b))
    });

    let mut pixels = Vec::with_capacity(width * height);
    for y in 0..height {
        for x in 0..width {
            let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
            let mut transmittance = 1.0;
            let mut rgb = [0.0; 3];
            let mut depth_sum = 0.0;
            let mut first: Option<usize> = None;
            let mut best: Option<(usize, f64)> = None;
            for (k, &id) in order.iter().enumerate() {
                let g = projected[id].as_ref().unwrap();
                let alpha = g.alpha_at(px, py);
                if alpha < opts.alpha_min {
                    continue;
                }
                let after = transmittance * (1.0 - alpha);
                if after < opts.min_transmittance {
                    break;
                }
                let w = transmittance * alpha;
                rgb.iter_mut()
                    .zip(g.color)
                    .for_each(|(acc, c)| *acc += w * c);
                depth_sum += w * g.depth;
                if first.is_none() {
                    first = Some(k);
                }
                match best {
                    Some((_, bw)) if bw >= w => {}
                    _ => best = Some((k, w)),
                }
                transmittance = after;
            }
            rgb.iter_mut()
                .zip(opts.background)
                .for_each(|(acc, b)| *acc += transmittance * b);
            let (mode_range, mode_weight, d_mode) = match (first, best) {
                (Some(start), Some((k, w))) => (
                    Some(ModeRange { start, mode: k }),
                    w,
                    projected[order[k]].as_ref().unwrap().depth,
                ),
                _ => (None, 0.0, 0.0),
            };
            pixels.push(PixelResult {
                color: rgb,
                d_alpha: depth_sum,
                d_mode,
                final_t: transmittance,
                mode_weight,
                mode_range,
            });
        }
    }
    let (color, d_alpha, d_mode, final_t, mode_weight, mode_range) =
        assemble(width, height, pixels);
    RenderOutput {
        color,
        d_alpha,
        d_mode,
        final_t,
        mode_weight,
        mode_range,
        tile_ranges: vec![(0, order.len())],
        point_list: order,
        tile_size: width.max(height),
        projected,
        options: opts,
    }
}
