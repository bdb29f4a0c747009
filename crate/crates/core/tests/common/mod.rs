//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use splatprune::scene::activate;
use splatprune::{Camera, ColorImage, Gaussian, RawGaussian, Scene};

/// Dip of a sample computed as the smallest `eps` for which some unimodal CDF
/// stays within `eps` of the empirical CDF at every sample point (both the
/// left limit and the value), found by bisection.
///
/// A unimodal CDF restricted to the distinct sample points is a
/// nondecreasing sequence that is convex up to some knot `k` and concave from
/// `k` on, with a possible jump (an atom) at `k` itself. For a fixed band `[lo, hi]`:
/// - a convex sequence inside the band on `0..=k` exists iff no band lower
///   bound pokes above a chord of upper bounds (greatest convex minorant test);
/// - its smallest admissible value at `k` is bounded by extending chords
///   through `lo_j` with the steepest forced slope;
/// - symmetrically for the concave side. Both sides must agree at `k`.
pub fn dip_oracle(samples: &[f64]) -> f64 {
    let mut x = samples.to_vec();
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    let mut xs: Vec<f64> = Vec::new();
    let mut f_hi: Vec<f64> = Vec::new();
    let mut f_lo: Vec<f64> = Vec::new();
    let mut seen = 0usize;
    for (i, &v) in x.iter().enumerate() {
        if i > 0 && v == x[i - 1] {
            continue;
        }
        let count = x[i..].iter().take_while(|&&w| w == v).count();
        xs.push(v);
        f_lo.push(seen as f64 / n);
        seen += count;
        f_hi.push(seen as f64 / n);
    }
    let m = xs.len();
    if m == 1 {
        return 0.0;
    }

    // eps needed for the convex prefix 0..=k (and concave suffix k..) to exist
    let mut eps_left = vec![0.0f64; m];
    for b in 0..m {
        let mut worst = 0.0f64;
        for a in 0..b {
            for j in a + 1..b {
                let t = (xs[j] - xs[a]) / (xs[b] - xs[a]);
                let chord = f_lo[a] + t * (f_lo[b] - f_lo[a]);
                worst = worst.max(0.5 * (f_hi[j] - chord));
            }
        }
        eps_left[b] = if b == 0 {
            0.0
        } else {
            eps_left[b - 1].max(worst)
        };
    }
    let mut eps_right = vec![0.0f64; m];
    for a in (0..m).rev() {
        let mut worst = 0.0f64;
        for b in a + 1..m {
            for j in a + 1..b {
                let t = (xs[j] - xs[a]) / (xs[b] - xs[a]);
                let chord = f_hi[a] + t * (f_hi[b] - f_hi[a]);
                worst = worst.max(0.5 * (chord - f_lo[j]));
            }
        }
        eps_right[a] = if a == m - 1 {
            0.0
        } else {
            eps_right[a + 1].max(worst)
        };
    }

    let feasible = |eps: f64| -> bool {
        let lo: Vec<f64> = f_hi.iter().map(|v| v - eps).collect();
        let hi: Vec<f64> = f_lo.iter().map(|v| v + eps).collect();
        // every point but the mode needs both the value and the left limit
        // within eps of a single G value
        let wide: Vec<usize> = (0..m).filter(|&i| lo[i] > hi[i]).collect();
        if wide.len() > 1 {
            return false;
        }
        // steepest slope forced into point j from the left / out of j to the right
        let slope_in: Vec<f64> = (0..m)
            .map(|j| {
                (0..j)
                    .map(|a| (lo[j] - hi[a]) / (xs[j] - xs[a]))
                    .fold(0.0, f64::max)
            })
            .collect();
        let slope_out: Vec<f64> = (0..m)
            .map(|j| {
                (j + 1..m)
                    .map(|b| (lo[b] - hi[j]) / (xs[b] - xs[j]))
                    .fold(0.0, f64::max)
            })
            .collect();
        (0..m).any(|k| {
            if eps < eps_left[k] || eps < eps_right[k] || wide.iter().any(|&w| w != k) {
                return false;
            }
            // the mode may carry an atom: the left limit only has to track
            // F(x_k-) and the value only F(x_k)
            let lmin = (0..k)
                .map(|j| lo[j] + slope_in[j] * (xs[k] - xs[j]))
                .fold(f_lo[k] - eps, f64::max);
            let rmax = (k + 1..m)
                .map(|j| hi[j] - slope_out[j] * (xs[j] - xs[k]))
                .fold(f_hi[k] + eps, f64::min);
            lmin <= rmax
        })
    };

    let (mut a, mut b) = (0.0f64, 0.5f64);
    for _ in 0..80 {
        let mid = 0.5 * (a + b);
        if feasible(mid) {
            b = mid;
        } else {
            a = mid;
        }
    }
    b
}

/// Pearson correlation from raw one-pass sums.
pub fn pcc_one_pass(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mut sx, mut sy, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sx += a;
        sy += b;
        sxx += a * a;
        syy += b * b;
        sxy += a * b;
    }
    let cov = sxy / n - (sx / n) * (sy / n);
    let vx = sxx / n - (sx / n).powi(2);
    let vy = syy / n - (sy / n).powi(2);
    cov / (vx * vy).sqrt()
}

/// SSIM with a direct (non-separable) 11x11 gaussian window and zero padding.
pub fn ssim_direct(a: &ColorImage, b: &ColorImage) -> f64 {
    let (w, h) = a.dims();
    let mut kernel = [[0.0f64; 11]; 11];
    let mut sum = 0.0;
    for (i, row) in kernel.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            let (di, dj) = (i as f64 - 5.0, j as f64 - 5.0);
            *v = (-(di * di + dj * dj) / (2.0 * 1.5 * 1.5)).exp();
            sum += *v;
        }
    }
    let (c1, c2) = (0.01f64.powi(2), 0.03f64.powi(2));
    let mut total = 0.0;
    for c in 0..3 {
        for y in 0..h as isize {
            for x in 0..w as isize {
                let (mut mx, mut my, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
                for i in 0..11isize {
                    for j in 0..11isize {
                        let (sx, sy) = (x + j - 5, y + i - 5);
                        if sx < 0 || sy < 0 || sx >= w as isize || sy >= h as isize {
                            continue;
                        }
                        let k = kernel[i as usize][j as usize] / sum;
                        let p = a.get(sx as usize, sy as usize)[c];
                        let q = b.get(sx as usize, sy as usize)[c];
                        mx += k * p;
                        my += k * q;
                        sxx += k * p * p;
                        syy += k * q * q;
                        sxy += k * p * q;
                    }
                }
                let vx = sxx - mx * mx;
                let vy = syy - my * my;
                let cov = sxy - mx * my;
                total += ((2.0 * mx * my + c1) * (2.0 * cov + c2))
                    / ((mx * mx + my * my + c1) * (vx + vy + c2));
            }
        }
    }
    total / (3 * w * h) as f64
}

/// Random anisotropic gaussians in front of a camera at the origin looking
/// down +z.
pub fn random_scene(seed: u64, count: usize) -> (Scene, Camera) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gaussians = (0..count)
        .map(|_| {
            let z = rng.gen_range(0.5..6.0);
            let pos = [
                rng.gen_range(-0.6..0.6) * z,
                rng.gen_range(-0.6..0.6) * z,
                z,
            ];
            let q: [f64; 4] = [
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            ];
            let norm = q.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-3);
            let scale = [
                rng.gen_range(0.01..0.3),
                rng.gen_range(0.01..0.3),
                rng.gen_range(0.01..0.3),
            ];
            let sh: Vec<[f64; 3]> = (0..4)
                .map(|_| {
                    [
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                    ]
                })
                .collect();
            Gaussian::new(
                pos,
                q.map(|v| v / norm),
                scale,
                rng.gen_range(0.05..0.99),
                sh,
            )
            .unwrap()
        })
        .collect();
    let cam = Camera::look_at(
        0,
        "rand",
        32,
        32,
        30.0,
        [0.0; 3],
        [0.0, 0.0, 1.0],
        [0.0, -1.0, 0.0],
    )
    .unwrap();
    (Scene::new(gaussians), cam)
}

pub fn raw_gaussian(rest: usize) -> impl Strategy<Value = RawGaussian> {
    let f = || -1e3f32..1e3;
    (
        prop::array::uniform3(f()),
        prop::array::uniform3(f()),
        prop::array::uniform3(-5f32..5.0),
        prop::collection::vec(-5f32..5.0, rest),
        -20f32..20.0,
        prop::array::uniform3(-10f32..3.0),
        prop::array::uniform4(-1f32..1.0).prop_filter("normalizable", |q| {
            q.iter().map(|v| v * v).sum::<f32>() > 1e-3
        }),
    )
        .prop_map(
            |(position, normal, f_dc, f_rest, opacity, scale, rotation)| RawGaussian {
                position,
                normal,
                f_dc,
                f_rest,
                opacity,
                scale,
                rotation,
            },
        )
}

/// Random scenes with any supported SH degree and a few header comments.
pub fn ply_scene() -> impl Strategy<Value = Scene> {
    (
        prop_oneof![Just(0usize), Just(9), Just(24), Just(45)],
        0usize..20,
    )
        .prop_flat_map(|(rest, n)| {
            (
                prop::collection::vec(raw_gaussian(rest), n),
                prop::collection::vec("[a-z ]{0,12}", 0..3),
            )
        })
        .prop_map(|(raws, comments)| {
            let mut scene = Scene::new(raws.iter().map(|r| activate(r).unwrap()).collect());
            scene.comments = comments
                .into_iter()
                .map(|c| format!("comment {c}"))
                .collect();
            scene
        })
}
