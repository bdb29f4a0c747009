//! Hartigan's dip statistic.
//!
//! The dip is the sup-norm distance between the empirical CDF of a sample and
//! the closest unimodal CDF. It is computed with the greatest-convex-minorant
//! / least-concave-majorant iteration of Hartigan & Hartigan (1985), following
//! the corrected form used by the R and Python `diptest` packages: the result
//! is at least `1/(2n)` for non-degenerate samples and 0 when all samples are
//! equal.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::DepthMap;

/// Largest number of values passed to the dip test per view; larger sets are
/// subsampled with a uniform stride.
pub const MAX_DIP_SAMPLES: usize = 50_000;
/// Smallest sample count accepted by [`dip_statistic`].
pub const MIN_DIP_SAMPLES: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DipResult {
    /// In `[0, 0.25]`.
    pub dip: f64,
    pub n: usize,
}

pub fn dip_statistic(samples: &[f64]) -> Result<DipResult> {
    if samples.len() < MIN_DIP_SAMPLES {
        return Err(Error::InsufficientData(format!(
            "dip test needs at least {MIN_DIP_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("dip test samples".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    Ok(DipResult {
        dip: dip_sorted(&sorted),
        n: sorted.len(),
    })
}

/// Dip of an ascending sample.
fn dip_sorted(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if sorted[n - 1] == sorted[0] {
        return 0.0;
    }
    // 1-based copy to keep the index arithmetic of the published algorithm
    let mut x = Vec::with_capacity(n + 1);
    x.push(f64::NAN);
    x.extend_from_slice(sorted);

    // mn[j]: previous vertex of the convex minorant of points 1..=j
    let mut mn = vec![0usize; n + 1];
    mn[1] = 1;
    for j in 2..=n {
        mn[j] = j - 1;
        loop {
            let mnj = mn[j];
            let mnmnj = mn[mnj];
            if mnj == 1
                || (x[j] - x[mnj]) * ((mnj - mnmnj) as f64) < (x[mnj] - x[mnmnj]) * (j - mnj) as f64
            {
                break;
            }
            mn[j] = mnmnj;
        }
    }
    // mj[k]: next vertex of the concave majorant of points k..=n
    let mut mj = vec![0usize; n + 1];
    mj[n] = n;
    for k in (1..n).rev() {
        mj[k] = k + 1;
        loop {
            let mjk = mj[k];
            let mjmjk = mj[mjk];
            if mjk == n
                || (x[k] - x[mjk]) * (mjk as f64 - mjmjk as f64)
                    < (x[mjk] - x[mjmjk]) * (k as f64 - mjk as f64)
            {
                break;
            }
            mj[k] = mjmjk;
        }
    }

    // Everything below is in units of 1/n ("counts"); the dip is dip/(2n).
    let mut dip = 1.0f64;
    let mut low = 1usize;
    let mut high = n;
    let mut gcm = vec![0usize; n + 2];
    let mut lcm = vec![0usize; n + 2];
    while low < high {
        // GCM change points from high down to low
        let mut ic = 1;
        gcm[1] = high;
        while gcm[ic] > low {
            gcm[ic + 1] = mn[gcm[ic]];
            ic += 1;
        }
        let l_gcm = ic;
        let mut ix = ic - 1;

        // LCM change points from low up to high
        let mut ic = 1;
        lcm[1] = low;
        while lcm[ic] < high {
            lcm[ic + 1] = mj[lcm[ic]];
            ic += 1;
        }
        let l_lcm = ic;
        let mut iv = 2;

        if l_gcm == 2 && l_lcm == 2 {
            // both hulls are the single chord low..high
            break;
        }

        // Largest vertical distance between the GCM and LCM on [low, high].
        let mut d = 0.0f64;
        let mut ig = 0usize;
        let mut ih = 0usize;
        loop {
            let gcmix = gcm[ix];
            let lcmiv = lcm[iv];
            if gcmix > lcmiv {
                let gcmi1 = gcm[ix + 1];
                let dx = (lcmiv as f64 - gcmi1 as f64 + 1.0)
                    - (x[lcmiv] - x[gcmi1]) * (gcmix as f64 - gcmi1 as f64) / (x[gcmix] - x[gcmi1]);
                iv += 1;
                if dx >= d {
                    d = dx;
                    ig = ix + 1;
                    ih = iv - 1;
                }
            } else {
                let lcmiv1 = lcm[iv - 1];
                let dx = (x[gcmix] - x[lcmiv1]) * (lcmiv as f64 - lcmiv1 as f64)
                    / (x[lcmiv] - x[lcmiv1])
                    - (gcmix as f64 - lcmiv1 as f64 - 1.0);
                ix -= 1;
                if dx >= d {
                    d = dx;
                    ig = ix + 1;
                    ih = iv;
                }
            }
            ix = ix.max(1);
            iv = iv.min(l_lcm);
            if gcm[ix] == lcm[iv] {
                break;
            }
        }

        if d < dip {
            break;
        }

        // Dip of the convex minorant on the part being cut off at the left.
        let mut dip_l = 0.0f64;
        for j in ig..l_gcm {
            let mut max_t = 1.0f64;
            let (jb, je) = (gcm[j + 1], gcm[j]);
            if je - jb > 1 && x[je] != x[jb] {
                let slope = (je - jb) as f64 / (x[je] - x[jb]);
                for jj in jb..=je {
                    let t = (jj - jb + 1) as f64 - (x[jj] - x[jb]) * slope;
                    max_t = max_t.max(t);
                }
            }
            dip_l = dip_l.max(max_t);
        }
        // ... and of the concave majorant at the right.
        let mut dip_u = 0.0f64;
        for j in ih..l_lcm {
            let mut max_t = 1.0f64;
            let (jb, je) = (lcm[j], lcm[j + 1]);
            if je - jb > 1 && x[je] != x[jb] {
                let slope = (je - jb) as f64 / (x[je] - x[jb]);
                for jj in jb..=je {
                    let t = (x[jj] - x[jb]) * slope - (jj as f64 - jb as f64 - 1.0);
                    max_t = max_t.max(t);
                }
            }
            dip_u = dip_u.max(max_t);
        }
        dip = dip.max(dip_l.max(dip_u));

        if low == gcm[ig] && high == lcm[ih] {
            break;
        }
        low = gcm[ig];
        high = lcm[ih];
    }
    dip / (2.0 * n as f64)
}

/// Strictly positive entries of a relative-difference map, subsampled with a
/// uniform stride to at most [`MAX_DIP_SAMPLES`] values.
pub fn positive_samples(delta: &DepthMap) -> Vec<f64> {
    let positive: Vec<f64> = delta
        .as_slice()
        .iter()
        .copied()
        .filter(|v| *v > 0.0)
        .collect();
    if positive.len() <= MAX_DIP_SAMPLES {
        return positive;
    }
    let stride = positive.len().div_ceil(MAX_DIP_SAMPLES);
    positive.into_iter().step_by(stride).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct AverageDip {
    pub mean: f64,
    /// Dip per input map; `None` where the map had fewer than four positive values.
    pub per_view: Vec<Option<f64>>,
}

/// Mean dip over views, each computed on that view's strictly positive Δ values.
pub fn average_dip(delta_maps: &[DepthMap]) -> Result<AverageDip> {
    if delta_maps.is_empty() {
        return Err(Error::InsufficientData("no views for the dip test".into()));
    }
    let per_view: Vec<Option<f64>> = delta_maps
        .par_iter()
        .map(|delta| {
            let samples = positive_samples(delta);
            dip_statistic(&samples).ok().map(|r| r.dip)
        })
        .collect();
    for (i, d) in per_view.iter().enumerate() {
        if d.is_none() {
            log::warn!("view {i}: fewer than {MIN_DIP_SAMPLES} positive differences, skipped in dip average");
        }
    }
    let dips: Vec<f64> = per_view.iter().flatten().copied().collect();
    if dips.is_empty() {
        return Err(Error::InsufficientData(
            "every view was skipped by the dip test".into(),
        ));
    }
    Ok(AverageDip {
        mean: dips.iter().sum::<f64>() / dips.len() as f64,
        per_view,
    })
}
