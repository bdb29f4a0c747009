//! Floater detection and removal.
//!
//! Every view is rendered once. Where the mode depth sits behind the
//! alpha-blended depth by a large relative margin, something semi-transparent
//! in front of the dominant surface is pulling the blended depth forward. The
//! cut-off is a per-view percentile of the positive differences whose level
//! drops as the scene-wide average dip statistic grows: a strongly bimodal
//! difference distribution means many floaters, so more is cut.

use std::collections::BTreeSet;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{DepthMap, Mask};
use crate::modality::{dip_statistic, positive_samples, MIN_DIP_SAMPLES};
use crate::raster::{render, RenderOptions, RenderOutput, ALPHA_MIN};
use crate::scene::{Camera, Scene};

/// Depths at or below this are treated as empty pixels.
pub const MIN_BLENDED_DEPTH: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct PruneConfig {
    /// Percentile at zero average dip.
    pub a: f64,
    /// Decay rate of the percentile with average dip; negative.
    pub b: f64,
    /// A candidate is selected only if its alpha at the pixel exceeds this.
    pub power_thresh: f64,
}

impl Default for PruneConfig {
    fn default() -> Self {
        PruneConfig {
            a: 97.0,
            b: -8.0,
            power_thresh: ALPHA_MIN,
        }
    }
}

impl PruneConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.a <= 100.0) {
            return Err(Error::InvalidArgument(format!(
                "a must lie in (0, 100], got {}",
                self.a
            )));
        }
        if !(self.b < 0.0 && self.b.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "b must be negative, got {}",
                self.b
            )));
        }
        if !(self.power_thresh >= 0.0 && self.power_thresh < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "power_thresh must lie in [0, 1), got {}",
                self.power_thresh
            )));
        }
        Ok(())
    }

    /// `a * exp(b * d_bar)`.
    pub fn percentile(&self, d_bar: f64) -> f64 {
        self.a * (self.b * d_bar).exp()
    }
}

/// `(d_mode - d_alpha) / d_alpha` per pixel, 0 where `d_alpha` is (near) zero.
pub fn relative_diff(out: &RenderOutput) -> DepthMap {
    let data = out
        .d_alpha
        .as_slice()
        .iter()
        .zip(out.d_mode.as_slice())
        .map(|(&a, &m)| {
            if a <= MIN_BLENDED_DEPTH {
                0.0
            } else {
                (m - a) / a
            }
        })
        .collect();
    DepthMap::from_vec(out.width(), out.height(), data).expect("maps share dimensions")
}

/// Percentile `q` in `[0, 100]` of `values` with linear interpolation between
/// order statistics (rank `q/100 * (n-1)`).
pub fn percentile_linear(values: &[f64], q: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InsufficientData("percentile of an empty set".into()));
    }
    if !(0.0..=100.0).contains(&q) {
        return Err(Error::InvalidArgument(format!(
            "percentile {q} outside [0, 100]"
        )));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = q / 100.0 * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = rank - lo as f64;
    Ok(sorted[lo] + (sorted[hi] - sorted[lo]) * frac)
}

/// Threshold over the strictly positive entries of `delta`.
pub fn threshold_from_dip(delta: &DepthMap, d_bar: f64, cfg: &PruneConfig) -> Result<f64> {
    let positive: Vec<f64> = delta
        .as_slice()
        .iter()
        .copied()
        .filter(|v| *v > 0.0)
        .collect();
    if positive.is_empty() {
        return Err(Error::InsufficientData(
            "no positive relative differences".into(),
        ));
    }
    percentile_linear(&positive, cfg.percentile(d_bar))
}

pub fn floater_mask(delta: &DepthMap, tau: f64) -> Mask {
    delta.map(|&v| v > tau)
}

/// Ids of gaussians composited on masked pixels up to and including each
/// pixel's mode gaussian, keeping those whose alpha at the pixel centre
/// exceeds `cfg.power_thresh`.
pub fn select_gaussians(
    out: &RenderOutput,
    mask: &Mask,
    cfg: &PruneConfig,
) -> Result<BTreeSet<usize>> {
    if mask.dims() != (out.width(), out.height()) {
        return Err(Error::DimensionMismatch(format!(
            "mask {:?} vs render {:?}",
            mask.dims(),
            (out.width(), out.height())
        )));
    }
    let mut selected = BTreeSet::new();
    for (x, y, &hit) in mask.indexed() {
        if !hit {
            continue;
        }
        let Some(range) = out.mode_range.get(x, y) else {
            continue;
        };
        let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
        for &id in &out.point_list[range.start..=range.mode] {
            let Some(p) = &out.projected[id] else {
                continue;
            };
            if p.alpha_at(px, py) > cfg.power_thresh {
                selected.insert(id);
            }
        }
    }
    Ok(selected)
}

#[derive(Clone, Debug)]
pub struct ViewReport {
    pub camera_id: i64,
    pub image_name: String,
    pub delta: DepthMap,
    /// `None` when the view had too few positive differences for the dip test.
    pub dip: Option<f64>,
    /// `None` when the view had no positive differences; nothing is selected.
    pub threshold: Option<f64>,
    pub mask: Mask,
    pub selected: BTreeSet<usize>,
}

#[derive(Clone, Debug)]
pub struct FloaterReport {
    /// Mean dip over views with a dip value (0 if none had one).
    pub d_bar: f64,
    pub percentile: f64,
    pub views: Vec<ViewReport>,
    /// Union of the per-view selections, as ids into the scene before removal.
    pub pruned: BTreeSet<usize>,
    pub gaussians_before: usize,
}

impl FloaterReport {
    pub fn pruned_count(&self) -> usize {
        self.pruned.len()
    }
}

/// Runs detection over all views without touching the scene.
pub fn detect_floaters(
    scene: &Scene,
    cameras: &[Camera],
    cfg: &PruneConfig,
    opts: &RenderOptions,
) -> Result<FloaterReport> {
    cfg.validate()?;
    if cameras.is_empty() {
        return Err(Error::InvalidArgument(
            "floater detection needs at least one camera".into(),
        ));
    }
    if scene.is_empty() {
        return Err(Error::InvalidArgument("scene has no gaussians".into()));
    }
    let renders: Vec<RenderOutput> = cameras
        .par_iter()
        .map(|cam| render(scene, cam, opts))
        .collect::<Result<_>>()?;
    let deltas: Vec<DepthMap> = renders.par_iter().map(relative_diff).collect();
    let dips: Vec<Option<f64>> = deltas
        .par_iter()
        .map(|d| {
            let samples = positive_samples(d);
            if samples.len() < MIN_DIP_SAMPLES {
                None
            } else {
                dip_statistic(&samples).ok().map(|r| r.dip)
            }
        })
        .collect();
    let valid: Vec<f64> = dips.iter().flatten().copied().collect();
    let d_bar = if valid.is_empty() {
        log::warn!("no view had enough positive differences for a dip value; using 0");
        0.0
    } else {
        valid.iter().sum::<f64>() / valid.len() as f64
    };
    let percentile = cfg.percentile(d_bar);

    let views: Vec<ViewReport> = renders
        .par_iter()
        .zip(deltas)
        .zip(&dips)
        .zip(cameras)
        .map(|(((out, delta), &dip), cam)| {
            let threshold = threshold_from_dip(&delta, d_bar, cfg).ok();
            let (mask, selected) = match threshold {
                Some(tau) => {
                    let mask = floater_mask(&delta, tau);
                    let selected = select_gaussians(out, &mask, cfg)?;
                    (mask, selected)
                }
                None => (
                    Mask::filled(delta.width(), delta.height(), false),
                    BTreeSet::new(),
                ),
            };
            Ok(ViewReport {
                camera_id: cam.id,
                image_name: cam.image_name.clone(),
                delta,
                dip,
                threshold,
                mask,
                selected,
            })
        })
        .collect::<Result<_>>()?;
    let pruned = views
        .iter()
        .flat_map(|v| v.selected.iter().copied())
        .collect();
    Ok(FloaterReport {
        d_bar,
        percentile,
        views,
        pruned,
        gaussians_before: scene.len(),
    })
}

/// Detects floaters in every view and removes the union of the selections
/// from `scene` in one batch.
pub fn prune_floaters(
    scene: &mut Scene,
    cameras: &[Camera],
    cfg: &PruneConfig,
    opts: &RenderOptions,
) -> Result<FloaterReport> {
    let report = detect_floaters(scene, cameras, cfg, opts)?;
    scene.remove(report.pruned.iter().copied());
    log::info!(
        "pruned {} of {} gaussians (average dip {:.4}, percentile {:.2})",
        report.pruned_count(),
        report.gaussians_before,
        report.d_bar,
        report.percentile
    );
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(PruneConfig::default().validate().is_ok());
        assert!(PruneConfig {
            a: 101.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(PruneConfig {
            a: 0.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(PruneConfig {
            b: 0.0,
            ..Default::default()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn percentile_interpolates() {
        let v: Vec<f64> = (1..=10).map(|i| i as f64 / 10.0).collect();
        assert!((percentile_linear(&v, 50.0).unwrap() - 0.55).abs() < 1e-12);
        assert_eq!(percentile_linear(&v, 0.0).unwrap(), 0.1);
        assert_eq!(percentile_linear(&v, 100.0).unwrap(), 1.0);
        assert_eq!(percentile_linear(&[3.0], 42.0).unwrap(), 3.0);
        assert!(percentile_linear(&[], 50.0).is_err());
    }

    #[test]
    fn threshold_ignores_non_positive() {
        let mut data: Vec<f64> = (1..=10).map(|i| i as f64 / 10.0).collect();
        data.extend([0.0, -1.0, -0.5, 0.0, -2.0, 0.0]);
        let delta = DepthMap::from_vec(4, 4, data).unwrap();
        let cfg = PruneConfig {
            a: 50.0,
            ..Default::default()
        };
        assert!((threshold_from_dip(&delta, 0.0, &cfg).unwrap() - 0.55).abs() < 1e-12);
        let none = DepthMap::filled(2, 2, -0.1);
        assert!(threshold_from_dip(&none, 0.0, &cfg).is_err());
    }

    #[test]
    fn mask_is_strict() {
        let delta = DepthMap::from_vec(3, 1, vec![0.5, 0.5000001, 0.2]).unwrap();
        let mask = floater_mask(&delta, 0.5);
        assert_eq!(mask.as_slice(), &[false, true, false]);
    }
}
