//! Deterministic synthetic scenes used by tests, the acceptance suite and the CLI.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Camera, Gaussian, Scene};
use crate::error::{Error, Result};

/// Provenance of a gaussian in a toy scene.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GaussianLabel {
    Surface,
    Floater,
    Ray,
}

/// A textured surface of flat gaussians around the world plane `z = depth`,
/// viewed by cameras placed near the origin. The surface is a semi-transparent
/// front sheet over an opaque backing sheet, larger than the camera frusta.
#[derive(Clone, Debug, PartialEq)]
pub struct PlaneParams {
    pub depth: f64,
    pub half_extent: f64,
    /// Grid spacing between surface gaussians (world units).
    pub spacing: f64,
    /// In-plane standard deviation of each surface gaussian.
    pub sigma: f64,
    pub opacity: (f64, f64),
    /// Uniform positional jitter along the viewing axis.
    pub depth_jitter: f64,
    /// Distance behind the front sheet of a second, half-spacing-shifted
    /// sheet; 0 for a single sheet.
    pub backing_offset: f64,
    pub backing_opacity: (f64, f64),
    pub views: usize,
    /// Lateral spread of the camera centres.
    pub baseline: f64,
    pub image_size: u32,
    pub focal: f64,
}

impl Default for PlaneParams {
    fn default() -> Self {
        PlaneParams {
            depth: 4.0,
            half_extent: 5.0,
            spacing: 0.08,
            sigma: 0.06,
            opacity: (0.4, 0.6),
            depth_jitter: 0.02,
            backing_offset: 0.3,
            backing_opacity: (0.9, 0.98),
            views: 3,
            baseline: 0.3,
            image_size: 64,
            focal: 64.0,
        }
    }
}

/// A compact cluster of faint gaussians between the cameras and the surface.
/// Together they occlude part of the surface but none of them outweighs it.
#[derive(Clone, Debug, PartialEq)]
pub struct FloaterParams {
    pub count: usize,
    pub center: [f64; 3],
    pub radius: f64,
    pub sigma: f64,
    pub opacity: (f64, f64),
}

impl Default for FloaterParams {
    fn default() -> Self {
        FloaterParams {
            count: 20,
            center: [0.15, -0.1, 1.6],
            radius: 0.04,
            sigma: 0.03,
            opacity: (0.02, 0.05),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ToySpec {
    Plane(PlaneParams),
    PlaneWithFloater(PlaneParams, FloaterParams),
    /// Gaussians stacked on the optical axis of a single camera so that the
    /// centre pixel blends exactly these `(depth, opacity)` pairs, in order.
    Ray4 {
        depths: Vec<f64>,
        opacities: Vec<f64>,
    },
}

impl ToySpec {
    /// Default fixture for one of `"plane"`, `"plane+floater"` or `"ray4"`.
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "plane" => Ok(ToySpec::Plane(PlaneParams::default())),
            "plane+floater" => Ok(ToySpec::PlaneWithFloater(
                PlaneParams::default(),
                FloaterParams::default(),
            )),
            "ray4" => Ok(ToySpec::Ray4 {
                depths: vec![1.0, 1.5, 5.0, 6.0],
                opacities: vec![0.2, 0.5, 0.2, 0.3],
            }),
            other => Err(Error::InvalidArgument(format!(
                "unknown toy scene {other:?} (expected plane, plane+floater or ray4)"
            ))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ToyScene {
    pub scene: Scene,
    pub cameras: Vec<Camera>,
    /// One label per gaussian, indexed like `scene.gaussians`.
    pub labels: Vec<GaussianLabel>,
    /// For `Ray4`, the pixel whose blend sequence is the requested one.
    pub target_pixel: Option<(usize, usize)>,
}

impl ToyScene {
    pub fn count(&self, label: GaussianLabel) -> usize {
        self.labels.iter().filter(|l| **l == label).count()
    }
}

const RAY4_SIZE: u32 = 33;

/// Builds a toy scene. The result is a pure function of `(spec, seed)`.
pub fn make_toy_scene(spec: &ToySpec, seed: u64) -> Result<ToyScene> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match spec {
        ToySpec::Plane(plane) => {
            let (gaussians, cameras) = build_plane(plane, &mut rng)?;
            let labels = vec![GaussianLabel::Surface; gaussians.len()];
            Ok(ToyScene {
                scene: Scene::new(gaussians),
                cameras,
                labels,
                target_pixel: None,
            })
        }
        ToySpec::PlaneWithFloater(plane, floater) => {
            let (mut gaussians, cameras) = build_plane(plane, &mut rng)?;
            let mut labels = vec![GaussianLabel::Surface; gaussians.len()];
            let blob = build_floater(floater, &mut rng)?;
            labels.extend(std::iter::repeat_n(GaussianLabel::Floater, blob.len()));
            gaussians.extend(blob);
            Ok(ToyScene {
                scene: Scene::new(gaussians),
                cameras,
                labels,
                target_pixel: None,
            })
        }
        ToySpec::Ray4 { depths, opacities } => build_ray(depths, opacities),
    }
}

fn positive_range(name: &str, (lo, hi): (f64, f64)) -> Result<()> {
    if lo > 0.0 && hi < 1.0 && lo <= hi {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "{name} opacity range ({lo}, {hi}) must lie in (0, 1)"
        )))
    }
}

fn build_plane(p: &PlaneParams, rng: &mut ChaCha8Rng) -> Result<(Vec<Gaussian>, Vec<Camera>)> {
    if p.views == 0 || p.image_size == 0 {
        return Err(Error::InvalidArgument(
            "plane needs at least one view and a positive image size".into(),
        ));
    }
    if !(p.spacing > 0.0 && p.half_extent > 0.0 && p.sigma > 0.0 && p.depth > 0.0) {
        return Err(Error::InvalidArgument(
            "plane depth, extent, spacing and sigma must be positive".into(),
        ));
    }
    positive_range("surface", p.opacity)?;
    positive_range("backing", p.backing_opacity)?;

    if p.backing_offset < 0.0 {
        return Err(Error::InvalidArgument(
            "backing offset must be non-negative".into(),
        ));
    }
    let steps = (2.0 * p.half_extent / p.spacing).round() as usize + 1;
    let sheets: &[(f64, f64, (f64, f64))] = if p.backing_offset > 0.0 {
        &[
            (0.0, 0.0, p.opacity),
            (p.backing_offset, 0.5 * p.spacing, p.backing_opacity),
        ]
    } else {
        &[(0.0, 0.0, p.opacity)]
    };
    let mut gaussians = Vec::with_capacity(sheets.len() * steps * steps);
    for &(dz, shift, (op_lo, op_hi)) in sheets {
        for iy in 0..steps {
            for ix in 0..steps {
                let x = -p.half_extent + ix as f64 * p.spacing + shift;
                let y = -p.half_extent + iy as f64 * p.spacing + shift;
                let z = p.depth + dz + rng.gen_range(-1.0..=1.0) * p.depth_jitter;
                let opacity = rng.gen_range(op_lo..=op_hi);
                let checker = ((x / 0.5).floor() as i64 + (y / 0.5).floor() as i64).rem_euclid(2);
                let base = if checker == 0 { 0.8 } else { 0.3 };
                let tint = rng.gen_range(-0.05..=0.05);
                let rgb = [base + tint, base * 0.9 + tint, base * 0.7 + tint];
                gaussians.push(Gaussian::new(
                    [x, y, z],
                    [1.0, 0.0, 0.0, 0.0],
                    [p.sigma, p.sigma, p.sigma * 0.1],
                    opacity,
                    vec![rgb.map(|c| (c - 0.5) / crate::raster::sh::SH_C0)],
                )?);
            }
        }
    }

    let target = [0.0, 0.0, p.depth];
    let cameras = (0..p.views)
        .map(|i| {
            let t = if p.views == 1 {
                0.0
            } else {
                i as f64 / (p.views - 1) as f64 * 2.0 - 1.0
            };
            let eye = [t * p.baseline, 0.3 * t * t * p.baseline, 0.0];
            Camera::look_at(
                i as i64,
                format!("view_{i:03}"),
                p.image_size,
                p.image_size,
                p.focal,
                eye,
                target,
                [0.0, -1.0, 0.0],
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((gaussians, cameras))
}

fn build_floater(f: &FloaterParams, rng: &mut ChaCha8Rng) -> Result<Vec<Gaussian>> {
    if f.count == 0 {
        return Err(Error::InvalidArgument(
            "floater count must be positive".into(),
        ));
    }
    if !(f.radius >= 0.0 && f.sigma > 0.0) {
        return Err(Error::InvalidArgument(
            "floater radius/sigma must be positive".into(),
        ));
    }
    positive_range("floater", f.opacity)?;
    (0..f.count)
        .map(|_| {
            // rejection-sample a point in the ball
            let offset = loop {
                let v: [f64; 3] = [
                    rng.gen_range(-1.0..=1.0),
                    rng.gen_range(-1.0..=1.0),
                    rng.gen_range(-1.0..=1.0),
                ];
                if v.iter().map(|c| c * c).sum::<f64>() <= 1.0 {
                    break v;
                }
            };
            let pos = [
                f.center[0] + offset[0] * f.radius,
                f.center[1] + offset[1] * f.radius,
                f.center[2] + offset[2] * f.radius,
            ];
            let opacity = rng.gen_range(f.opacity.0..=f.opacity.1);
            Gaussian::isotropic(pos, f.sigma, opacity, [0.1, 0.2, 0.9])
        })
        .collect()
}

fn build_ray(depths: &[f64], opacities: &[f64]) -> Result<ToyScene> {
    if depths.is_empty() || depths.len() != opacities.len() {
        return Err(Error::InvalidArgument(format!(
            "ray fixture needs matching non-empty depth/opacity lists ({} vs {})",
            depths.len(),
            opacities.len()
        )));
    }
    if depths.windows(2).any(|w| w[0] >= w[1]) || depths[0] <= crate::raster::NEAR_PLANE {
        return Err(Error::InvalidArgument(
            "ray depths must be strictly increasing and beyond the near plane".into(),
        ));
    }
    let gaussians = depths
        .iter()
        .zip(opacities)
        .map(|(&d, &o)| Gaussian::isotropic([0.0, 0.0, d], 0.01 * d, o, [0.5, 0.5, 0.5]))
        .collect::<Result<Vec<_>>>()?;
    let labels = vec![GaussianLabel::Ray; gaussians.len()];
    let camera = Camera::look_at(
        0,
        "ray",
        RAY4_SIZE,
        RAY4_SIZE,
        40.0,
        [0.0; 3],
        [0.0, 0.0, 1.0],
        [0.0, -1.0, 0.0],
    )?;
    let c = (RAY4_SIZE / 2) as usize;
    Ok(ToyScene {
        scene: Scene::new(gaussians),
        cameras: vec![camera],
        labels,
        target_pixel: Some((c, c)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_name_is_an_error() {
        assert!(ToySpec::from_name("cube").is_err());
        assert!(ToySpec::from_name("plane").is_ok());
    }

    #[test]
    fn non_positive_counts_are_errors() {
        let plane = PlaneParams {
            views: 0,
            ..Default::default()
        };
        assert!(make_toy_scene(&ToySpec::Plane(plane), 0).is_err());
        let floater = FloaterParams {
            count: 0,
            ..Default::default()
        };
        let spec = ToySpec::PlaneWithFloater(PlaneParams::default(), floater);
        assert!(make_toy_scene(&spec, 0).is_err());
    }

    #[test]
    fn same_seed_same_scene() {
        let spec = ToySpec::from_name("plane+floater").unwrap();
        let a = make_toy_scene(&spec, 7).unwrap();
        let b = make_toy_scene(&spec, 7).unwrap();
        assert_eq!(a.scene, b.scene);
        assert_eq!(a.cameras, b.cameras);
        assert_eq!(a.labels, b.labels);
        let c = make_toy_scene(&spec, 8).unwrap();
        assert_ne!(a.scene, c.scene);
    }

    #[test]
    fn ray4_layout() {
        let toy = make_toy_scene(&ToySpec::from_name("ray4").unwrap(), 0).unwrap();
        assert_eq!(toy.scene.len(), 4);
        assert_eq!(toy.target_pixel, Some((16, 16)));
        let ops: Vec<f64> = toy.scene.gaussians.iter().map(|g| g.opacity()).collect();
        assert_eq!(ops, vec![0.2, 0.5, 0.2, 0.3]);
        let bad = ToySpec::Ray4 {
            depths: vec![1.0, 0.5],
            opacities: vec![0.5, 0.5],
        };
        assert!(make_toy_scene(&bad, 0).is_err());
    }
}
