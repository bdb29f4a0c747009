//! Novel camera poses made by rotating training cameras about the scene's
//! estimated up-axis.

use nalgebra::{Matrix3, Rotation3, Unit, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scene::Camera;

/// Allowed deviation of a rotation axis from unit length.
pub const AXIS_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct PoseSampler {
    /// Unit rotation axis.
    pub y_bar: Vector3<f64>,
    /// Inclusive angle range in degrees.
    pub theta_range: (f64, f64),
    /// Point the axis passes through.
    pub center: Vector3<f64>,
    pub seed: u64,
}

impl PoseSampler {
    pub fn new(y_bar: Vector3<f64>, seed: u64) -> Self {
        PoseSampler {
            y_bar,
            theta_range: (-10.0, 10.0),
            center: Vector3::zeros(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_axis(&self.y_bar)?;
        let (lo, hi) = self.theta_range;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::InvalidArgument(format!(
                "invalid angle range [{lo}, {hi}]"
            )));
        }
        if self.center.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("rotation center".into()));
        }
        Ok(())
    }
}

fn check_axis(axis: &Vector3<f64>) -> Result<()> {
    let norm = axis.norm();
    if !norm.is_finite() || (norm - 1.0).abs() > AXIS_TOLERANCE {
        return Err(Error::InvalidArgument(format!(
            "rotation axis must be unit length, has norm {norm}"
        )));
    }
    Ok(())
}

/// Column `column` of the camera-to-world rotation. Column 0 is the camera's
/// x axis, column 1 its (downward) y axis.
pub fn up_vector(cam: &Camera, column: usize) -> Result<Vector3<f64>> {
    if column > 2 {
        return Err(Error::InvalidArgument(format!(
            "rotation column {column} out of range"
        )));
    }
    Ok(cam.rotation().column(column).into_owned())
}

/// Normalized mean of [`up_vector`] over `cameras`.
pub fn estimate_axis(cameras: &[Camera], column: usize) -> Result<Vector3<f64>> {
    if cameras.is_empty() {
        return Err(Error::InsufficientData(
            "no cameras to estimate an axis from".into(),
        ));
    }
    let mut sum = Vector3::zeros();
    for cam in cameras {
        sum += up_vector(cam, column)?;
    }
    let mean = sum / cameras.len() as f64;
    let norm = mean.norm();
    if norm < 1e-6 {
        return Err(Error::InsufficientData(format!(
            "camera up-vectors cancel out (mean norm {norm:.3e})"
        )));
    }
    Ok(mean / norm)
}

/// Rotation by `theta_deg` about `axis` (right-handed).
pub fn axis_rotation(axis: &Vector3<f64>, theta_deg: f64) -> Result<Matrix3<f64>> {
    check_axis(axis)?;
    if !theta_deg.is_finite() {
        return Err(Error::NonFinite("rotation angle".into()));
    }
    let unit = Unit::new_normalize(*axis);
    Ok(Rotation3::from_axis_angle(&unit, theta_deg.to_radians()).into_inner())
}

/// Rotates the camera centre about the line through `center` along `axis`
/// and turns its orientation by the same rotation. Intrinsics are kept.
pub fn rotate_pose(
    cam: &Camera,
    axis: &Vector3<f64>,
    theta_deg: f64,
    center: &Vector3<f64>,
) -> Result<Camera> {
    let rot = axis_rotation(axis, theta_deg)?;
    if theta_deg == 0.0 {
        return Ok(cam.clone());
    }
    let position = center + rot * (cam.position() - center);
    cam.with_pose(rot * cam.rotation(), position)
}

/// `k` cameras, the i-th made from training camera `i mod n` rotated by an
/// angle drawn uniformly from the sampler's range. Ids are `0..k`.
pub fn sample_novel_poses(
    cameras: &[Camera],
    sampler: &PoseSampler,
    k: usize,
) -> Result<Vec<Camera>> {
    sampler.validate()?;
    if k == 0 {
        return Err(Error::InvalidArgument(
            "number of poses must be at least 1".into(),
        ));
    }
    if cameras.is_empty() {
        return Err(Error::InsufficientData("no training cameras".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(sampler.seed);
    let (lo, hi) = sampler.theta_range;
    (0..k)
        .map(|i| {
            let src = &cameras[i % cameras.len()];
            let theta = if lo == hi { lo } else { rng.gen_range(lo..=hi) };
            let mut cam = rotate_pose(src, &sampler.y_bar, theta, &sampler.center)?;
            cam.id = i as i64;
            cam.image_name = format!("{}_novel_{i}", src.image_name);
            Ok(cam)
        })
        .collect()
}
