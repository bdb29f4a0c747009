//! EWA projection of 3D gaussians to screen-space conics.

use nalgebra::{Matrix2x3, Matrix3, Vector3};

use super::sh::eval_color;
use super::NEAR_PLANE;
use crate::scene::{Camera, Gaussian};

/// Screen-space variance added to both axes before inversion (px²).
pub const LOW_PASS: f64 = 0.3;
/// Splat support in standard deviations.
pub const SUPPORT_SIGMAS: f64 = 3.0;
const MAX_POWER: f64 = -0.5 * SUPPORT_SIGMAS * SUPPORT_SIGMAS;

/// A gaussian projected into one view.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Projected2D {
    pub gaussian_id: usize,
    /// Pixel coordinates; pixel `(x, y)` has its centre at `(x + 0.5, y + 0.5)`.
    pub mean2d: [f64; 2],
    /// Inverse 2D covariance `(a, b, c)` for the matrix `[[a, b], [b, c]]`.
    pub conic: [f64; 3],
    /// Camera-space z of the centre.
    pub depth: f64,
    /// `3 * sqrt(largest eigenvalue)` of the dilated 2D covariance (pixels).
    pub radius: f64,
    pub opacity: f64,
    pub color: [f64; 3],
}

impl Projected2D {
    /// Opacity-weighted falloff at pixel-space point `(px, py)`, clamped to
    /// 0.99. Zero outside the 3σ support ellipse.
    #[inline]
    pub fn alpha_at(&self, px: f64, py: f64) -> f64 {
        let dx = self.mean2d[0] - px;
        let dy = self.mean2d[1] - py;
        let [a, b, c] = self.conic;
        let power = -0.5 * (a * dx * dx + c * dy * dy) - b * dx * dy;
        if !(MAX_POWER..=0.0).contains(&power) {
            return 0.0;
        }
        (self.opacity * power.exp()).min(0.99)
    }

    /// Inclusive pixel index range whose centres can fall inside the support,
    /// clipped to the image. `None` if it misses the image entirely.
    pub fn pixel_bounds(&self, width: usize, height: usize) -> Option<([usize; 2], [usize; 2])> {
        let lo_x = (self.mean2d[0] - self.radius - 0.5).ceil().max(0.0);
        let hi_x = (self.mean2d[0] + self.radius - 0.5)
            .floor()
            .min(width as f64 - 1.0);
        let lo_y = (self.mean2d[1] - self.radius - 0.5).ceil().max(0.0);
        let hi_y = (self.mean2d[1] + self.radius - 0.5)
            .floor()
            .min(height as f64 - 1.0);
        if lo_x > hi_x || lo_y > hi_y {
            return None;
        }
        Some((
            [lo_x as usize, lo_y as usize],
            [hi_x as usize, hi_y as usize],
        ))
    }
}

/// Projection without the off-screen cull: only the near plane and degenerate
/// covariances are rejected.
pub(crate) fn project_unculled(id: usize, g: &Gaussian, cam: &Camera) -> Option<Projected2D> {
    let world = Vector3::from(g.position());
    let p = cam.world_to_camera(&world);
    if p.z <= NEAR_PLANE {
        return None;
    }
    let (fx, fy) = (cam.fx(), cam.fy());
    let z2 = p.z * p.z;
    let jacobian = Matrix2x3::new(fx / p.z, 0.0, -fx * p.x / z2, 0.0, fy / p.z, -fy * p.y / z2);
    let w: Matrix3<f64> = cam.rotation().transpose();
    let t = jacobian * w;
    let cov = t * g.covariance() * t.transpose();
    let a = cov[(0, 0)] + LOW_PASS;
    let b = cov[(0, 1)];
    let c = cov[(1, 1)] + LOW_PASS;
    let det = a * c - b * b;
    if det <= 0.0 || !det.is_finite() {
        return None;
    }
    let mid = 0.5 * (a + c);
    let lambda_max = mid + (mid * mid - det).max(0.0).sqrt();
    let dir = (world - cam.position()).normalize();
    Some(Projected2D {
        gaussian_id: id,
        mean2d: [fx * p.x / p.z + cam.cx(), fy * p.y / p.z + cam.cy()],
        conic: [c / det, -b / det, a / det],
        depth: p.z,
        radius: SUPPORT_SIGMAS * lambda_max.sqrt(),
        opacity: g.opacity(),
        color: eval_color(g.sh(), [dir.x, dir.y, dir.z]),
    })
}

/// Projects one gaussian into `cam`. Returns `None` (culled) when the centre
/// is at or behind the near plane, or when its 3σ extent misses the image.
pub fn project_gaussian(id: usize, g: &Gaussian, cam: &Camera) -> Option<Projected2D> {
    let p = project_unculled(id, g, cam)?;
    p.pixel_bounds(cam.width() as usize, cam.height() as usize)?;
    Some(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cam(size: u32, focal: f64) -> Camera {
        Camera::look_at(
            0,
            "c",
            size,
            size,
            focal,
            [0.0; 3],
            [0.0, 0.0, 1.0],
            [0.0, -1.0, 0.0],
        )
        .unwrap()
    }

    #[test]
    fn behind_camera_is_culled() {
        let g = Gaussian::isotropic([0.0, 0.0, -1.0], 0.1, 0.5, [0.5; 3]).unwrap();
        assert!(project_gaussian(0, &g, &cam(32, 32.0)).is_none());
        let g = Gaussian::isotropic([0.0, 0.0, 0.2], 0.1, 0.5, [0.5; 3]).unwrap();
        assert!(project_gaussian(0, &g, &cam(32, 32.0)).is_none());
    }

    #[test]
    fn off_screen_is_culled() {
        let g = Gaussian::isotropic([50.0, 0.0, 2.0], 0.01, 0.5, [0.5; 3]).unwrap();
        assert!(project_gaussian(0, &g, &cam(32, 32.0)).is_none());
        assert!(project_unculled(0, &g, &cam(32, 32.0)).is_some());
    }

    #[test]
    fn alpha_is_zero_outside_support() {
        let g = Gaussian::isotropic([0.0, 0.0, 2.0], 0.05, 0.9, [0.5; 3]).unwrap();
        let p = project_gaussian(0, &g, &cam(64, 64.0)).unwrap();
        let var = 1.0 / p.conic[0];
        let inside = p.mean2d[0] + 2.9 * var.sqrt();
        let outside = p.mean2d[0] + 3.1 * var.sqrt();
        assert!(p.alpha_at(inside, p.mean2d[1]) > 0.0);
        assert_eq!(p.alpha_at(outside, p.mean2d[1]), 0.0);
        assert!((p.alpha_at(p.mean2d[0], p.mean2d[1]) - 0.9).abs() < 1e-15);
    }
}
