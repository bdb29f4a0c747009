use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

/// Maximum entry of `RᵀR − I` accepted for a camera rotation.
pub const ORTHONORMAL_TOLERANCE: f64 = 1e-5;

/// Pinhole camera with a rigid pose.
///
/// `rotation` maps camera axes to world axes (camera-to-world) and `position`
/// is the camera centre in world units. Camera space follows the usual
/// splatting convention: x right, y down, z forward. The principal point is
/// the image centre and pixel `(x, y)` has its centre at `(x + 0.5, y + 0.5)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Camera {
    pub id: i64,
    pub image_name: String,
    width: u32,
    height: u32,
    fx: f64,
    fy: f64,
    rotation: Matrix3<f64>,
    position: Vector3<f64>,
}

/// Largest absolute entry of `RᵀR − I`.
pub(crate) fn orthonormality_error(r: &Matrix3<f64>) -> f64 {
    (r.transpose() * r - Matrix3::identity()).abs().max()
}

impl Camera {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        id: i64,
        image_name: impl Into<String>,
        width: u32,
        height: u32,
        fx: f64,
        fy: f64,
        rotation: Matrix3<f64>,
        position: Vector3<f64>,
    ) -> Result<Self> {
        let err = |message: String| Error::Camera { id, message };
        if width == 0 || height == 0 {
            return Err(err(format!("image size {width}x{height} must be positive")));
        }
        if !(fx > 0.0 && fy > 0.0 && fx.is_finite() && fy.is_finite()) {
            return Err(err(format!("focal lengths ({fx}, {fy}) must be positive")));
        }
        if rotation
            .iter()
            .chain(position.iter())
            .any(|v| !v.is_finite())
        {
            return Err(err("non-finite pose".into()));
        }
        let drift = orthonormality_error(&rotation);
        if drift > ORTHONORMAL_TOLERANCE {
            return Err(err(format!(
                "rotation is not orthonormal (drift {drift:.3e})"
            )));
        }
        if rotation.determinant() < 0.0 {
            return Err(err("rotation is a reflection".into()));
        }
        Ok(Camera {
            id,
            image_name: image_name.into(),
            width,
            height,
            fx,
            fy,
            rotation,
            position,
        })
    }

    /// Camera at `eye` looking at `target`, with image "up" as close to
    /// `world_up` as possible.
    #[allow(clippy::too_many_arguments)]
    pub fn look_at(
        id: i64,
        image_name: impl Into<String>,
        width: u32,
        height: u32,
        focal: f64,
        eye: [f64; 3],
        target: [f64; 3],
        world_up: [f64; 3],
    ) -> Result<Self> {
        let eye = Vector3::from(eye);
        let forward = (Vector3::from(target) - eye).normalize();
        let up = Vector3::from(world_up);
        let down = -up + forward * up.dot(&forward);
        if down.norm() < 1e-9 || !forward.iter().all(|v| v.is_finite()) {
            return Err(Error::Camera {
                id,
                message: "degenerate look-at frame".into(),
            });
        }
        let down = down.normalize();
        let right = down.cross(&forward);
        let rotation = Matrix3::from_columns(&[right, down, forward]);
        Camera::new(id, image_name, width, height, focal, focal, rotation, eye)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn fx(&self) -> f64 {
        self.fx
    }

    pub fn fy(&self) -> f64 {
        self.fy
    }

    pub fn cx(&self) -> f64 {
        self.width as f64 * 0.5
    }

    pub fn cy(&self) -> f64 {
        self.height as f64 * 0.5
    }

    /// Camera-to-world rotation.
    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn position(&self) -> &Vector3<f64> {
        &self.position
    }

    /// Same intrinsics, new pose. The rotation is validated like in [`Camera::new`].
    pub fn with_pose(&self, rotation: Matrix3<f64>, position: Vector3<f64>) -> Result<Self> {
        Camera::new(
            self.id,
            self.image_name.clone(),
            self.width,
            self.height,
            self.fx,
            self.fy,
            rotation,
            position,
        )
    }

    pub fn world_to_camera(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation.transpose() * (p - self.position)
    }
}
