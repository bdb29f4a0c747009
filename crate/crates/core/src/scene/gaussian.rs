use nalgebra::{Matrix3, Quaternion, UnitQuaternion, Vector3};

use crate::error::{Error, Result};
use crate::raster::sh::SH_C0;

/// Degree-3 spherical harmonics: 16 coefficients per colour channel.
pub const MAX_SH_COEFFS: usize = 16;

/// Stored-form gaussian parameters, exactly as they appear in a PLY file.
///
/// Opacity is a logit, scales are natural logs and the quaternion
/// `(w, x, y, z)` is not necessarily normalized. `f_rest` is channel-major:
/// all higher-order red coefficients, then green, then blue.
#[derive(Clone, Debug, PartialEq)]
pub struct RawGaussian {
    pub position: [f32; 3],
    pub normal: [f32; 3],
    pub f_dc: [f32; 3],
    pub f_rest: Vec<f32>,
    pub opacity: f32,
    pub scale: [f32; 3],
    pub rotation: [f32; 4],
}

/// One anisotropic 3D gaussian in activated form, alongside the raw record it
/// was created from. All rendering and pruning math reads the activated
/// fields; I/O reads and writes [`RawGaussian`].
#[derive(Clone, Debug, PartialEq)]
pub struct Gaussian {
    position: [f64; 3],
    rotation: [f64; 4],
    scale: [f64; 3],
    opacity: f64,
    sh: Vec<[f64; 3]>,
    raw: RawGaussian,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

fn normalize_quat(q: [f64; 4]) -> Result<[f64; 4]> {
    let n = q.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !n.is_finite() || n < 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "quaternion {q:?} cannot be normalized"
        )));
    }
    Ok(q.map(|v| v / n))
}

fn check_finite(name: &str, values: impl IntoIterator<Item = f64>) -> Result<()> {
    if values.into_iter().all(f64::is_finite) {
        Ok(())
    } else {
        Err(Error::NonFinite(name.to_string()))
    }
}

/// Converts a stored-form record into an activated gaussian:
/// sigmoid opacity, exponentiated scales, normalized quaternion.
pub fn activate(raw: &RawGaussian) -> Result<Gaussian> {
    check_finite("position", raw.position.map(f64::from))?;
    check_finite("normal", raw.normal.map(f64::from))?;
    check_finite("f_dc", raw.f_dc.map(f64::from))?;
    check_finite("f_rest", raw.f_rest.iter().map(|&v| v as f64))?;
    check_finite("opacity", [raw.opacity as f64])?;
    check_finite("scale", raw.scale.map(f64::from))?;
    check_finite("rotation", raw.rotation.map(f64::from))?;

    let scale = raw.scale.map(|s| (s as f64).exp());
    if scale.iter().any(|s| !s.is_finite() || *s <= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "log-scale {:?} does not give a finite positive scale",
            raw.scale
        )));
    }
    let rotation = normalize_quat(raw.rotation.map(f64::from))?;
    let sh = sh_from_raw(&raw.f_dc, &raw.f_rest)?;
    Ok(Gaussian {
        position: raw.position.map(f64::from),
        rotation,
        scale,
        opacity: sigmoid(raw.opacity as f64),
        sh,
        raw: raw.clone(),
    })
}

/// Converts an activated gaussian back to stored form (f32 logit opacity,
/// log scales, normalized quaternion). Normals are written as stored.
pub fn deactivate(g: &Gaussian) -> RawGaussian {
    let rest_per_channel = g.sh.len() - 1;
    let mut f_rest = vec![0.0f32; 3 * rest_per_channel];
    for c in 0..3 {
        for k in 1..g.sh.len() {
            f_rest[c * rest_per_channel + (k - 1)] = g.sh[k][c] as f32;
        }
    }
    RawGaussian {
        position: g.position.map(|v| v as f32),
        normal: g.raw.normal,
        f_dc: g.sh[0].map(|v| v as f32),
        f_rest,
        opacity: logit(g.opacity) as f32,
        scale: g.scale.map(|s| s.ln() as f32),
        rotation: g.rotation.map(|v| v as f32),
    }
}

fn sh_from_raw(f_dc: &[f32; 3], f_rest: &[f32]) -> Result<Vec<[f64; 3]>> {
    if !f_rest.len().is_multiple_of(3) || f_rest.len() > 3 * (MAX_SH_COEFFS - 1) {
        return Err(Error::InvalidArgument(format!(
            "f_rest length {} is not a multiple of 3 in [0, 45]",
            f_rest.len()
        )));
    }
    let per_channel = f_rest.len() / 3;
    let mut sh = vec![[0.0; 3]; 1 + per_channel];
    sh[0] = f_dc.map(f64::from);
    for c in 0..3 {
        for k in 0..per_channel {
            sh[k + 1][c] = f_rest[c * per_channel + k] as f64;
        }
    }
    Ok(sh)
}

impl Gaussian {
    /// Builds a gaussian from activated parameters. `sh[k][c]` is coefficient
    /// `k` of colour channel `c`; at least the DC term is required.
    pub fn new(
        position: [f64; 3],
        rotation: [f64; 4],
        scale: [f64; 3],
        opacity: f64,
        sh: Vec<[f64; 3]>,
    ) -> Result<Self> {
        check_finite("position", position)?;
        check_finite("rotation", rotation)?;
        check_finite("scale", scale)?;
        check_finite("opacity", [opacity])?;
        check_finite("sh", sh.iter().flatten().copied())?;
        if scale.iter().any(|s| *s <= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "scale {scale:?} must be strictly positive"
            )));
        }
        if !(opacity > 0.0 && opacity < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "opacity {opacity} outside (0, 1)"
            )));
        }
        if sh.is_empty() || sh.len() > MAX_SH_COEFFS {
            return Err(Error::InvalidArgument(format!(
                "{} SH coefficients per channel, expected 1..=16",
                sh.len()
            )));
        }
        let rotation = normalize_quat(rotation)?;
        let mut g = Gaussian {
            position,
            rotation,
            scale,
            opacity,
            sh,
            raw: RawGaussian {
                position: [0.0; 3],
                normal: [0.0; 3],
                f_dc: [0.0; 3],
                f_rest: Vec::new(),
                opacity: 0.0,
                scale: [0.0; 3],
                rotation: [0.0; 4],
            },
        };
        g.raw = deactivate(&g);
        Ok(g)
    }

    /// Axis-aligned isotropic gaussian with a view-independent colour.
    pub fn isotropic(position: [f64; 3], sigma: f64, opacity: f64, rgb: [f64; 3]) -> Result<Self> {
        Self::new(
            position,
            [1.0, 0.0, 0.0, 0.0],
            [sigma; 3],
            opacity,
            vec![rgb.map(|c| (c - 0.5) / SH_C0)],
        )
    }

    pub fn position(&self) -> [f64; 3] {
        self.position
    }

    /// Unit quaternion `(w, x, y, z)`.
    pub fn rotation(&self) -> [f64; 4] {
        self.rotation
    }

    pub fn scale(&self) -> [f64; 3] {
        self.scale
    }

    pub fn opacity(&self) -> f64 {
        self.opacity
    }

    pub fn sh(&self) -> &[[f64; 3]] {
        &self.sh
    }

    pub fn raw(&self) -> &RawGaussian {
        &self.raw
    }

    pub fn rotation_matrix(&self) -> Matrix3<f64> {
        let [w, x, y, z] = self.rotation;
        UnitQuaternion::from_quaternion(Quaternion::new(w, x, y, z))
            .to_rotation_matrix()
            .into_inner()
    }

    /// World-space covariance `R S Sᵀ Rᵀ`.
    pub fn covariance(&self) -> Matrix3<f64> {
        let r = self.rotation_matrix();
        let s = Matrix3::from_diagonal(&Vector3::from(self.scale));
        let m = r * s;
        m * m.transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw() -> RawGaussian {
        RawGaussian {
            position: [0.5, -1.0, 3.0],
            normal: [0.0; 3],
            f_dc: [0.1, 0.2, 0.3],
            f_rest: vec![0.0; 9],
            opacity: 0.0,
            scale: [0.0; 3],
            rotation: [2.0, 0.0, 0.0, 0.0],
        }
    }

    #[test]
    fn activation_examples() {
        let g = activate(&raw()).unwrap();
        assert_eq!(g.opacity(), 0.5);
        assert_eq!(g.scale(), [1.0, 1.0, 1.0]);
        assert_eq!(g.rotation(), [1.0, 0.0, 0.0, 0.0]);
        assert_eq!(g.sh().len(), 4);
    }

    #[test]
    fn activation_rejects_non_finite() {
        let mut r = raw();
        r.opacity = f32::NAN;
        assert!(matches!(activate(&r), Err(Error::NonFinite(_))));
        let mut r = raw();
        r.position[1] = f32::INFINITY;
        assert!(activate(&r).is_err());
        let mut r = raw();
        r.rotation = [0.0; 4];
        assert!(activate(&r).is_err());
    }

    #[test]
    fn rest_must_be_multiple_of_three() {
        let mut r = raw();
        r.f_rest = vec![0.0; 4];
        assert!(activate(&r).is_err());
        r.f_rest = vec![0.0; 48];
        assert!(activate(&r).is_err());
    }

    #[test]
    fn rest_layout_is_channel_major() {
        let mut r = raw();
        r.f_rest = (0..9).map(|i| i as f32).collect();
        let g = activate(&r).unwrap();
        // red k=1..3 -> 0,1,2; green -> 3,4,5; blue -> 6,7,8
        assert_eq!(g.sh()[1], [0.0, 3.0, 6.0]);
        assert_eq!(g.sh()[3], [2.0, 5.0, 8.0]);
        assert_eq!(deactivate(&g).f_rest, r.f_rest);
    }

    #[test]
    fn new_validates() {
        let sh = vec![[0.0; 3]];
        assert!(Gaussian::new(
            [0.0; 3],
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 1.0],
            0.5,
            sh.clone()
        )
        .is_err());
        assert!(Gaussian::new([0.0; 3], [1.0, 0.0, 0.0, 0.0], [1.0; 3], 1.0, sh.clone()).is_err());
        assert!(Gaussian::new([0.0; 3], [1.0, 0.0, 0.0, 0.0], [1.0; 3], 0.5, vec![]).is_err());
        let g = Gaussian::new([0.0; 3], [0.0, 0.0, 0.0, 3.0], [1.0; 3], 0.5, sh).unwrap();
        assert_eq!(g.rotation(), [0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn covariance_of_rotated_anisotropic() {
        // 90 degrees about z swaps the x and y variances.
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let g = Gaussian::new(
            [0.0; 3],
            [h, 0.0, 0.0, h],
            [2.0, 1.0, 0.5],
            0.5,
            vec![[0.0; 3]],
        )
        .unwrap();
        let c = g.covariance();
        assert!((c[(0, 0)] - 1.0).abs() < 1e-12);
        assert!((c[(1, 1)] - 4.0).abs() < 1e-12);
        assert!((c[(2, 2)] - 0.25).abs() < 1e-12);
        assert!(c[(0, 1)].abs() < 1e-12);
    }
}
